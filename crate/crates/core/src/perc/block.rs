//! Block construction: nice and good sites from a city configuration.
//!
//! Site `(n1, n2)` sits at `(L·n1, L·n2)`; the four edges at a site have
//! midpoints `v + (±L/2, ±L/2)`. A centre is nice when the open `L × L`
//! square around it has balanced quadrant counts, a large robust component
//! and a short robust network; a site is good when it and its four edge
//! midpoints are all nice.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{dependence_report, pair_test, DependenceReport, Provenance, Site, SiteField, TiltedLattice, TEST_PAIRS};
use crate::error::{Error, Result};
use crate::experiment::{ExperimentResult, Table};
use crate::geom::{sample_ppp, Configuration, Point, Window};
use crate::robust::{robust_subnetwork, RobustRule};
use crate::seed;
use crate::stats::proportion;

/// Relative slack on the count and component thresholds, for float round-off only.
const THRESHOLD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockParams {
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "c_L")]
    pub c_l: f64,
    #[serde(default = "default_rule")]
    pub rule: RobustRule,
}

fn default_rule() -> RobustRule {
    RobustRule::Rng
}

impl BlockParams {
    pub fn new(l: f64, c_l: f64) -> Self {
        BlockParams {
            l,
            c_l,
            rule: RobustRule::Rng,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l.is_finite() && self.l > 0.0) {
            return Err(Error::invalid("L", format!("must be positive, got {}", self.l)));
        }
        if !(self.c_l > 0.0) {
            return Err(Error::invalid("c_L", format!("must be positive, got {}", self.c_l)));
        }
        self.rule.validate()
    }
}

/// Thresholds of the nice conditions, as multiples of `L²` (rate-1 counts).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NiceThresholds {
    /// Each quadrant must hold between `count_lo·L²` and `count_hi·L²` cities.
    pub count_lo: f64,
    pub count_hi: f64,
    /// The largest robust component must hold at least `n1_frac·L²` cities.
    pub n1_frac: f64,
}

impl Default for NiceThresholds {
    fn default() -> Self {
        NiceThresholds {
            count_lo: 0.24,
            count_hi: 0.26,
            n1_frac: 0.99,
        }
    }
}

impl NiceThresholds {
    /// Loose thresholds under which good sites are common at small `L`, so
    /// that dependence tests on block marks see both outcomes.
    pub fn relaxed() -> Self {
        NiceThresholds {
            count_lo: 0.15,
            count_hi: 0.35,
            n1_frac: 0.6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.count_lo >= 0.0 && self.count_lo <= self.count_hi && self.count_hi.is_finite()) {
            return Err(Error::invalid("thresholds", "need 0 ≤ count_lo ≤ count_hi"));
        }
        if !(self.n1_frac.is_finite() && self.n1_frac >= 0.0) {
            return Err(Error::invalid("thresholds", "n1_frac must be non-negative"));
        }
        Ok(())
    }
}

/// The three nice conditions for one square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NiceFlags {
    /// Quadrant counts: lower-left, lower-right, upper-left, upper-right.
    pub counts: [usize; 4],
    pub counts_ok: bool,
    /// Size of the largest robust component.
    pub n1: usize,
    pub n1_ok: bool,
    /// Total length of the robust subnetwork.
    pub len: f64,
    pub len_ok: bool,
    pub nice: bool,
}

impl NiceFlags {
    /// The flags under a different length cap.
    pub fn with_cap(mut self, c_l: f64) -> Self {
        self.len_ok = self.len <= c_l;
        self.nice = self.counts_ok && self.n1_ok && self.len_ok;
        self
    }
}

pub fn classify_nice(config: &Configuration, center: Point, params: &BlockParams) -> Result<NiceFlags> {
    classify_nice_with(config, center, params, &NiceThresholds::default())
}

/// Evaluates the nice conditions on the open square `S_v` of side `L` around
/// `center`. The robust subnetwork is taken with `S_v` as its window.
pub fn classify_nice_with(
    config: &Configuration,
    center: Point,
    params: &BlockParams,
    thresholds: &NiceThresholds,
) -> Result<NiceFlags> {
    params.validate()?;
    thresholds.validate()?;
    let l = params.l;
    let square = Window::centered_square(center, l)?;
    if !config.window.contains_window(&square) {
        return Err(Error::invalid(
            "center",
            format!("square of side {l} around ({}, {}) leaves the window", center.x, center.y),
        ));
    }
    let (sub, _) = config.restrict_open(square);
    let mut counts = [0usize; 4];
    for p in &sub.points {
        let k = usize::from(p.x >= center.x) + 2 * usize::from(p.y >= center.y);
        counts[k] += 1;
    }
    let area = l * l;
    let lo = thresholds.count_lo * area * (1.0 - THRESHOLD_TOL);
    let hi = thresholds.count_hi * area * (1.0 + THRESHOLD_TOL);
    let counts_ok = counts.iter().all(|&c| (lo..=hi).contains(&(c as f64)));
    let report = robust_subnetwork(&sub, params.rule)?;
    let n1 = report.largest_component_size;
    let n1_ok = n1 as f64 >= thresholds.n1_frac * area * (1.0 - THRESHOLD_TOL);
    let len = report.net.total_length();
    Ok(NiceFlags {
        counts,
        counts_ok,
        n1,
        n1_ok,
        len,
        len_ok: false,
        nice: false,
    }
    .with_cap(params.c_l))
}

pub fn site_center((n1, n2): Site, l: f64) -> Point {
    Point::new(l * n1 as f64, l * n2 as f64)
}

/// Centres of the four edge midpoints at a site.
pub fn midpoints(v: Point, l: f64) -> [Point; 4] {
    let h = l / 2.0;
    [
        Point::new(v.x - h, v.y - h),
        Point::new(v.x + h, v.y - h),
        Point::new(v.x - h, v.y + h),
        Point::new(v.x + h, v.y + h),
    ]
}

/// Nice flags of a site and its four midpoints (site first), with a memo
/// keyed by centre so shared midpoints are evaluated once.
fn site_flags(
    config: &Configuration,
    site: Site,
    params: &BlockParams,
    thresholds: &NiceThresholds,
    memo: &mut HashMap<(u64, u64), NiceFlags>,
) -> Result<[NiceFlags; 5]> {
    let v = site_center(site, params.l);
    let m = midpoints(v, params.l);
    let centers = [v, m[0], m[1], m[2], m[3]];
    let mut out = Vec::with_capacity(5);
    for c in centers {
        let key = (c.x.to_bits(), c.y.to_bits());
        let flags = match memo.get(&key) {
            Some(f) => *f,
            None => {
                let f = classify_nice_with(config, c, params, thresholds)?;
                memo.insert(key, f);
                f
            }
        };
        out.push(flags);
    }
    Ok(out.try_into().expect("five centres"))
}

/// Good marks of the given sites in one configuration.
pub fn block_good_marks(
    config: &Configuration,
    sites: &[Site],
    params: &BlockParams,
    thresholds: &NiceThresholds,
) -> Result<Vec<bool>> {
    let mut memo = HashMap::new();
    sites
        .iter()
        .map(|&s| Ok(site_flags(config, s, params, thresholds, &mut memo)?.iter().all(|f| f.nice)))
        .collect()
}

/// Window holding every square needed to mark the sites of `lattice`.
fn lattice_window(lattice: &TiltedLattice, l: f64) -> Result<Window> {
    let w = l * (lattice.half_width as f64 + 1.0);
    let h = l * (lattice.half_height as f64 + 1.0);
    Window::new(-w, -h, w, h)
}

/// Samples rate-`intensity` cities around the lattice patch and marks every site.
pub fn block_site_field(
    lattice: TiltedLattice,
    params: &BlockParams,
    thresholds: &NiceThresholds,
    intensity: f64,
    seed: u64,
) -> Result<SiteField> {
    params.validate()?;
    let config = sample_ppp(lattice_window(&lattice, params.l)?, intensity, seed)?;
    let sites: Vec<Site> = lattice.sites().collect();
    let marks = block_good_marks(&config, &sites, params, thresholds)?;
    let good: HashMap<Site, bool> = sites.into_iter().zip(marks).collect();
    Ok(SiteField::from_fn(
        lattice,
        Provenance::Block {
            params: *params,
            thresholds: *thresholds,
            seed,
            config_fingerprint: config.fingerprint(),
        },
        |s| good[&s],
    ))
}

/// Independence test on block marks: each sample is a fresh configuration
/// covering the sites of [`TEST_PAIRS`].
pub fn block_dependence_test(
    params: &BlockParams,
    thresholds: &NiceThresholds,
    intensity: f64,
    samples: usize,
    alpha: f64,
    master_seed: u64,
) -> Result<DependenceReport> {
    params.validate()?;
    let l = params.l;
    let sites: Vec<Site> = vec![(0, 0), (1, 1), (2, 0), (0, 2), (2, 2)];
    let window = Window::new(-l, -l, 3.0 * l, 3.0 * l)?;
    let marks: Vec<Vec<bool>> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let s = seed::derive_seed(master_seed, &[k as u64]);
            let config = sample_ppp(window, intensity, s)?;
            block_good_marks(&config, &sites, params, thresholds)
        })
        .collect::<Result<_>>()?;
    let pos = |site: Site| sites.iter().position(|&x| x == site).expect("tested site");
    let tests = TEST_PAIRS
        .iter()
        .map(|&(a, b)| {
            let (ia, ib) = (pos(a), pos(b));
            let joint: Vec<(bool, bool)> = marks.iter().map(|m| (m[ia], m[ib])).collect();
            pair_test(a, b, &joint)
        })
        .collect();
    Ok(dependence_report(samples, alpha, tests))
}

/// A sweep of `P(good)` over block scales and length caps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoodSweep {
    #[serde(rename = "Ls")]
    pub ls: Vec<f64>,
    /// Fixed length caps applied at every `L`.
    #[serde(rename = "c_Ls", default)]
    pub c_ls: Vec<f64>,
    /// Additionally use, per `L`, this quantile of the observed `len(G_v)`.
    #[serde(default)]
    pub c_l_quantile: Option<f64>,
    pub replicates: usize,
    #[serde(default = "one")]
    pub intensity: f64,
    #[serde(default)]
    pub thresholds: NiceThresholds,
    #[serde(default = "default_levels")]
    pub levels: Vec<f64>,
    #[serde(default = "default_rule")]
    pub rule: RobustRule,
}

fn one() -> f64 {
    1.0
}

fn default_levels() -> Vec<f64> {
    vec![0.9, 0.95, 0.99]
}

/// Empirical quantile by the nearest-rank rule.
fn quantile(values: &mut [f64], q: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let rank = ((q * values.len() as f64).ceil() as usize).clamp(1, values.len());
    values[rank - 1]
}

/// Monte Carlo estimate of `P(site 0 is good)` over a grid of `(L, c_L)`.
///
/// Each replicate samples the `2L × 2L` environment of one site once; the
/// length cap only enters through condition (iii), so every cap reuses the
/// same five squares.
pub fn good_probability(sweep: &GoodSweep, master_seed: u64) -> Result<ExperimentResult> {
    if sweep.replicates == 0 {
        return Err(Error::invalid("replicates", "must be at least 1"));
    }
    if sweep.ls.is_empty() {
        return Err(Error::invalid("Ls", "must be a non-empty list"));
    }
    if sweep.c_ls.is_empty() && sweep.c_l_quantile.is_none() {
        return Err(Error::invalid("c_Ls", "give at least one cap or c_l_quantile"));
    }
    if let Some(q) = sweep.c_l_quantile {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::invalid("c_l_quantile", "must lie in [0, 1]"));
        }
    }
    sweep.thresholds.validate()?;
    for &l in &sweep.ls {
        BlockParams {
            l,
            c_l: 1.0,
            rule: sweep.rule,
        }
        .validate()?;
    }
    for &c in &sweep.c_ls {
        if !(c > 0.0) {
            return Err(Error::invalid("c_Ls", format!("caps must be positive, got {c}")));
        }
    }

    let cells: Vec<(f64, usize)> = sweep
        .ls
        .iter()
        .flat_map(|&l| (0..sweep.replicates).map(move |r| (l, r)))
        .collect();
    let flags: Vec<(f64, usize, u64, [NiceFlags; 5])> = cells
        .par_iter()
        .map(|&(l, r)| {
            let s = seed::derive_seed(master_seed, &[seed::coord_f64(l), r as u64]);
            let env = Window::centered_square(Point::new(0.0, 0.0), 2.0 * l)?;
            let config = sample_ppp(env, sweep.intensity, s)?;
            let params = BlockParams {
                l,
                c_l: f64::INFINITY,
                rule: sweep.rule,
            };
            let f = site_flags(&config, (0, 0), &params, &sweep.thresholds, &mut HashMap::new())?;
            Ok((l, r, s, f))
        })
        .collect::<Result<_>>()?;

    let mut table = Table::new(&[
        "L",
        "c_L",
        "replicate",
        "seed",
        "good",
        "counts_ok",
        "n1_ok",
        "len_ok",
        "nice_count",
        "len_v",
        "n1_v",
    ]);
    let mut per_cell = Vec::new();
    for &l in &sweep.ls {
        let rows: Vec<&(f64, usize, u64, [NiceFlags; 5])> = flags.iter().filter(|x| x.0 == l).collect();
        let mut caps = sweep.c_ls.clone();
        let mut quantile_cap = None;
        if let Some(q) = sweep.c_l_quantile {
            let mut lens: Vec<f64> = rows.iter().flat_map(|x| x.3.iter().map(|f| f.len)).collect();
            let cap = quantile(&mut lens, q);
            quantile_cap = Some(cap);
            caps.push(cap);
        }
        for &c_l in &caps {
            let mut good_n = 0;
            let (mut counts_n, mut n1_n) = (0, 0);
            for (_, r, s, f) in &rows {
                let capped: Vec<NiceFlags> = f.iter().map(|x| x.with_cap(c_l)).collect();
                let good = capped.iter().all(|x| x.nice);
                let counts_ok = capped.iter().all(|x| x.counts_ok);
                let n1_ok = capped.iter().all(|x| x.n1_ok);
                good_n += usize::from(good);
                counts_n += usize::from(capped[0].counts_ok);
                n1_n += usize::from(capped[0].n1_ok);
                table.push(vec![
                    l.into(),
                    c_l.into(),
                    (*r).into(),
                    (*s).into(),
                    good.into(),
                    counts_ok.into(),
                    n1_ok.into(),
                    capped.iter().all(|x| x.len_ok).into(),
                    capped.iter().filter(|x| x.nice).count().into(),
                    f[0].len.into(),
                    f[0].n1.into(),
                ]);
            }
            let (p, se) = proportion(good_n, rows.len());
            let (pc, sec) = proportion(counts_n, rows.len());
            let (pn, sen) = proportion(n1_n, rows.len());
            per_cell.push(json!({
                "L": l,
                "c_L": c_l,
                "from_quantile": quantile_cap == Some(c_l),
                "p_good": p,
                "stderr": se,
                "p_counts_ok_v": pc,
                "stderr_counts_ok_v": sec,
                "p_n1_ok_v": pn,
                "stderr_n1_ok_v": sen,
            }));
        }
    }
    let crossings: Vec<_> = sweep
        .levels
        .iter()
        .map(|&level| {
            let cells: Vec<_> = per_cell
                .iter()
                .filter(|c| c["p_good"].as_f64().is_some_and(|p| p >= level))
                .map(|c| json!({ "L": c["L"], "c_L": c["c_L"] }))
                .collect();
            json!({ "level": level, "cells": cells })
        })
        .collect();
    let summary = json!({
        "replicates": sweep.replicates,
        "intensity": sweep.intensity,
        "thresholds": sweep.thresholds,
        "per_cell": per_cell,
        "crossings": crossings,
    });
    Ok(ExperimentResult::new("good_prob", table, summary))
}
