//! Oriented site percolation on the tilted lattice, the T statistic, and the
//! block construction that turns a city configuration into site marks.

pub mod block;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::experiment::{ExperimentResult, Table};
use crate::seed::{self, coord_i64};
use crate::stats::{chi2_df1_sf, summarize};

pub use block::{
    block_dependence_test, block_good_marks, block_site_field, classify_nice, classify_nice_with, good_probability,
    BlockParams, GoodSweep, NiceFlags,
    NiceThresholds,
};

/// A lattice site `(n1, n2)` with `n1 + n2` even.
pub type Site = (i64, i64);

/// The finite patch `|n1| ≤ half_width, |n2| ≤ half_height` of the tilted lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TiltedLattice {
    pub half_width: i64,
    pub half_height: i64,
}

impl TiltedLattice {
    pub fn new(half_width: i64, half_height: i64) -> Result<Self> {
        if half_width < 0 || half_height < 0 {
            return Err(Error::invalid("half_width", "lattice half sizes must be non-negative"));
        }
        Ok(TiltedLattice {
            half_width,
            half_height,
        })
    }

    fn cols(&self) -> usize {
        (2 * self.half_width + 1) as usize
    }

    fn rows(&self) -> usize {
        (2 * self.half_height + 1) as usize
    }

    pub fn contains(&self, (n1, n2): Site) -> bool {
        n1.abs() <= self.half_width && n2.abs() <= self.half_height && (n1 + n2).rem_euclid(2) == 0
    }

    /// Slot of a site in the dense row-major array (parity-invalid slots unused).
    fn slot(&self, (n1, n2): Site) -> usize {
        (n2 + self.half_height) as usize * self.cols() + (n1 + self.half_width) as usize
    }

    fn dense_len(&self) -> usize {
        self.rows() * self.cols()
    }

    /// Sites of row `n2`, left to right.
    pub fn row(&self, n2: i64) -> impl Iterator<Item = Site> + '_ {
        let hw = self.half_width;
        (-hw..=hw).filter(move |n1| (n1 + n2).rem_euclid(2) == 0).map(move |n1| (n1, n2))
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (-self.half_height..=self.half_height).flat_map(move |n2| self.row(n2))
    }

    pub fn len(&self) -> usize {
        self.sites().count()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Graph distance between two sites of the (undirected) tilted lattice.
pub fn lattice_distance(a: Site, b: Site) -> i64 {
    (a.0 - b.0).abs().max((a.1 - b.1).abs())
}

/// How synthetic marks are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    /// Independent marks, good with probability p.
    Independent,
    /// Each lattice edge carries a coin that succeeds with probability
    /// p^(1/4); a site is good iff its four incident coins all succeed.
    /// Adjacent sites share a coin, so only they are dependent.
    EdgeAnd,
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mechanism::Independent => "independent",
            Mechanism::EdgeAnd => "edge_and",
        })
    }
}

impl FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "independent" => Ok(Mechanism::Independent),
            "edge_and" => Ok(Mechanism::EdgeAnd),
            _ => Err(Error::invalid(
                "mechanism",
                format!("unknown mechanism `{s}`; expected independent or edge_and"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    SyntheticP {
        p: f64,
        mechanism: Mechanism,
        seed: u64,
    },
    Block {
        params: BlockParams,
        thresholds: NiceThresholds,
        seed: u64,
        /// Fingerprint of the city configuration the marks came from.
        config_fingerprint: String,
    },
}

/// Good/bad marks on every site of a lattice patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteField {
    pub lattice: TiltedLattice,
    good: Vec<bool>,
    pub provenance: Provenance,
}

impl SiteField {
    /// A field with the given marks; `mark` is called once per site.
    pub fn from_fn(lattice: TiltedLattice, provenance: Provenance, mut mark: impl FnMut(Site) -> bool) -> Self {
        let mut good = vec![false; lattice.dense_len()];
        for s in lattice.sites() {
            good[lattice.slot(s)] = mark(s);
        }
        SiteField {
            lattice,
            good,
            provenance,
        }
    }

    /// Whether `site` is in the patch and good.
    pub fn is_good(&self, site: Site) -> bool {
        self.lattice.contains(site) && self.good[self.lattice.slot(site)]
    }

    pub fn set(&mut self, site: Site, good: bool) {
        assert!(self.lattice.contains(site), "site {site:?} outside the lattice");
        let k = self.lattice.slot(site);
        self.good[k] = good;
    }

    pub fn good_count(&self) -> usize {
        self.lattice.sites().filter(|&s| self.is_good(s)).count()
    }
}

fn edge_coin(seed: u64, (n1, n2): Site, step: i64, q: f64) -> bool {
    seed::unit_hash(seed, &[coord_i64(n1), coord_i64(n2), coord_i64(step), 1]) < q
}

/// Whether `site` is good under a synthetic mechanism. Marks are a function
/// of the seed and the site coordinates only, so nested patches agree.
pub fn synthetic_mark(p: f64, mechanism: Mechanism, seed: u64, site: Site) -> bool {
    let (n1, n2) = site;
    match mechanism {
        Mechanism::Independent => seed::unit_hash(seed, &[coord_i64(n1), coord_i64(n2), 0]) < p,
        Mechanism::EdgeAnd => {
            let q = p.powf(0.25);
            // Edges are keyed by their lower endpoint and horizontal step.
            edge_coin(seed, site, 1, q)
                && edge_coin(seed, site, -1, q)
                && edge_coin(seed, (n1 - 1, n2 - 1), 1, q)
                && edge_coin(seed, (n1 + 1, n2 - 1), -1, q)
        }
    }
}

pub fn synthetic_site_field(lattice: TiltedLattice, p: f64, mechanism: Mechanism, seed: u64) -> Result<SiteField> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid("p", format!("must lie in [0, 1], got {p}")));
    }
    Ok(SiteField::from_fn(
        lattice,
        Provenance::SyntheticP { p, mechanism, seed },
        |s| synthetic_mark(p, mechanism, seed, s),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    fn step(self) -> i64 {
        match self {
            Direction::Up => 1,
            Direction::Down => -1,
        }
    }
}

/// Dense mask of sites reachable from any good site of `sources` by oriented
/// steps through good sites.
fn reach_mask(field: &SiteField, sources: impl IntoIterator<Item = Site>, dir: Direction) -> Vec<bool> {
    let lat = field.lattice;
    let mut seen = vec![false; lat.dense_len()];
    let mut stack: Vec<Site> = Vec::new();
    for s in sources {
        if field.is_good(s) && !seen[lat.slot(s)] {
            seen[lat.slot(s)] = true;
            stack.push(s);
        }
    }
    let dy = dir.step();
    while let Some((n1, n2)) = stack.pop() {
        for dx in [-1, 1] {
            let t = (n1 + dx, n2 + dy);
            if field.is_good(t) && !seen[lat.slot(t)] {
                seen[lat.slot(t)] = true;
                stack.push(t);
            }
        }
    }
    seen
}

/// Sites reachable from `from` by oriented steps through good sites,
/// including `from` itself; empty if `from` is bad. Sorted by `(n2, n1)`.
pub fn oriented_reach(field: &SiteField, from: Site, dir: Direction) -> Result<Vec<Site>> {
    if !field.lattice.contains(from) {
        return Err(Error::invalid("from", format!("site {from:?} is not in the lattice")));
    }
    let mask = reach_mask(field, [from], dir);
    Ok(field.lattice.sites().filter(|&s| mask[field.lattice.slot(s)]).collect())
}

/// Which infinite path the finite strip approximates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathVariant {
    /// A good path from the bottom row through `(T, 0)` to the top row.
    DoublyInfinite,
    /// A good path from `(T, 0)` to the top row.
    SemiInfinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TStatistic {
    /// Smallest qualifying even `T ≥ 2`. When `truncated`, no `T` up to the
    /// half width qualified and this is the censoring value
    /// `half_width + 1` rounded up to even.
    pub t: i64,
    pub truncated: bool,
}

pub fn t_statistic_variant(field: &SiteField, variant: PathVariant) -> TStatistic {
    let lat = field.lattice;
    let h = lat.half_height;
    let down = reach_mask(field, lat.row(h), Direction::Down);
    let up = match variant {
        PathVariant::DoublyInfinite => Some(reach_mask(field, lat.row(-h), Direction::Up)),
        PathVariant::SemiInfinite => None,
    };
    let mut t = 2;
    while t <= lat.half_width {
        let k = lat.slot((t, 0));
        if down[k] && up.as_ref().is_none_or(|u| u[k]) {
            return TStatistic { t, truncated: false };
        }
        t += 2;
    }
    TStatistic { t, truncated: true }
}

/// The T statistic for the doubly-infinite path, approximated by a path
/// spanning every row of the patch.
pub fn t_statistic(field: &SiteField) -> TStatistic {
    t_statistic_variant(field, PathVariant::DoublyInfinite)
}

/// Parameters of the T-statistic experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TExperiment {
    pub mechanism: Mechanism,
    pub p: f64,
    pub half_width: i64,
    pub half_height: i64,
    pub replicates: usize,
}

/// Monte Carlo over fields at `half_height` and `2 · half_height`, the latter
/// extending the same marks. Reports both path variants and the adequacy of
/// the finite strip (means at the two heights within 2 standard errors).
pub fn t_experiment(e: &TExperiment, master_seed: u64) -> Result<ExperimentResult> {
    if e.replicates == 0 {
        return Err(Error::invalid("replicates", "must be at least 1"));
    }
    if e.half_width < 2 || e.half_height < 1 {
        return Err(Error::invalid("half_width", "need half_width ≥ 2 and half_height ≥ 1"));
    }
    if !(0.0..=1.0).contains(&e.p) {
        return Err(Error::invalid("p", format!("must lie in [0, 1], got {}", e.p)));
    }
    let heights = [e.half_height, 2 * e.half_height];
    let cells: Vec<(i64, usize)> = heights
        .iter()
        .flat_map(|&h| (0..e.replicates).map(move |r| (h, r)))
        .collect();
    let results: Vec<(i64, usize, TStatistic, TStatistic)> = cells
        .par_iter()
        .map(|&(h, r)| {
            let s = seed::derive_seed(master_seed, &[r as u64]);
            let lat = TiltedLattice::new(e.half_width, h)?;
            let field = synthetic_site_field(lat, e.p, e.mechanism, s)?;
            Ok((
                h,
                r,
                t_statistic(&field),
                t_statistic_variant(&field, PathVariant::SemiInfinite),
            ))
        })
        .collect::<Result<_>>()?;

    let mut table = Table::new(&[
        "mechanism",
        "p",
        "half_width",
        "half_height",
        "replicate",
        "T",
        "truncated",
        "T_semi",
        "truncated_semi",
    ]);
    for (h, r, d, s) in &results {
        table.push(vec![
            e.mechanism.to_string().into(),
            e.p.into(),
            (e.half_width as u64).into(),
            (*h as u64).into(),
            (*r).into(),
            (d.t as u64).into(),
            d.truncated.into(),
            (s.t as u64).into(),
            s.truncated.into(),
        ]);
    }

    let per_height: Vec<_> = heights
        .iter()
        .map(|&h| {
            let ts: Vec<f64> = results.iter().filter(|x| x.0 == h).map(|x| x.2.t as f64).collect();
            let semi: Vec<f64> = results.iter().filter(|x| x.0 == h).map(|x| x.3.t as f64).collect();
            let truncated = results.iter().filter(|x| x.0 == h && x.2.truncated).count();
            let s = summarize(&ts);
            let ss = summarize(&semi);
            (h, s, ss, truncated, tail(&ts))
        })
        .collect();
    let (a, b) = (&per_height[0].1, &per_height[1].1);
    let se = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
    let adequate = (a.mean - b.mean).abs() <= 2.0 * se;
    let any_truncated = per_height.iter().any(|x| x.3 > 0);
    let summary = json!({
        "mechanism": e.mechanism.to_string(),
        "p": e.p,
        "half_width": e.half_width,
        "replicates": e.replicates,
        "per_height": per_height.iter().map(|(h, s, ss, trunc, tail)| json!({
            "half_height": h,
            "mean_T": s.mean,
            "stderr_T": s.stderr,
            "mean_T_semi": ss.mean,
            "stderr_T_semi": ss.stderr,
            "truncated": trunc,
            "tail": tail.iter().map(|(t, q)| json!([t, q])).collect::<Vec<_>>(),
            "tail_decreasing": tail_decreasing(tail),
        })).collect::<Vec<_>>(),
        "adequate": adequate,
        "flag_truncated": any_truncated || !adequate,
    });
    Ok(ExperimentResult::new("perc_t", table, summary))
}

/// Empirical `P(T > t)` at each even `t` from 2 up to the largest observed value.
pub fn tail(ts: &[f64]) -> Vec<(i64, f64)> {
    let max = ts.iter().copied().fold(0.0, f64::max) as i64;
    let n = ts.len() as f64;
    (1..=max / 2)
        .map(|k| {
            let t = 2 * k;
            (t, ts.iter().filter(|&&x| x > t as f64).count() as f64 / n)
        })
        .collect()
}

/// The tail strictly decreases wherever it is positive.
pub fn tail_decreasing(tail: &[(i64, f64)]) -> bool {
    tail.windows(2).all(|w| w[1].1 < w[0].1 || w[0].1 == 0.0)
}

/// Chi-squared test of independence on a 2×2 table of joint marks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairTest {
    pub a: Site,
    pub b: Site,
    pub distance: i64,
    /// Counts of (good, good), (good, bad), (bad, good), (bad, bad).
    pub counts: [usize; 4],
    pub chi2: f64,
    pub p_value: f64,
}

pub fn pair_test(a: Site, b: Site, marks: &[(bool, bool)]) -> PairTest {
    let mut c = [0usize; 4];
    for &(x, y) in marks {
        c[match (x, y) {
            (true, true) => 0,
            (true, false) => 1,
            (false, true) => 2,
            (false, false) => 3,
        }] += 1;
    }
    let n = marks.len() as f64;
    let [n11, n10, n01, n00] = c.map(|v| v as f64);
    let margins = (n11 + n10) * (n01 + n00) * (n11 + n01) * (n10 + n00);
    // A constant mark carries no evidence of dependence.
    let chi2 = if margins > 0.0 {
        n * (n11 * n00 - n10 * n01).powi(2) / margins
    } else {
        0.0
    };
    PairTest {
        a,
        b,
        distance: lattice_distance(a, b),
        counts: c,
        chi2,
        p_value: chi2_df1_sf(chi2),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DependenceReport {
    pub samples: usize,
    pub alpha: f64,
    pub pairs: Vec<PairTest>,
    /// A pair at distance ≥ 2 rejected independence after Bonferroni correction.
    pub rejected_distant: bool,
    /// An adjacent pair rejected independence after Bonferroni correction.
    pub detected_adjacent: bool,
}

/// Pairs tested: the adjacent pair `(0,0)–(1,1)` and the distance-2 pairs
/// from `(0,0)` to `(2,0)`, `(0,2)` and `(2,2)`.
pub const TEST_PAIRS: [(Site, Site); 4] = [
    ((0, 0), (1, 1)),
    ((0, 0), (2, 0)),
    ((0, 0), (0, 2)),
    ((0, 0), (2, 2)),
];

pub fn dependence_report(samples: usize, alpha: f64, pairs: Vec<PairTest>) -> DependenceReport {
    let m = pairs.len().max(1) as f64;
    let reject = |t: &PairTest| t.p_value < alpha / m;
    DependenceReport {
        samples,
        alpha,
        rejected_distant: pairs.iter().any(|t| t.distance >= 2 && reject(t)),
        detected_adjacent: pairs.iter().any(|t| t.distance == 1 && reject(t)),
        pairs,
    }
}

/// Independence test on synthetic fields: each sample is a fresh field.
pub fn one_dependence_test(
    p: f64,
    mechanism: Mechanism,
    samples: usize,
    alpha: f64,
    master_seed: u64,
) -> Result<DependenceReport> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid("p", format!("must lie in [0, 1], got {p}")));
    }
    let tests = TEST_PAIRS
        .iter()
        .map(|&(a, b)| {
            let marks: Vec<(bool, bool)> = (0..samples)
                .map(|k| {
                    let s = seed::derive_seed(master_seed, &[k as u64]);
                    (synthetic_mark(p, mechanism, s, a), synthetic_mark(p, mechanism, s, b))
                })
                .collect();
            pair_test(a, b, &marks)
        })
        .collect();
    Ok(dependence_report(samples, alpha, tests))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(hw: i64, hh: i64, p: f64, seed: u64) -> SiteField {
        synthetic_site_field(TiltedLattice::new(hw, hh).unwrap(), p, Mechanism::Independent, seed).unwrap()
    }

    /// Row-by-row dynamic programme for the upward reach set.
    fn reach_dp(f: &SiteField, from: Site) -> Vec<Site> {
        let lat = f.lattice;
        let mut out = Vec::new();
        if !f.is_good(from) {
            return out;
        }
        let mut row: Vec<i64> = vec![from.0];
        out.push(from);
        for n2 in from.1 + 1..=lat.half_height {
            let mut next: Vec<i64> = row
                .iter()
                .flat_map(|&n1| [n1 - 1, n1 + 1])
                .filter(|&n1| f.is_good((n1, n2)))
                .collect();
            next.sort_unstable();
            next.dedup();
            out.extend(next.iter().map(|&n1| (n1, n2)));
            row = next;
        }
        out
    }

    #[test]
    fn parity_and_size() {
        let lat = TiltedLattice::new(2, 1).unwrap();
        assert!(lat.contains((0, 0)) && lat.contains((1, 1)) && !lat.contains((1, 0)));
        // Rows -1, 0, 1 hold 2, 3 and 2 sites.
        assert_eq!(lat.len(), 7);
    }

    #[test]
    fn extreme_p() {
        assert_eq!(field(5, 5, 1.0, 1).good_count(), TiltedLattice::new(5, 5).unwrap().len());
        assert_eq!(field(5, 5, 0.0, 1).good_count(), 0);
        let lat = TiltedLattice::new(3, 3).unwrap();
        let all = synthetic_site_field(lat, 1.0, Mechanism::EdgeAnd, 2).unwrap();
        assert_eq!(all.good_count(), lat.len());
        assert!(synthetic_site_field(lat, 1.5, Mechanism::EdgeAnd, 2).is_err());
    }

    #[test]
    fn marginal_matches_p() {
        for mech in [Mechanism::Independent, Mechanism::EdgeAnd] {
            let lat = TiltedLattice::new(224, 224).unwrap();
            let f = synthetic_site_field(lat, 0.7, mech, 3).unwrap();
            let frac = f.good_count() as f64 / lat.len() as f64;
            assert!((frac - 0.7).abs() < 0.005, "{mech}: {frac}");
        }
    }

    #[test]
    fn reach_cone_and_bad_start() {
        let f = field(4, 4, 1.0, 0);
        let r = oriented_reach(&f, (0, 0), Direction::Up).unwrap();
        // Rows 0..=4 of the cone: 1, 2, 3, 4, 5 sites.
        assert_eq!(r.len(), 15);
        let mut g = f.clone();
        g.set((0, 0), false);
        assert!(oriented_reach(&g, (0, 0), Direction::Up).unwrap().is_empty());
        assert!(oriented_reach(&g, (1, 0), Direction::Up).is_err());
    }

    #[test]
    fn reach_matches_dp() {
        for s in 0..50 {
            let f = field(12, 12, 0.6, s);
            for from in [(0, -12), (1, -5), (-4, 0)] {
                let mut got = oriented_reach(&f, from, Direction::Up).unwrap();
                let mut want = reach_dp(&f, from);
                got.sort_unstable();
                want.sort_unstable();
                assert_eq!(got, want);
            }
        }
    }

    #[test]
    fn t_on_extreme_fields() {
        assert_eq!(t_statistic(&field(10, 10, 1.0, 0)), TStatistic { t: 2, truncated: false });
        let bad = t_statistic(&field(10, 10, 0.0, 0));
        assert!(bad.truncated);
        assert_eq!(bad.t, 12);
    }

    #[test]
    fn semi_infinite_is_no_larger() {
        for s in 0..30 {
            let f = field(20, 20, 0.7, s);
            let d = t_statistic(&f);
            let h = t_statistic_variant(&f, PathVariant::SemiInfinite);
            assert!(h.t <= d.t);
            assert_eq!(d.t % 2, 0);
        }
    }

    #[test]
    fn edge_and_adjacent_dependence_detected() {
        let rep = one_dependence_test(0.5, Mechanism::EdgeAnd, 4000, 0.001, 9).unwrap();
        assert!(rep.detected_adjacent, "{rep:?}");
        assert!(!rep.rejected_distant, "{rep:?}");
        let ind = one_dependence_test(0.5, Mechanism::Independent, 4000, 0.001, 9).unwrap();
        assert!(!ind.detected_adjacent && !ind.rejected_distant);
    }

    #[test]
    fn experiment_shape() {
        let e = TExperiment {
            mechanism: Mechanism::Independent,
            p: 0.95,
            half_width: 20,
            half_height: 10,
            replicates: 20,
        };
        let res = t_experiment(&e, 4).unwrap();
        assert_eq!(res.table.rows.len(), 40);
        assert_eq!(res, t_experiment(&e, 4).unwrap());
    }

    #[test]
    fn tail_helpers() {
        let t = tail(&[2.0, 2.0, 4.0, 8.0]);
        assert_eq!(t, vec![(2, 0.5), (4, 0.25), (6, 0.25), (8, 0.0)]);
        assert!(!tail_decreasing(&t));
        assert!(tail_decreasing(&[(2, 0.5), (4, 0.1), (6, 0.0), (8, 0.0)]));
    }
}
