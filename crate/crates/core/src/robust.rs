//! The boundary-robust subnetwork of a window and the essential-connectedness
//! statistic.
//!
//! An edge between two window cities survives every configuration of cities
//! outside the window exactly when its empty region holds no window city and
//! lies inside the closed window: any part of the open region outside the
//! window has positive area, so some outside city could sit there.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::experiment::{ExperimentResult, Table};
use crate::geom::{plant, sample_ppp, Configuration, Point, ProximityTemplate, Window};
use crate::graphs::{build_proximity, components, Components, Network, NetworkKind};
use crate::seed;
use crate::stats::summarize;

/// The per-edge certificate used to decide robustness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RobustRule {
    Rng,
    Proximity { template: ProximityTemplate },
}

impl RobustRule {
    pub fn template(&self) -> ProximityTemplate {
        match *self {
            RobustRule::Rng => ProximityTemplate::FullLune,
            RobustRule::Proximity { template } => template,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.template().validate()
    }

    /// Rule for a network kind; only empty-region kinds have a local certificate.
    pub fn for_kind(kind: NetworkKind) -> Result<Self> {
        match kind {
            NetworkKind::Rng => Ok(RobustRule::Rng),
            NetworkKind::Gabriel | NetworkKind::BetaSkeleton(_) => Ok(RobustRule::Proximity {
                template: kind.template().expect("empty-region kind"),
            }),
            other => Err(Error::invalid(
                "rule",
                format!("no sound local robustness certificate exists for `{other}`; use rng, gabriel or beta_skeleton(<beta>)"),
            )),
        }
    }
}

impl fmt::Display for RobustRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RobustRule::Rng => f.write_str("rng"),
            RobustRule::Proximity { template } => f.write_str(&template.name()),
        }
    }
}

impl FromStr for RobustRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RobustRule::for_kind(s.parse()?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustReport {
    pub window: Window,
    /// The robust subnetwork, of kind `robust_sub`.
    pub net: Network,
    pub n_cities: usize,
    pub largest_component_size: usize,
    /// Cities outside the largest component.
    pub n0: usize,
    pub components: Components,
}

impl RobustReport {
    pub fn is_connected(&self) -> bool {
        self.components.count() <= 1
    }
}

/// The subnetwork of `config` present whatever lies outside `config.window`.
pub fn robust_subnetwork(config: &Configuration, rule: RobustRule) -> Result<RobustReport> {
    rule.validate()?;
    let template = rule.template();
    let window = config.window;
    let full = build_proximity(config, template)?;
    let pts = &config.points;
    let kept: Vec<(usize, usize)> = full
        .edges
        .iter()
        .filter(|e| {
            template
                .region(pts[e.i], pts[e.j])
                .is_none_or(|r| r.inside_window(&window))
        })
        .map(|e| (e.i, e.j))
        .collect();
    let mut net = Network::from_pairs(config, NetworkKind::RobustSub, kept);
    net.degenerate = full.degenerate;
    let components = components(&net);
    let largest = components.largest_size();
    Ok(RobustReport {
        window,
        n_cities: config.len(),
        largest_component_size: largest,
        n0: config.len() - largest,
        net,
        components,
    })
}

/// Sweeps the essential-connectedness statistic `N⁰_L / L²` over square
/// windows `[0, L]²` of rate-`intensity` Poisson cities.
pub fn ac_sweep(
    rule: RobustRule,
    ls: &[f64],
    replicates: usize,
    intensity: f64,
    master_seed: u64,
) -> Result<ExperimentResult> {
    rule.validate()?;
    if replicates == 0 {
        return Err(Error::invalid("replicates", "must be at least 1"));
    }
    if ls.is_empty() || ls.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        return Err(Error::invalid("Ls", "must be a non-empty list of positive numbers"));
    }
    if ls.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("Ls", "must be strictly increasing"));
    }
    let cells: Vec<(f64, usize)> = ls
        .iter()
        .flat_map(|&l| (0..replicates).map(move |r| (l, r)))
        .collect();
    let rows: Vec<(f64, usize, u64, usize, usize)> = cells
        .par_iter()
        .map(|&(l, r)| {
            let s = seed::derive_seed(master_seed, &[seed::coord_f64(l), r as u64]);
            let config = sample_ppp(Window::square(l)?, intensity, s)?;
            let report = robust_subnetwork(&config, rule)?;
            Ok((l, r, s, report.n_cities, report.n0))
        })
        .collect::<Result<_>>()?;

    let mut table = Table::new(&["rule", "L", "replicate", "seed", "n_cities", "n0", "n0_over_L2"]);
    let name = rule.to_string();
    for &(l, r, s, n, n0) in &rows {
        table.push(vec![
            name.as_str().into(),
            l.into(),
            r.into(),
            s.into(),
            n.into(),
            n0.into(),
            (n0 as f64 / (l * l)).into(),
        ]);
    }
    let per_l: Vec<_> = ls
        .iter()
        .map(|&l| {
            let vals: Vec<f64> = rows
                .iter()
                .filter(|row| row.0 == l)
                .map(|row| row.4 as f64 / (l * l))
                .collect();
            let s = summarize(&vals);
            json!({ "L": l, "mean": s.mean, "stderr": s.stderr, "n": s.n })
        })
        .collect();
    let means: Vec<f64> = per_l.iter().map(|v| v["mean"].as_f64().unwrap_or(f64::NAN)).collect();
    let decreasing = means.windows(2).all(|w| w[1] < w[0]);
    let summary = json!({
        "rule": name,
        "intensity": intensity,
        "replicates": replicates,
        "per_L": per_l,
        "strictly_decreasing": decreasing,
    });
    Ok(ExperimentResult::new("ac_sweep", table, summary))
}

/// Outcome of trying to kill robust edges from outside the window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SoundnessReport {
    pub edges_checked: usize,
    pub outside_configurations: usize,
    /// Robust edges removed by some outside configuration, as `(i, j)`.
    pub killed: Vec<(usize, usize)>,
}

impl SoundnessReport {
    pub fn passed(&self) -> bool {
        self.killed.is_empty()
    }
}

/// Appends `outside` to the window cities, rebuilds the rule network on the
/// enlarged window and returns the robust edges that disappeared.
fn killed_by(
    config: &Configuration,
    report: &RobustReport,
    template: ProximityTemplate,
    outside: &[Point],
) -> Result<Vec<(usize, usize)>> {
    if outside.is_empty() {
        return Ok(Vec::new());
    }
    let grown = plant(config, outside).config;
    let rebuilt = build_proximity(&grown, template)?;
    Ok(report
        .net
        .edges
        .iter()
        .filter(|e| !rebuilt.has_edge(e.i, e.j))
        .map(|e| (e.i, e.j))
        .collect())
}

/// Cities just outside the window, as close as possible to each robust edge's
/// region on every side.
fn targeted_placements(config: &Configuration, report: &RobustReport, template: ProximityTemplate) -> Vec<Point> {
    let w = config.window;
    let eps = 1e-9 * w.width().max(w.height()).max(1.0);
    let mut out = Vec::new();
    for e in &report.net.edges {
        let Some(region) = template.region(config.points[e.i], config.points[e.j]) else {
            continue;
        };
        let b = region.bounds();
        let cy = ((b.min_y + b.max_y) / 2.0).clamp(w.y0, w.y1);
        let cx = ((b.min_x + b.max_x) / 2.0).clamp(w.x0, w.x1);
        out.push(Point::new(w.x0 - eps, cy));
        out.push(Point::new(w.x1 + eps, cy));
        out.push(Point::new(cx, w.y0 - eps));
        out.push(Point::new(cx, w.y1 + eps));
    }
    out
}

/// Tries to kill every robust edge: once with targeted placements just
/// outside the window next to each edge's region, then with `trials` random
/// Poisson configurations outside the window (alternating the base intensity
/// and ten times it).
///
/// Adding cities can only remove empty-region edges, so placing every
/// targeted city at once is as strong as trying them one at a time.
pub fn soundness_report(
    config: &Configuration,
    rule: RobustRule,
    trials: usize,
    master_seed: u64,
) -> Result<SoundnessReport> {
    let report = robust_subnetwork(config, rule)?;
    let template = rule.template();
    let mut result = SoundnessReport {
        edges_checked: report.net.edges.len(),
        outside_configurations: 0,
        killed: Vec::new(),
    };
    if report.net.edges.is_empty() {
        return Ok(result);
    }
    let w = config.window;
    let targeted = targeted_placements(config, &report, template);
    result.killed.extend(killed_by(config, &report, template, &targeted)?);
    result.outside_configurations += 1;

    let margin = (w.width().max(w.height()) / 4.0).max(2.0);
    let outer = w.expand(margin);
    let base = if config.intensity > 0.0 { config.intensity } else { 1.0 };
    for t in 0..trials {
        let intensity = if t % 2 == 0 { base } else { 10.0 * base };
        let s = seed::derive_seed(master_seed, &[t as u64]);
        let outside: Vec<Point> = sample_ppp(outer, intensity, s)?
            .points
            .into_iter()
            .filter(|p| !w.contains(*p))
            .collect();
        result.killed.extend(killed_by(config, &report, template, &outside)?);
        result.outside_configurations += 1;
    }
    result.killed.sort_unstable();
    result.killed.dedup();
    Ok(result)
}

/// True iff no outside configuration tried removes a robust edge.
pub fn adversarial_soundness_check(
    config: &Configuration,
    rule: RobustRule,
    trials: usize,
    master_seed: u64,
) -> Result<bool> {
    Ok(soundness_report(config, rule, trials, master_seed)?.passed())
}

/// Completeness of the certificate, witnessed: for every rule edge of the
/// window configuration that the certificate rejects, plants a city in the
/// exterior part of its region and checks that the rebuilt network drops the
/// edge. Returns the rejected edges that no witness could kill.
pub fn completeness_failures(config: &Configuration, rule: RobustRule) -> Result<Vec<(usize, usize)>> {
    let template = rule.template();
    let full = build_proximity(config, template)?;
    let report = robust_subnetwork(config, rule)?;
    let mut failures = Vec::new();
    for e in &full.edges {
        if report.net.has_edge(e.i, e.j) {
            continue;
        }
        let region = template
            .region(config.points[e.i], config.points[e.j])
            .expect("zero-length edges are always robust");
        let Some(z) = region.exterior_witness(&config.window) else {
            failures.push((e.i, e.j));
            continue;
        };
        let grown = plant(config, &[z]).config;
        if build_proximity(&grown, template)?.has_edge(e.i, e.j) {
            failures.push((e.i, e.j));
        }
    }
    Ok(failures)
}
