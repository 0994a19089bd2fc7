//! Network distances and route-length statistics for planted city pairs.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::experiment::{ExperimentResult, Table};
use crate::geom::{plant, sample_ppp, sample_uniform, Configuration, Point, Window};
use crate::graphs::{build, Adjacency, Network, NetworkKind};
use crate::seed;
use crate::stats::{linear_fit, summarize, Summary};

#[derive(Debug, Clone, Copy, PartialEq)]
struct Dist(f64);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Dijkstra from `source`; stops early once `target` is settled.
/// Unreached cities keep distance `+∞`.
pub fn shortest_paths(adj: &Adjacency, source: usize, target: Option<usize>) -> Vec<f64> {
    let n = adj.offsets.len() - 1;
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Reverse((Dist(0.0), source)));
    while let Some(Reverse((Dist(d), v))) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        if Some(v) == target {
            break;
        }
        for (w, len) in adj.neighbors(v) {
            let nd = d + len;
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(Reverse((Dist(nd), w)));
            }
        }
    }
    dist
}

/// Shortest route length between two cities, or `None` if no route exists.
pub fn network_distance(net: &Network, i: usize, j: usize) -> Result<Option<f64>> {
    for (name, v) in [("i", i), ("j", j)] {
        if v >= net.n {
            return Err(Error::invalid(name, format!("city {v} out of range for {} cities", net.n)));
        }
    }
    if i == j {
        return Ok(Some(0.0));
    }
    let d = shortest_paths(&net.adjacency(), i, Some(j))[j];
    Ok(d.is_finite().then_some(d))
}

/// Largest ratio of network to Euclidean distance over all pairs of
/// distinct locations.
pub fn max_stretch(net: &Network, config: &Configuration) -> Result<f64> {
    if net.n != config.len() {
        return Err(Error::invalid("network", "network and configuration sizes differ"));
    }
    let adj = net.adjacency();
    let pts = &config.points;
    let per_source: Vec<(f64, usize)> = (0..net.n)
        .into_par_iter()
        .map(|s| {
            let dist = shortest_paths(&adj, s, None);
            let mut worst: f64 = 1.0;
            let mut unreachable = 0;
            for t in s + 1..net.n {
                let d = pts[s].dist(pts[t]);
                if !dist[t].is_finite() {
                    unreachable += 1;
                } else if d > 0.0 {
                    worst = worst.max(dist[t] / d);
                }
            }
            (worst, unreachable)
        })
        .collect();
    let pairs: usize = per_source.iter().map(|p| p.1).sum();
    if pairs > 0 {
        return Err(Error::Disconnected { pairs });
    }
    Ok(per_source.iter().map(|p| p.0).fold(1.0, f64::max))
}

/// Maximum stretch of `kind` on `n` uniform cities in a square of area `n`,
/// per replicate, for each `n`.
pub fn stretch_sweep(kind: NetworkKind, ns: &[usize], replicates: usize, master_seed: u64) -> Result<ExperimentResult> {
    if ns.iter().any(|&n| n < 2) {
        return Err(Error::invalid("ns", "every n must be at least 2"));
    }
    if replicates == 0 {
        return Err(Error::invalid("replicates", "must be at least 1"));
    }
    let cells: Vec<(usize, usize)> = ns.iter().flat_map(|&n| (0..replicates).map(move |r| (n, r))).collect();
    let rows: Vec<(usize, usize, u64, f64)> = cells
        .par_iter()
        .map(|&(n, r)| {
            let s = seed::derive_seed(master_seed, &[n as u64, r as u64]);
            let config = sample_uniform(Window::square((n as f64).sqrt())?, n, s)?;
            let net = build(&config, kind)?;
            Ok((n, r, s, max_stretch(&net, &config)?))
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(&["kind", "n", "replicate", "seed", "stretch"]);
    for &(n, r, s, x) in &rows {
        table.push(vec![kind.to_string().into(), n.into(), r.into(), s.into(), x.into()]);
    }
    let per_n: Vec<_> = ns
        .iter()
        .map(|&n| {
            let xs: Vec<f64> = rows.iter().filter(|x| x.0 == n).map(|x| x.3).collect();
            let s = summarize(&xs);
            json!({ "n": n, "mean_stretch": s.mean, "stderr": s.stderr, "max_stretch": s.max })
        })
        .collect();
    let overall = rows.iter().map(|x| x.3).fold(1.0, f64::max);
    Ok(ExperimentResult::new(
        "stretch",
        table,
        json!({ "kind": kind.to_string(), "per_n": per_n, "max_stretch": overall }),
    ))
}

/// Default buffer around the planted pair.
pub fn default_margin(r: f64) -> f64 {
    (r / 2.0).max(20.0)
}

/// Setup for planted-pair sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedSetup {
    pub kind: NetworkKind,
    pub r: f64,
    pub margin: f64,
    pub intensity: f64,
    /// Direction of the planted axis, in radians.
    pub angle: f64,
}

impl PlantedSetup {
    pub fn new(kind: NetworkKind, r: f64) -> Self {
        PlantedSetup {
            kind,
            r,
            margin: default_margin(r),
            intensity: 1.0,
            angle: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(Error::invalid("r", format!("must be positive, got {}", self.r)));
        }
        let min = default_margin(self.r);
        if !(self.margin.is_finite() && self.margin >= min) {
            return Err(Error::invalid(
                "margin",
                format!("must be at least max(20, r/2) = {min}, got {}", self.margin),
            ));
        }
        if !(self.intensity.is_finite() && self.intensity >= 0.0) {
            return Err(Error::invalid("intensity", "must be finite and non-negative"));
        }
        if !self.angle.is_finite() {
            return Err(Error::invalid("angle", "must be finite"));
        }
        if self.kind == NetworkKind::RobustSub {
            return Err(Error::invalid("network", "robust_sub is not a planted-pair network"));
        }
        Ok(())
    }

    fn target(&self) -> Point {
        if self.angle == 0.0 {
            Point::new(self.r, 0.0)
        } else {
            Point::new(self.r * self.angle.cos(), self.r * self.angle.sin())
        }
    }

    fn window(&self) -> Result<Window> {
        let z = self.target();
        Window::new(
            z.x.min(0.0) - self.margin,
            z.y.min(0.0) - self.margin,
            z.x.max(0.0) + self.margin,
            z.y.max(0.0) + self.margin,
        )
    }
}

/// One planted-pair route length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RouteStat {
    pub r: f64,
    /// Network distance between the planted cities; `+∞` if unreachable.
    pub ell: f64,
    pub d: f64,
    pub seed: u64,
    pub network_kind: NetworkKind,
    pub n_cities: usize,
    pub unreachable: bool,
    /// A planted city coincided with a sampled one.
    pub degenerate: bool,
}

/// Plants cities at the origin and at distance `r`, samples Poisson cities
/// around them and measures the route between the two.
pub fn planted_pair_with(setup: &PlantedSetup, seed: u64) -> Result<RouteStat> {
    setup.validate()?;
    let base = sample_ppp(setup.window()?, setup.intensity, seed)?;
    let z = setup.target();
    let planted = plant(&base, &[Point::new(0.0, 0.0), z]);
    let net = build(&planted.config, setup.kind)?;
    let (a, b) = (planted.indices[0], planted.indices[1]);
    let ell = network_distance(&net, a, b)?;
    Ok(RouteStat {
        r: setup.r,
        ell: ell.unwrap_or(f64::INFINITY),
        d: Point::new(0.0, 0.0).dist(z),
        seed,
        network_kind: setup.kind,
        n_cities: planted.config.len(),
        unreachable: ell.is_none(),
        degenerate: planted.degenerate,
    })
}

pub fn planted_pair_sample(kind: NetworkKind, r: f64, margin: f64, seed: u64) -> Result<RouteStat> {
    planted_pair_with(
        &PlantedSetup {
            margin,
            ..PlantedSetup::new(kind, r)
        },
        seed,
    )
}

/// Seed of replicate `rep` at separation `r`; shared by every route statistic
/// so different estimators see the same samples.
pub fn replicate_seed(master: u64, r: f64, rep: usize) -> u64 {
    seed::derive_seed(master, &[seed::coord_f64(r), rep as u64])
}

/// Planted-pair samples for every `(r, replicate)` cell, in row order.
pub fn planted_samples(
    template: &PlantedSetup,
    rs: &[f64],
    replicates: usize,
    master_seed: u64,
    margin_for: impl Fn(f64) -> f64 + Sync,
) -> Result<Vec<(usize, RouteStat)>> {
    if replicates == 0 {
        return Err(Error::invalid("replicates", "must be at least 1"));
    }
    if rs.is_empty() {
        return Err(Error::invalid("rs", "must be a non-empty list"));
    }
    let cells: Vec<(f64, usize)> = rs
        .iter()
        .flat_map(|&r| (0..replicates).map(move |k| (r, k)))
        .collect();
    cells
        .par_iter()
        .map(|&(r, k)| {
            let setup = PlantedSetup {
                r,
                margin: margin_for(r),
                ..*template
            };
            planted_pair_with(&setup, replicate_seed(master_seed, r, k)).map(|s| (k, s))
        })
        .collect()
}

/// Least-squares slope of `log mean(ell)` against `log r`.
pub fn gamma_hat(rs: &[f64], mean_ell: &[f64]) -> f64 {
    let xs: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = mean_ell.iter().map(|m| m.ln()).collect();
    linear_fit(&xs, &ys).0
}

/// Options shared by the route-length experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RouteOptions {
    /// Fixed margin; `None` uses `max(20, r/2)` per separation.
    pub margin: Option<f64>,
    /// Margin proportional to the separation, `max(20, r/2, margin_per_r·r)`;
    /// ignored when `margin` is set.
    #[serde(default)]
    pub margin_per_r: Option<f64>,
    pub intensity: f64,
    pub angle: f64,
}

impl RouteOptions {
    pub fn margin_for(&self, r: f64) -> f64 {
        match (self.margin, self.margin_per_r) {
            (Some(m), _) => m,
            (None, Some(c)) => default_margin(r).max(c * r),
            (None, None) => default_margin(r),
        }
    }
}

impl Default for RouteOptions {
    fn default() -> Self {
        RouteOptions {
            margin: None,
            margin_per_r: None,
            intensity: 1.0,
            angle: 0.0,
        }
    }
}

fn route_table(rows: &[(usize, RouteStat)]) -> Table {
    let mut table = Table::new(&["kind", "r", "replicate", "seed", "ell", "ratio"]);
    for (k, s) in rows {
        table.push(vec![
            s.network_kind.to_string().into(),
            s.r.into(),
            (*k).into(),
            s.seed.into(),
            s.ell.into(),
            (s.ell / s.r).into(),
        ]);
    }
    table
}

/// Mean, standard error and maximum of `ell / r` per separation, and the
/// fitted growth exponent of the mean route length.
pub fn linearity_curve(
    kind: NetworkKind,
    rs: &[f64],
    replicates: usize,
    master_seed: u64,
    opts: RouteOptions,
) -> Result<ExperimentResult> {
    let template = PlantedSetup {
        intensity: opts.intensity,
        angle: opts.angle,
        ..PlantedSetup::new(kind, 1.0)
    };
    let rows = planted_samples(&template, rs, replicates, master_seed, |r| opts.margin_for(r))?;
    let unreachable = rows.iter().filter(|(_, s)| s.unreachable).count();
    let mut per_r = Vec::new();
    let mut mean_ell = Vec::new();
    for &r in rs {
        let ells: Vec<f64> = rows.iter().filter(|(_, s)| s.r == r).map(|(_, s)| s.ell).collect();
        let ratios: Vec<f64> = ells.iter().map(|e| e / r).collect();
        let s = summarize(&ratios);
        mean_ell.push(summarize(&ells).mean);
        per_r.push(json!({
            "r": r,
            "mean_ratio": s.mean,
            "stderr": s.stderr,
            "max_ratio": s.max,
            "mean_ell": summarize(&ells).mean,
        }));
    }
    let gamma = if rs.len() >= 2 { gamma_hat(rs, &mean_ell) } else { f64::NAN };
    let summary = json!({
        "network": kind.to_string(),
        "replicates": replicates,
        "per_r": per_r,
        "gamma_hat": gamma,
        "unreachable": unreachable,
    });
    Ok(ExperimentResult::new("linearity", route_table(&rows), summary))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub k: u32,
    pub r: f64,
    /// Estimate of `E[T^k] / max(1, r^k)`.
    pub ratio: f64,
    pub stderr: f64,
    pub replicates: usize,
}

fn moment_rows(
    kind: NetworkKind,
    rs: &[f64],
    k: u32,
    replicates: usize,
    master_seed: u64,
    opts: RouteOptions,
) -> Result<Vec<(usize, RouteStat, f64)>> {
    if k == 0 {
        return Err(Error::invalid("k", "must be at least 1"));
    }
    let template = PlantedSetup {
        intensity: opts.intensity,
        angle: opts.angle,
        ..PlantedSetup::new(kind, 1.0)
    };
    let rows = planted_samples(&template, rs, replicates, master_seed, |r| opts.margin_for(r))?;
    Ok(rows
        .into_iter()
        .map(|(rep, s)| {
            let v = s.ell.powi(k as i32) / s.r.powi(k as i32).max(1.0);
            (rep, s, v)
        })
        .collect())
}

/// Monte Carlo estimate of `E[T_z^k] / max(1, r^k)`, on the same samples as
/// [`linearity_curve`] for the same master seed.
pub fn moment_ratio(
    kind: NetworkKind,
    r: f64,
    k: u32,
    replicates: usize,
    master_seed: u64,
    opts: RouteOptions,
) -> Result<MomentEstimate> {
    let rows = moment_rows(kind, &[r], k, replicates, master_seed, opts)?;
    let s = summarize(&rows.iter().map(|x| x.2).collect::<Vec<_>>());
    Ok(MomentEstimate {
        k,
        r,
        ratio: s.mean,
        stderr: s.stderr,
        replicates,
    })
}

/// [`moment_ratio`] at several separations, with per-replicate rows and a
/// check that the first and last estimates agree within 2 standard errors.
pub fn moment_experiment(
    kind: NetworkKind,
    rs: &[f64],
    k: u32,
    replicates: usize,
    master_seed: u64,
    opts: RouteOptions,
) -> Result<ExperimentResult> {
    let rows = moment_rows(kind, rs, k, replicates, master_seed, opts)?;
    let mut table = Table::new(&["kind", "r", "k", "replicate", "seed", "ell", "moment_ratio"]);
    for (rep, s, v) in &rows {
        table.push(vec![
            kind.to_string().into(),
            s.r.into(),
            k.into(),
            (*rep).into(),
            s.seed.into(),
            s.ell.into(),
            (*v).into(),
        ]);
    }
    let per_r: Vec<Summary> = rs
        .iter()
        .map(|&r| summarize(&rows.iter().filter(|x| x.1.r == r).map(|x| x.2).collect::<Vec<_>>()))
        .collect();
    let stable = match (per_r.first(), per_r.last()) {
        (Some(a), Some(b)) => (a.mean - b.mean).abs() <= 2.0 * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt(),
        _ => true,
    };
    let summary = json!({
        "k": k,
        "per_r": rs.iter().zip(&per_r).map(|(r, s)| json!({ "r": r, "ratio": s.mean, "stderr": s.stderr })).collect::<Vec<_>>(),
        "stable": stable,
    });
    Ok(ExperimentResult::new("moment", table, summary))
}

/// Sum of network distances over all pairs with one city in the unit square
/// at the origin and the other in the unit square at `(r, 0)`.
///
/// For a rate-1 process its mean approximates `E T_z` at `|z| = r`, which
/// cross-checks the planted-pair estimate.
pub fn double_sum_sample(kind: NetworkKind, r: f64, margin: f64, intensity: f64, seed: u64) -> Result<f64> {
    let setup = PlantedSetup {
        margin,
        intensity,
        ..PlantedSetup::new(kind, r)
    };
    setup.validate()?;
    let window = Window::new(-margin, -margin, r + 1.0 + margin, 1.0 + margin)?;
    let config = sample_ppp(window, intensity, seed)?;
    let net = build(&config, kind)?;
    let in_a = |p: &Point| (0.0..1.0).contains(&p.x) && (0.0..1.0).contains(&p.y);
    let in_b = |p: &Point| (r..r + 1.0).contains(&p.x) && (0.0..1.0).contains(&p.y);
    let a: Vec<usize> = (0..config.len()).filter(|&i| in_a(&config.points[i])).collect();
    let b: Vec<usize> = (0..config.len()).filter(|&i| in_b(&config.points[i])).collect();
    if a.is_empty() || b.is_empty() {
        return Ok(0.0);
    }
    let adj = net.adjacency();
    let mut total = 0.0;
    for &s in &a {
        let dist = shortest_paths(&adj, s, None);
        for &t in &b {
            if !dist[t].is_finite() {
                return Err(Error::Unreachable { from: s, to: t });
            }
            total += dist[t];
        }
    }
    Ok(total)
}

/// Mean and standard error of [`double_sum_sample`] over replicates.
pub fn double_sum_estimate(
    kind: NetworkKind,
    r: f64,
    replicates: usize,
    master_seed: u64,
) -> Result<(f64, f64)> {
    let vals: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|k| {
            let s = seed::derive_seed(master_seed, &[seed::coord_f64(r), k as u64, 2]);
            double_sum_sample(kind, r, default_margin(r), 1.0, s)
        })
        .collect::<Result<_>>()?;
    let s = summarize(&vals);
    Ok((s.mean, s.stderr))
}
