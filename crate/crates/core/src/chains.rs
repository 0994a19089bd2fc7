//! Diagnostics behind the essential-connectedness argument for the RNG:
//! θ-chains between robust components, decreasing-distance chains in a
//! Poisson sample, the longest MST edge, pairwise distance sums, and the
//! two bad events whose absence forces the central cities into one robust
//! component.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::experiment::{ExperimentResult, Table};
use crate::geom::{sample_ppp, Configuration, GridIndex, Lune, Point, Window};
use crate::graphs::build_mst;
use crate::robust::{robust_subnetwork, RobustReport, RobustRule};
use crate::seed;
use crate::stats::{fit_rss, linear_fit, proportion, summarize};

/// Tolerance on the distance comparisons of the chain conditions.
const CHAIN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaChain {
    /// `v0, v1, …, vm`.
    pub cities: Vec<usize>,
    /// `d(v0, v1), …, d(v_{m−1}, v_m)`.
    pub gaps: Vec<f64>,
    /// The last city is terminal: the lune to its nearest city in another
    /// component leaves the window.
    pub terminal: bool,
    /// The robust network was connected, so there is nothing to chain.
    pub connected: bool,
}

impl ThetaChain {
    pub fn m(&self) -> usize {
        self.cities.len().saturating_sub(1)
    }
}

/// Nearest city to `v` outside its component, ties by `(distance, index)`.
fn nearest_other(report: &RobustReport, config: &Configuration, v: usize) -> Option<(usize, f64)> {
    let label = &report.components.label;
    let pv = config.points[v];
    let mut best: Option<(usize, f64)> = None;
    for (u, &pu) in config.points.iter().enumerate() {
        if label[u] == label[v] {
            continue;
        }
        let d = pv.dist_sq(pu);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((u, d));
        }
    }
    best.map(|(u, d)| (u, d.sqrt()))
}

/// Follows `v ↦ θ(v)`, the nearest city in another component, from `v0`
/// until a terminal city, then checks the three chain conditions:
/// strictly decreasing gaps and distinct cities; if `m = 0`, no city of
/// another component within `Δ(v0)` of `v0`; if `m ≥ 1`, `Δ(v_m) < d(v0, v1)`.
/// A failed condition is reported as [`Error::Invariant`].
pub fn theta_chain(report: &RobustReport, config: &Configuration, v0: usize) -> Result<ThetaChain> {
    if v0 >= config.len() {
        return Err(Error::invalid("v0", format!("city {v0} out of range")));
    }
    if report.n_cities != config.len() {
        return Err(Error::invalid("report", "report and configuration sizes differ"));
    }
    if report.is_connected() {
        return Ok(ThetaChain {
            cities: vec![v0],
            gaps: Vec::new(),
            terminal: false,
            connected: true,
        });
    }
    let window = report.window;
    let pts = &config.points;
    let mut chain = ThetaChain {
        cities: vec![v0],
        gaps: Vec::new(),
        terminal: false,
        connected: false,
    };
    let mut v = v0;
    loop {
        let (w, d) = nearest_other(report, config, v).expect("a disconnected network has another component");
        let lune = Lune::new(pts[v], pts[w])?;
        if !lune.inside_window(&window) {
            chain.terminal = true;
            break;
        }
        if chain.cities.len() > config.len() {
            return Err(Error::Invariant(format!("θ-chain from {v0} revisits a city")));
        }
        chain.cities.push(w);
        chain.gaps.push(d);
        v = w;
    }
    check_chain(report, config, &chain)?;
    Ok(chain)
}

fn check_chain(report: &RobustReport, config: &Configuration, chain: &ThetaChain) -> Result<()> {
    let pts = &config.points;
    let window = report.window;
    let v0 = chain.cities[0];
    if let Some(k) = chain.gaps.windows(2).position(|g| g[1] >= g[0]) {
        return Err(Error::Invariant(format!(
            "θ-chain from {v0}: gap {} = {} does not drop below {}",
            k + 1,
            chain.gaps[k + 1],
            chain.gaps[k]
        )));
    }
    let mut seen = chain.cities.clone();
    seen.sort_unstable();
    if seen.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Invariant(format!("θ-chain from {v0} repeats a city")));
    }
    if chain.m() == 0 {
        let delta = window.boundary_distance(pts[v0]);
        if let Some((u, d)) = nearest_other(report, config, v0) {
            if d < delta - CHAIN_TOL {
                return Err(Error::Invariant(format!(
                    "θ-chain from {v0}: city {u} of another component at {d} < Δ = {delta}"
                )));
            }
        }
    } else {
        let last = *chain.cities.last().expect("non-empty");
        let delta = window.boundary_distance(pts[last]);
        if delta >= chain.gaps[0] + CHAIN_TOL {
            return Err(Error::Invariant(format!(
                "θ-chain from {v0}: Δ(v_m) = {delta} is not below d(v0, v1) = {}",
                chain.gaps[0]
            )));
        }
    }
    Ok(())
}

/// Replicate, seed, cities, components, longest chain, terminal chains.
type ThetaRow = (u64, u64, usize, usize, usize, usize);

/// Runs θ-chains from every city of `instances` random configurations whose
/// robust network is disconnected. Configurations are drawn in replicate
/// order and connected ones are skipped, so the output is deterministic.
pub fn theta_chain_check(l: f64, intensity: f64, instances: usize, master_seed: u64) -> Result<ExperimentResult> {
    let window = Window::square(l)?;
    let mut found: Vec<ThetaRow> = Vec::new();
    let mut drawn = 0u64;
    let batch = 64u64;
    let max_draws = (instances as u64).saturating_mul(1000).max(1000);
    while found.len() < instances {
        if drawn >= max_draws {
            return Err(Error::invalid(
                "L",
                format!("only {} disconnected instances in {drawn} draws; use a smaller L", found.len()),
            ));
        }
        let batch_rows: Vec<Option<ThetaRow>> = (drawn..drawn + batch)
            .into_par_iter()
            .map(|r| {
                let s = seed::derive_seed(master_seed, &[r]);
                let config = sample_ppp(window, intensity, s)?;
                let report = robust_subnetwork(&config, RobustRule::Rng)?;
                if report.is_connected() {
                    return Ok(None);
                }
                let mut max_m = 0;
                let mut terminal = 0;
                for v in 0..config.len() {
                    let chain = theta_chain(&report, &config, v)?;
                    max_m = max_m.max(chain.m());
                    terminal += usize::from(chain.terminal);
                }
                Ok(Some((r, s, config.len(), report.components.count(), max_m, terminal)))
            })
            .collect::<Result<_>>()?;
        found.extend(batch_rows.into_iter().flatten());
        drawn += batch;
    }
    found.truncate(instances);
    let mut table = Table::new(&["L", "replicate", "seed", "n_cities", "components", "max_m", "terminal_chains"]);
    for &(r, s, n, c, m, t) in &found {
        table.push(vec![l.into(), r.into(), s.into(), n.into(), c.into(), m.into(), t.into()]);
    }
    let chains: usize = found.iter().map(|x| x.2).sum();
    let summary = json!({
        "L": l,
        "instances": found.len(),
        "draws": drawn,
        "chains_checked": chains,
        "violations": 0,
    });
    Ok(ExperimentResult::new("chains", table, summary))
}

/// `intensity^(n+1) · L² · πⁿ · d0^(2n) / n!`, the expected number of
/// decreasing chains, which bounds the probability that one exists.
pub fn chain_bound(l: f64, d0: f64, n: u32, intensity: f64) -> f64 {
    let mut b = intensity * l * l;
    for k in 1..=n {
        b *= intensity * std::f64::consts::PI * d0 * d0 / k as f64;
    }
    b
}

pub const DEFAULT_WORK_CAP: u64 = 100_000_000;

/// Whether some chain `ξ0, …, ξn` of distinct cities with `ξ0` in `square`
/// has `d0 ≥ d(ξ0, ξ1) ≥ … ≥ d(ξ_{n−1}, ξn)`. Depth-first over the
/// `d0`-neighbourhood graph.
pub fn has_decreasing_chain(config: &Configuration, square: &Window, d0: f64, n: usize, work_cap: u64) -> Result<bool> {
    let pts = &config.points;
    let index = GridIndex::new(pts, &config.window, 2.0);
    let d0_sq = d0 * d0;
    let nbrs: Vec<Vec<(usize, f64)>> = pts
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let mut out = Vec::new();
            index.for_each_in_rect(p.x - d0, p.y - d0, p.x + d0, p.y + d0, |j| {
                let d = p.dist_sq(pts[j]);
                if j != i && d <= d0_sq {
                    out.push((j, d));
                }
            });
            out
        })
        .collect();

    struct Search<'a> {
        nbrs: &'a [Vec<(usize, f64)>],
        path: Vec<usize>,
        work: u64,
        cap: u64,
        n: usize,
    }

    impl Search<'_> {
        fn dfs(&mut self, v: usize, max_gap_sq: f64) -> Result<bool> {
            self.work += 1;
            if self.work > self.cap {
                return Err(Error::WorkCap { cap: self.cap });
            }
            if self.path.len() == self.n + 1 {
                return Ok(true);
            }
            for k in 0..self.nbrs[v].len() {
                let (u, d) = self.nbrs[v][k];
                if d > max_gap_sq || self.path.contains(&u) {
                    continue;
                }
                self.path.push(u);
                let found = self.dfs(u, d)?;
                self.path.pop();
                if found {
                    return Ok(true);
                }
            }
            Ok(false)
        }
    }

    let mut search = Search {
        nbrs: &nbrs,
        path: Vec::with_capacity(n + 1),
        work: 0,
        cap: work_cap,
        n,
    };
    for (i, &p) in pts.iter().enumerate() {
        if !square.contains(p) {
            continue;
        }
        search.path.clear();
        search.path.push(i);
        if search.dfs(i, d0_sq)? {
            return Ok(true);
        }
    }
    Ok(false)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainProbability {
    pub empirical: f64,
    pub stderr: f64,
    pub bound: f64,
    pub hits: usize,
    pub replicates: usize,
}

/// Monte Carlo probability of a decreasing chain starting in `[0, L]²`,
/// next to its analytic bound. Cities are sampled on the square enlarged by
/// `n·d0`, which holds every city such a chain can reach.
pub fn decreasing_chain_probability(
    l: f64,
    d0: f64,
    n: usize,
    intensity: f64,
    replicates: usize,
    master_seed: u64,
    work_cap: u64,
) -> Result<ChainProbability> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    if !(d0.is_finite() && d0 >= 0.0) {
        return Err(Error::invalid("d0", "must be finite and non-negative"));
    }
    if replicates == 0 {
        return Err(Error::invalid("replicates", "must be at least 1"));
    }
    let bound = chain_bound(l, d0, n as u32, intensity);
    if d0 == 0.0 {
        return Ok(ChainProbability {
            empirical: 0.0,
            stderr: 0.0,
            bound,
            hits: 0,
            replicates,
        });
    }
    let square = Window::square(l)?;
    let outer = square.expand(n as f64 * d0);
    let found: Vec<bool> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let s = seed::derive_seed(master_seed, &[seed::coord_f64(d0), n as u64, r as u64]);
            let config = sample_ppp(outer, intensity, s)?;
            has_decreasing_chain(&config, &square, d0, n, work_cap)
        })
        .collect::<Result<_>>()?;
    let hits = found.iter().filter(|&&f| f).count();
    let (empirical, stderr) = proportion(hits, replicates);
    Ok(ChainProbability {
        empirical,
        stderr,
        bound,
        hits,
        replicates,
    })
}

/// Empirical chain probability against the bound over a grid of `(n, d0)`.
pub fn decreasing_chain_grid(
    l: f64,
    ns: &[usize],
    d0s: &[f64],
    intensity: f64,
    replicates: usize,
    master_seed: u64,
    work_cap: u64,
) -> Result<ExperimentResult> {
    let mut table = Table::new(&["L", "n", "d0", "replicates", "hits", "empirical", "stderr", "bound", "within_bound"]);
    let mut all_ok = true;
    for &n in ns {
        for &d0 in d0s {
            let c = decreasing_chain_probability(l, d0, n, intensity, replicates, master_seed, work_cap)?;
            let ok = c.empirical <= c.bound + 3.0 * c.stderr;
            all_ok &= ok;
            table.push(vec![
                l.into(),
                n.into(),
                d0.into(),
                replicates.into(),
                c.hits.into(),
                c.empirical.into(),
                c.stderr.into(),
                c.bound.into(),
                ok.into(),
            ]);
        }
    }
    let summary = json!({ "L": l, "intensity": intensity, "all_within_bound": all_ok });
    Ok(ExperimentResult::new("chains", table, summary))
}

pub fn longest_mst_edge(config: &Configuration) -> Result<f64> {
    if config.len() < 2 {
        return Err(Error::invalid("config", "need at least two cities"));
    }
    Ok(build_mst(config).edges.iter().map(|e| e.len).fold(0.0, f64::max))
}

/// Mean longest MST edge over square windows, with fits of the mean against
/// `log L` and against `√L`, and the fraction of samples within `c*·log L`
/// for each `c*`.
pub fn longest_mst_sweep(
    ls: &[f64],
    intensity: f64,
    replicates: usize,
    c_stars: &[f64],
    master_seed: u64,
) -> Result<ExperimentResult> {
    if ls.len() < 2 || replicates == 0 {
        return Err(Error::invalid("Ls", "need at least two sizes and one replicate"));
    }
    let cells: Vec<(f64, usize)> = ls.iter().flat_map(|&l| (0..replicates).map(move |r| (l, r))).collect();
    let rows: Vec<(f64, usize, u64, usize, f64)> = cells
        .par_iter()
        .map(|&(l, r)| {
            let s = seed::derive_seed(master_seed, &[seed::coord_f64(l), r as u64]);
            let config = sample_ppp(Window::square(l)?, intensity, s)?;
            let longest = if config.len() < 2 { 0.0 } else { longest_mst_edge(&config)? };
            Ok((l, r, s, config.len(), longest))
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(&["L", "replicate", "seed", "n_cities", "longest"]);
    for &(l, r, s, n, x) in &rows {
        table.push(vec![l.into(), r.into(), s.into(), n.into(), x.into()]);
    }
    let means: Vec<f64> = ls
        .iter()
        .map(|&l| summarize(&rows.iter().filter(|x| x.0 == l).map(|x| x.4).collect::<Vec<_>>()).mean)
        .collect();
    let logs: Vec<f64> = ls.iter().map(|l| l.ln()).collect();
    let roots: Vec<f64> = ls.iter().map(|l| l.sqrt()).collect();
    let (slope_log, _) = linear_fit(&logs, &means);
    let rss_log = fit_rss(&logs, &means);
    let rss_sqrt = fit_rss(&roots, &means);
    let sensitivity: Vec<_> = c_stars
        .iter()
        .map(|&c| {
            let per_l: Vec<_> = ls
                .iter()
                .map(|&l| {
                    let sel: Vec<_> = rows.iter().filter(|x| x.0 == l).collect();
                    let ok = sel.iter().filter(|x| x.4 <= c * l.ln()).count();
                    json!({ "L": l, "fraction_within": ok as f64 / sel.len() as f64 })
                })
                .collect();
            json!({ "c_star": c, "per_L": per_l })
        })
        .collect();
    let summary = json!({
        "means": ls.iter().zip(&means).map(|(l, m)| json!({ "L": l, "mean_longest": m })).collect::<Vec<_>>(),
        "slope_vs_log_L": slope_log,
        "rss_log": rss_log,
        "rss_sqrt": rss_sqrt,
        "prefers_log": rss_log < rss_sqrt,
        "sensitivity": sensitivity,
    });
    Ok(ExperimentResult::new("chains", table, summary))
}

/// Sum of `d(ξ, ξ′)` over unordered pairs of cities in the open disc of
/// radius `sigma` around the origin.
pub fn pairwise_distance_sum(config: &Configuration, sigma: f64) -> Result<f64> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::invalid("sigma", "must be finite and non-negative"));
    }
    let origin = Point::new(0.0, 0.0);
    let index = GridIndex::new(&config.points, &config.window, 2.0);
    let mut inside = Vec::new();
    index.for_each_in_rect(-sigma, -sigma, sigma, sigma, |i| {
        if config.points[i].dist_sq(origin) < sigma * sigma {
            inside.push(config.points[i]);
        }
    });
    let mut total = 0.0;
    for (k, &a) in inside.iter().enumerate() {
        for &b in &inside[k + 1..] {
            total += a.dist(b);
        }
    }
    Ok(total)
}

/// Parameters of the bad-event check on `[0, L]²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prop2Params {
    #[serde(rename = "L")]
    pub l: f64,
    pub c_star: f64,
    pub intensity: f64,
}

impl Prop2Params {
    /// `(n, d0, M)` with `n = ⌊√L⌋`, `d0 = c*·log L`, `M = L − 2(1 + n)·d0`.
    pub fn scales(&self) -> (usize, f64, f64) {
        let n = self.l.sqrt().floor() as usize;
        let d0 = self.c_star * self.l.ln();
        (n, d0, self.l - 2.0 * (1.0 + n as f64) * d0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l.is_finite() && self.l > 1.0) {
            return Err(Error::invalid("L", "must exceed 1"));
        }
        if !(self.c_star.is_finite() && self.c_star > 0.0) {
            return Err(Error::invalid("c_star", "must be positive"));
        }
        if !(self.intensity.is_finite() && self.intensity >= 0.0) {
            return Err(Error::invalid("intensity", "must be finite and non-negative"));
        }
        let (_, _, m) = self.scales();
        if m <= 1.0 {
            return Err(Error::invalid(
                "L",
                format!("M = {m:.3} ≤ 1 at L = {}, c* = {}; increase L or lower c*", self.l, self.c_star),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prop2Events {
    pub a: bool,
    pub b: bool,
    /// All cities at depth `≥ (n + 1)·d0` share one robust component.
    pub central_connected: bool,
    /// `¬A ∧ ¬B ⇒ central_connected`.
    pub implication_holds: bool,
    pub n_cities: usize,
    pub n_central: usize,
}

/// Evaluates both bad events on one configuration of `[0, L]²`.
pub fn prop2_events_for(config: &Configuration, params: &Prop2Params) -> Result<Prop2Events> {
    params.validate()?;
    let (n, d0, _) = params.scales();
    let depth = (n as f64 + 1.0) * d0;
    let window = config.window;
    let report = robust_subnetwork(config, RobustRule::Rng)?;
    let label = &report.components.label;
    let pts = &config.points;
    // The central square is the set of cities at depth ≥ (n+1)·d0, the same
    // predicate event A uses, so rounding cannot separate the two.
    let central: Vec<usize> = (0..pts.len()).filter(|&i| window.boundary_distance(pts[i]) >= depth).collect();

    let index = GridIndex::new(pts, &window, 2.0);
    let a = central.iter().any(|&i| {
        let p = pts[i];
        index.any_in_rect(p.x - d0, p.y - d0, p.x + d0, p.y + d0, |j| {
            label[j] != label[i] && p.dist(pts[j]) <= d0
        })
    });

    let b = if central.len() >= 2 {
        let sub = Configuration::new(central.iter().map(|&i| pts[i]).collect(), window)?;
        longest_mst_edge(&sub)? > d0
    } else {
        false
    };
    let central_connected = central.windows(2).all(|w| label[w[0]] == label[w[1]]);
    Ok(Prop2Events {
        a,
        b,
        central_connected,
        implication_holds: a || b || central_connected,
        n_cities: pts.len(),
        n_central: central.len(),
    })
}

pub fn prop2_events(params: &Prop2Params, replicates: usize, master_seed: u64) -> Result<ExperimentResult> {
    params.validate()?;
    if replicates == 0 {
        return Err(Error::invalid("replicates", "must be at least 1"));
    }
    let (n, d0, m) = params.scales();
    let window = Window::square(params.l)?;
    let rows: Vec<(usize, u64, Prop2Events)> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let s = seed::derive_seed(master_seed, &[seed::coord_f64(params.l), r as u64]);
            let config = sample_ppp(window, params.intensity, s)?;
            Ok((r, s, prop2_events_for(&config, params)?))
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(&[
        "L",
        "replicate",
        "seed",
        "n_cities",
        "n_central",
        "A",
        "B",
        "central_connected",
        "implication",
    ]);
    for (r, s, e) in &rows {
        table.push(vec![
            params.l.into(),
            (*r).into(),
            (*s).into(),
            e.n_cities.into(),
            e.n_central.into(),
            e.a.into(),
            e.b.into(),
            e.central_connected.into(),
            e.implication_holds.into(),
        ]);
    }
    let count = |f: &dyn Fn(&Prop2Events) -> bool| rows.iter().filter(|x| f(&x.2)).count();
    let (pa, sa) = proportion(count(&|e| e.a), replicates);
    let (pb, sb) = proportion(count(&|e| e.b), replicates);
    let (pab, sab) = proportion(count(&|e| e.a || e.b), replicates);
    let violations = count(&|e| !e.implication_holds);
    let summary = json!({
        "L": params.l,
        "c_star": params.c_star,
        "n": n,
        "d0": d0,
        "M": m,
        "p_A": pa, "stderr_A": sa,
        "p_B": pb, "stderr_B": sb,
        "p_A_or_B": pab, "stderr_A_or_B": sab,
        "implication_violations": violations,
    });
    Ok(ExperimentResult::new("prop2", table, summary))
}
