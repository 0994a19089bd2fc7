//! Proximity networks on a configuration: RNG, Gabriel, lune-based
//! β-skeletons, Delaunay and the Euclidean MST.
//!
//! Every empty-region network is a subgraph of the Delaunay triangulation, so
//! builders test only Delaunay edges as candidates and answer each emptiness
//! query through a bucket grid.

pub mod delaunay;
mod union_find;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geom::{Configuration, GridIndex, Lens, Point, ProximityTemplate};

pub use delaunay::{triangulate, Triangulation};
pub use union_find::UnionFind;

/// Which rule produced a network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NetworkKind {
    Rng,
    Gabriel,
    BetaSkeleton(f64),
    Delaunay,
    Mst,
    RobustSub,
}

impl NetworkKind {
    /// The empty-region template behind this kind, if it has one.
    pub fn template(&self) -> Option<ProximityTemplate> {
        match *self {
            NetworkKind::Rng => Some(ProximityTemplate::FullLune),
            NetworkKind::Gabriel => Some(ProximityTemplate::GabrielDisc),
            NetworkKind::BetaSkeleton(beta) => Some(ProximityTemplate::BetaLune { beta }),
            _ => None,
        }
    }

    fn from_template(t: ProximityTemplate) -> Self {
        match t {
            ProximityTemplate::FullLune => NetworkKind::Rng,
            ProximityTemplate::GabrielDisc => NetworkKind::Gabriel,
            ProximityTemplate::BetaLune { beta } => NetworkKind::BetaSkeleton(beta),
        }
    }
}

impl fmt::Display for NetworkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetworkKind::Rng => f.write_str("rng"),
            NetworkKind::Gabriel => f.write_str("gabriel"),
            NetworkKind::BetaSkeleton(b) => write!(f, "beta_skeleton({b})"),
            NetworkKind::Delaunay => f.write_str("delaunay"),
            NetworkKind::Mst => f.write_str("mst"),
            NetworkKind::RobustSub => f.write_str("robust_sub"),
        }
    }
}

impl FromStr for NetworkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let kind = match s {
            "rng" => NetworkKind::Rng,
            "gabriel" => NetworkKind::Gabriel,
            "delaunay" => NetworkKind::Delaunay,
            "mst" => NetworkKind::Mst,
            "robust_sub" => NetworkKind::RobustSub,
            _ => {
                let beta = s
                    .strip_prefix("beta_skeleton(")
                    .and_then(|r| r.strip_suffix(')'))
                    .and_then(|b| b.trim().parse::<f64>().ok())
                    .ok_or_else(|| {
                        Error::invalid(
                            "network",
                            format!(
                                "unknown network kind `{s}`; expected rng, gabriel, \
                                 beta_skeleton(<beta>), delaunay or mst"
                            ),
                        )
                    })?;
                ProximityTemplate::BetaLune { beta }.validate()?;
                NetworkKind::BetaSkeleton(beta)
            }
        };
        Ok(kind)
    }
}

impl Serialize for NetworkKind {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NetworkKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub len: f64,
}

/// A geometric graph on the cities of a configuration.
///
/// Edges satisfy `i < j`, are unique and sorted by `(i, j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub n: usize,
    pub edges: Vec<Edge>,
    pub kind: NetworkKind,
    /// Fingerprint of the point list the network was built on.
    pub fingerprint: String,
    /// Set when the input was degenerate (collinear or with coincident cities).
    #[serde(default)]
    pub degenerate: bool,
}

impl Network {
    pub fn empty(n: usize, kind: NetworkKind, fingerprint: String) -> Self {
        Network {
            n,
            edges: Vec::new(),
            kind,
            fingerprint,
            degenerate: false,
        }
    }

    /// Builds a network from `(i, j)` pairs, canonicalising order and lengths.
    pub fn from_pairs(
        config: &Configuration,
        kind: NetworkKind,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Self {
        let pts = &config.points;
        let mut edges: Vec<Edge> = pairs
            .into_iter()
            .filter(|&(i, j)| i != j)
            .map(|(i, j)| {
                let (i, j) = (i.min(j), i.max(j));
                Edge {
                    i,
                    j,
                    len: pts[i].dist(pts[j]),
                }
            })
            .collect();
        edges.sort_unstable_by_key(|e| (e.i, e.j));
        edges.dedup_by_key(|e| (e.i, e.j));
        Network {
            n: pts.len(),
            edges,
            kind,
            fingerprint: config.fingerprint(),
            degenerate: false,
        }
    }

    pub fn edge_pairs(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.i, e.j)).collect()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        let key = (i.min(j), i.max(j));
        self.edges.binary_search_by_key(&key, |e| (e.i, e.j)).is_ok()
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.len).sum()
    }

    /// Neighbor lists in compressed form: neighbors of `v` are
    /// `targets[offsets[v]..offsets[v + 1]]` with matching `weights`.
    pub fn adjacency(&self) -> Adjacency {
        let mut deg = vec![0usize; self.n + 1];
        for e in &self.edges {
            deg[e.i + 1] += 1;
            deg[e.j + 1] += 1;
        }
        for v in 0..self.n {
            deg[v + 1] += deg[v];
        }
        let offsets = deg.clone();
        let mut fill = deg;
        let mut targets = vec![0usize; 2 * self.edges.len()];
        let mut weights = vec![0.0; 2 * self.edges.len()];
        for e in &self.edges {
            for (a, b) in [(e.i, e.j), (e.j, e.i)] {
                targets[fill[a]] = b;
                weights[fill[a]] = e.len;
                fill[a] += 1;
            }
        }
        Adjacency {
            offsets,
            targets,
            weights,
        }
    }

    /// The `i,j,len` CSV edge list.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["i", "j", "len"])?;
        for e in &self.edges {
            w.write_record([e.i.to_string(), e.j.to_string(), e.len.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Debug, Clone)]
pub struct Adjacency {
    pub offsets: Vec<usize>,
    pub targets: Vec<usize>,
    pub weights: Vec<f64>,
}

impl Adjacency {
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[v]..self.offsets[v + 1];
        self.targets[r.clone()].iter().copied().zip(self.weights[r].iter().copied())
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }
}

/// Delaunay edges expanded over coincident cities.
///
/// The triangulation sees one representative per location; each
/// representative edge stands for every pair across the two groups, and the
/// cities of a group are joined to each other by zero-length edges.
struct Candidates {
    pairs: Vec<(usize, usize)>,
    collinear: bool,
    duplicates: bool,
}

fn candidates(points: &[Point]) -> Candidates {
    let tri = triangulate(points);
    if !tri.duplicates {
        return Candidates {
            pairs: tri.edges,
            collinear: tri.collinear,
            duplicates: false,
        };
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].lex_cmp(&points[b]).then(a.cmp(&b)));
    let mut rep = vec![0usize; points.len()];
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); points.len()];
    let mut start = 0;
    for k in 0..order.len() {
        if points[order[k]] != points[order[start]] {
            start = k;
        }
        rep[order[k]] = order[start];
        groups[order[start]].push(order[k]);
    }
    let mut pairs = Vec::new();
    for &(a, b) in &tri.edges {
        for &i in &groups[a] {
            for &j in &groups[b] {
                pairs.push((i.min(j), i.max(j)));
            }
        }
    }
    for g in groups.iter().filter(|g| g.len() > 1) {
        for (x, &i) in g.iter().enumerate() {
            for &j in &g[x + 1..] {
                pairs.push((i.min(j), i.max(j)));
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    Candidates {
        pairs,
        collinear: tri.collinear,
        duplicates: true,
    }
}

/// Whether any city other than `i` and `j` lies in the open region.
pub(crate) fn region_occupied(
    points: &[Point],
    index: &GridIndex,
    region: &Lens,
    i: usize,
    j: usize,
) -> bool {
    let b = region.bounds();
    index.any_in_rect(b.min_x, b.min_y, b.max_x, b.max_y, |k| {
        k != i && k != j && region.contains(points[k])
    })
}

/// Empty-region graph for `template` over the given candidate pairs.
fn filter_empty_region(
    config: &Configuration,
    template: ProximityTemplate,
    pairs: &[(usize, usize)],
) -> Vec<(usize, usize)> {
    let points = &config.points;
    let index = GridIndex::new(points, &config.window, 2.0);
    pairs
        .par_iter()
        .copied()
        .filter(|&(i, j)| match template.region(points[i], points[j]) {
            None => true,
            Some(region) => !region_occupied(points, &index, &region, i, j),
        })
        .collect()
}

pub fn build_delaunay(config: &Configuration) -> Network {
    let c = candidates(&config.points);
    let mut net = Network::from_pairs(config, NetworkKind::Delaunay, c.pairs);
    net.degenerate = c.collinear || c.duplicates;
    net
}

pub fn build_proximity(config: &Configuration, template: ProximityTemplate) -> Result<Network> {
    template.validate()?;
    let c = candidates(&config.points);
    let kept = filter_empty_region(config, template, &c.pairs);
    let mut net = Network::from_pairs(config, NetworkKind::from_template(template), kept);
    net.degenerate = c.collinear || c.duplicates;
    Ok(net)
}

pub fn build_rng(config: &Configuration) -> Network {
    build_proximity(config, ProximityTemplate::FullLune).expect("the full lune template is always valid")
}

/// Euclidean minimum spanning forest by Kruskal over Delaunay edges, with
/// ties broken by `(len, i, j)`.
pub fn build_mst(config: &Configuration) -> Network {
    let c = candidates(&config.points);
    let points = &config.points;
    let mut weighted: Vec<(f64, usize, usize)> = c
        .pairs
        .iter()
        .map(|&(i, j)| (points[i].dist(points[j]), i, j))
        .collect();
    weighted.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut uf = UnionFind::new(points.len());
    let mut tree = Vec::with_capacity(points.len().saturating_sub(1));
    for (_, i, j) in weighted {
        if uf.union(i, j) {
            tree.push((i, j));
            if tree.len() + 1 == points.len() {
                break;
            }
        }
    }
    let mut net = Network::from_pairs(config, NetworkKind::Mst, tree);
    net.degenerate = c.collinear || c.duplicates;
    net
}

/// Builds the network named by `kind` (every kind except `robust_sub`).
pub fn build(config: &Configuration, kind: NetworkKind) -> Result<Network> {
    match kind {
        NetworkKind::Delaunay => Ok(build_delaunay(config)),
        NetworkKind::Mst => Ok(build_mst(config)),
        NetworkKind::RobustSub => Err(Error::invalid(
            "network",
            "robust_sub depends on a window rule; use robust::robust_subnetwork",
        )),
        k => build_proximity(config, k.template().expect("template kinds")),
    }
}

/// Every edge of `a` is an edge of `b`.
pub fn is_subgraph(a: &Network, b: &Network) -> Result<bool> {
    if a.n != b.n {
        return Err(Error::invalid(
            "network",
            format!("city counts differ ({} vs {})", a.n, b.n),
        ));
    }
    Ok(a.edges.iter().all(|e| b.has_edge(e.i, e.j)))
}

/// Connected components, each sorted, listed by smallest member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Components {
    /// `label[v]` is the smallest city index in the component of `v`.
    pub label: Vec<usize>,
    pub members: Vec<Vec<usize>>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.members.len()
    }

    /// Position in `members` of the largest component; ties go to the
    /// component holding the smallest city index. `None` when there are no cities.
    pub fn largest(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (k, m) in self.members.iter().enumerate() {
            if best.is_none_or(|b| m.len() > self.members[b].len()) {
                best = Some(k);
            }
        }
        best
    }

    pub fn largest_size(&self) -> usize {
        self.largest().map_or(0, |k| self.members[k].len())
    }
}

pub fn components(net: &Network) -> Components {
    components_of(net.n, net.edges.iter().map(|e| (e.i, e.j)))
}

pub(crate) fn components_of(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Components {
    let mut uf = UnionFind::new(n);
    for (i, j) in edges {
        uf.union(i, j);
    }
    let mut label = vec![usize::MAX; n];
    let mut slot = vec![usize::MAX; n];
    let mut members: Vec<Vec<usize>> = Vec::new();
    // Scanning in index order makes the first member seen the smallest.
    for v in 0..n {
        let r = uf.find(v);
        if slot[r] == usize::MAX {
            slot[r] = members.len();
            members.push(Vec::new());
        }
        let k = slot[r];
        members[k].push(v);
        label[v] = members[k][0];
    }
    Components { label, members }
}
