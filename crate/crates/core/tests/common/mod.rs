//! Brute-force oracles, written without any of the library's geometry.

#![allow(dead_code)]

use proxnet_core::Point;

fn d2(a: Point, b: Point) -> f64 {
    (a.x - b.x).powi(2) + (a.y - b.y).powi(2)
}

/// Pairs with no third point strictly closer to both endpoints than they are
/// to each other.
pub fn rng_edges(p: &[Point]) -> Vec<(usize, usize)> {
    let n = p.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let dij = d2(p[i], p[j]);
            if !(0..n).any(|k| k != i && k != j && d2(p[i], p[k]) < dij && d2(p[j], p[k]) < dij) {
                out.push((i, j));
            }
        }
    }
    out
}

/// Pairs whose diametral disc holds no third point in its interior.
pub fn gabriel_edges(p: &[Point]) -> Vec<(usize, usize)> {
    let n = p.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let dij = d2(p[i], p[j]);
            if !(0..n).any(|k| k != i && k != j && d2(p[i], p[k]) + d2(p[j], p[k]) < dij) {
                out.push((i, j));
            }
        }
    }
    out
}

/// Pairs admitting an empty open circle through both endpoints.
///
/// Circles through `a` and `b` have centres `m + t·u` on the bisector. A
/// point `k` at signed offset `s = (k − m)·u` lies inside exactly when
/// `2ts > |k − m|² − h²`, a half-line in `t`; the pair is an edge iff the
/// half-lines leave some `t` uncovered.
pub fn delaunay_edges(p: &[Point]) -> Vec<(usize, usize)> {
    let n = p.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (p[i], p[j]);
            let (mx, my) = ((a.x + b.x) / 2.0, (a.y + b.y) / 2.0);
            let len = d2(a, b).sqrt();
            let (ux, uy) = (-(b.y - a.y) / len, (b.x - a.x) / len);
            let h2 = d2(a, b) / 4.0;
            let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
            let mut blocked = false;
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let (dx, dy) = (p[k].x - mx, p[k].y - my);
                let s = dx * ux + dy * uy;
                let c = dx * dx + dy * dy - h2;
                if s > 0.0 {
                    hi = hi.min(c / (2.0 * s));
                } else if s < 0.0 {
                    lo = lo.max(c / (2.0 * s));
                } else if c < 0.0 {
                    blocked = true;
                }
            }
            if !blocked && lo < hi {
                out.push((i, j));
            }
        }
    }
    out
}

/// Prim's algorithm on the complete graph: `(edges, total length)`.
pub fn mst(p: &[Point]) -> (Vec<(usize, usize)>, f64) {
    let n = p.len();
    if n < 2 {
        return (Vec::new(), 0.0);
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut parent = vec![0usize; n];
    best[0] = 0.0;
    let mut edges = Vec::new();
    let mut total = 0.0;
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !in_tree[v])
            .min_by(|&a, &b| best[a].total_cmp(&best[b]))
            .unwrap();
        in_tree[v] = true;
        if v != 0 {
            edges.push((parent[v].min(v), parent[v].max(v)));
            total += best[v].sqrt();
        }
        for u in 0..n {
            if !in_tree[u] && d2(p[v], p[u]) < best[u] {
                best[u] = d2(p[v], p[u]);
                parent[u] = v;
            }
        }
    }
    edges.sort_unstable();
    (edges, total)
}

/// Number of connected components by breadth-first search.
pub fn component_count(n: usize, edges: &[(usize, usize)]) -> usize {
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut seen = vec![false; n];
    let mut count = 0;
    for s in 0..n {
        if seen[s] {
            continue;
        }
        count += 1;
        seen[s] = true;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
    }
    count
}

/// `λ^(n+1) L² πⁿ d0^(2n) / n!` evaluated through logarithms.
pub fn chain_bound(l: f64, d0: f64, n: u32, intensity: f64) -> f64 {
    let log_fact: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
    ((n + 1) as f64 * intensity.ln() + 2.0 * l.ln() + n as f64 * std::f64::consts::PI.ln()
        + 2.0 * n as f64 * d0.ln()
        - log_fact)
        .exp()
}

/// The Delaunay spanning ratio bound `2π / (3 cos(π/6))`.
pub fn delaunay_spanner_bound() -> f64 {
    2.0 * std::f64::consts::PI / (3.0 * (std::f64::consts::PI / 6.0).cos())
}
