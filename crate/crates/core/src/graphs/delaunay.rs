//! Incremental Delaunay triangulation.
//!
//! Bowyer–Watson insertion over a triangulation closed by ghost triangles
//! (each hull edge is paired with a triangle through a vertex at infinity),
//! with Hilbert-ordered insertion and a visibility walk for point location.
//! A triangle is in conflict with a new point when the point is strictly
//! inside its circumcircle; cocircular ties therefore keep the existing
//! triangle, which yields one valid Delaunay triangulation deterministically.

use std::cmp::Ordering;

use crate::geom::predicates::{incircle, orient2d};
use crate::geom::Point;

const GHOST: u32 = u32::MAX;
const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Tri {
    v: [u32; 3],
    /// `n[k]` is the triangle across the edge opposite `v[k]`.
    n: [u32; 3],
}

impl Tri {
    fn is_ghost(&self) -> bool {
        self.v.contains(&GHOST)
    }

    /// The finite edge of a ghost triangle, ordered so the outside is on its left.
    fn ghost_edge(&self) -> (u32, u32) {
        match self.v.iter().position(|&x| x == GHOST) {
            Some(0) => (self.v[1], self.v[2]),
            Some(1) => (self.v[2], self.v[0]),
            _ => (self.v[0], self.v[1]),
        }
    }
}

/// Result of triangulating a point list (indices refer to the input slice).
#[derive(Debug, Clone, Default)]
pub struct Triangulation {
    /// Counter-clockwise triangles; empty when all points are collinear.
    pub triangles: Vec<[usize; 3]>,
    /// Sorted, deduplicated `(i, j)` with `i < j`.
    pub edges: Vec<(usize, usize)>,
    /// Fewer than three affinely independent points: edges form a path.
    pub collinear: bool,
    /// Some input points coincide.
    pub duplicates: bool,
}

struct Builder<'a> {
    pts: &'a [Point],
    tris: Vec<Tri>,
    free: Vec<u32>,
    mark: Vec<u32>,
    dead: Vec<bool>,
    generation: u32,
    last: u32,
    walk_counter: usize,
}

impl<'a> Builder<'a> {
    fn p(&self, v: u32) -> Point {
        self.pts[v as usize]
    }

    fn alloc(&mut self, t: Tri) -> u32 {
        if let Some(i) = self.free.pop() {
            self.tris[i as usize] = t;
            self.mark[i as usize] = 0;
            self.dead[i as usize] = false;
            i
        } else {
            self.tris.push(t);
            self.mark.push(0);
            self.dead.push(false);
            (self.tris.len() - 1) as u32
        }
    }

    fn in_conflict(&self, t: u32, p: Point) -> bool {
        let tri = &self.tris[t as usize];
        if tri.is_ghost() {
            let (a, b) = tri.ghost_edge();
            let (pa, pb) = (self.p(a), self.p(b));
            match orient2d(pa, pb, p) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => strictly_between(pa, pb, p),
            }
        } else {
            let [a, b, c] = tri.v;
            incircle(self.p(a), self.p(b), self.p(c), p) == Ordering::Greater
        }
    }

    fn init(&mut self, a: u32, b: u32, c: u32) {
        let (a, b, c) = if orient2d(self.p(a), self.p(b), self.p(c)) == Ordering::Greater {
            (a, b, c)
        } else {
            (a, c, b)
        };
        // Real triangle 0, ghosts 1..=3 across the edges opposite a, b, c.
        self.tris = vec![
            Tri { v: [a, b, c], n: [1, 2, 3] },
            Tri { v: [c, b, GHOST], n: [3, 2, 0] },
            Tri { v: [a, c, GHOST], n: [1, 3, 0] },
            Tri { v: [b, a, GHOST], n: [2, 1, 0] },
        ];
        self.mark = vec![0; 4];
        self.dead = vec![false; 4];
        self.last = 0;
    }

    fn locate(&mut self, p: Point) -> u32 {
        let mut t = self.last;
        let cap = 4 * self.tris.len() + 64;
        for _ in 0..cap {
            let tri = self.tris[t as usize];
            if tri.is_ghost() {
                if self.in_conflict(t, p) {
                    return t;
                }
                let k = tri.v.iter().position(|&x| x == GHOST).unwrap();
                t = tri.n[k];
                continue;
            }
            self.walk_counter = self.walk_counter.wrapping_add(1);
            let off = self.walk_counter % 3;
            let mut moved = false;
            for s in 0..3 {
                let k = (s + off) % 3;
                let a = tri.v[(k + 1) % 3];
                let b = tri.v[(k + 2) % 3];
                if orient2d(self.p(a), self.p(b), p) == Ordering::Less {
                    t = tri.n[k];
                    moved = true;
                    break;
                }
            }
            if !moved {
                return t;
            }
        }
        // The walk should always terminate on a Delaunay triangulation; scan
        // as a safety net.
        (0..self.tris.len() as u32)
            .find(|&i| !self.dead[i as usize] && self.in_conflict(i, p))
            .expect("some triangle conflicts with every new point")
    }

    fn insert(&mut self, pv: u32) {
        let p = self.p(pv);
        let start = self.locate(p);
        self.generation += 1;
        let conflict_mark = self.generation * 2 + 1;
        let tested_mark = self.generation * 2;

        let mut stack = vec![start];
        let mut cavity = Vec::new();
        self.mark[start as usize] = conflict_mark;
        // (u, v, outside triangle)
        let mut boundary: Vec<(u32, u32, u32)> = Vec::new();
        while let Some(t) = stack.pop() {
            cavity.push(t);
            let tri = self.tris[t as usize];
            for k in 0..3 {
                let nb = tri.n[k];
                let m = self.mark[nb as usize];
                if m == conflict_mark {
                    continue;
                }
                if m != tested_mark {
                    if self.in_conflict(nb, p) {
                        self.mark[nb as usize] = conflict_mark;
                        stack.push(nb);
                        continue;
                    }
                    self.mark[nb as usize] = tested_mark;
                }
                boundary.push((tri.v[(k + 1) % 3], tri.v[(k + 2) % 3], nb));
            }
        }

        for &t in &cavity {
            self.free.push(t);
            self.dead[t as usize] = true;
        }

        let mut created: Vec<(u32, u32, u32)> = Vec::with_capacity(boundary.len());
        for &(u, v, outside) in &boundary {
            let nt = self.alloc(Tri {
                v: [u, v, pv],
                n: [NONE, NONE, outside],
            });
            // The outside triangle holds the shared edge reversed, as (v, u).
            let o = self.tris[outside as usize];
            let slot = (0..3)
                .find(|&s| o.v[(s + 1) % 3] == v && o.v[(s + 2) % 3] == u)
                .expect("cavity boundary edge is shared with its outside neighbor");
            self.tris[outside as usize].n[slot] = nt;
            created.push((u, v, nt));
        }
        for i in 0..created.len() {
            let (u, v, nt) = created[i];
            let across_vp = created.iter().find(|c| c.0 == v).map(|c| c.2).unwrap();
            let across_pu = created.iter().find(|c| c.1 == u).map(|c| c.2).unwrap();
            self.tris[nt as usize].n[0] = across_vp;
            self.tris[nt as usize].n[1] = across_pu;
        }
        self.last = created
            .iter()
            .find(|c| !self.tris[c.2 as usize].is_ghost())
            .map(|c| c.2)
            .unwrap_or(created[0].2);
        // Freed slots must not keep a live conflict mark.
        for &t in &cavity {
            self.mark[t as usize] = 0;
        }
    }
}

fn strictly_between(a: Point, b: Point, p: Point) -> bool {
    if a.x != b.x {
        a.x.min(b.x) < p.x && p.x < a.x.max(b.x)
    } else {
        a.y.min(b.y) < p.y && p.y < a.y.max(b.y)
    }
}

/// Position along a Hilbert curve on a 2^16 × 2^16 grid.
fn hilbert_index(mut x: u32, mut y: u32) -> u64 {
    let n: u32 = 1 << 16;
    let mut d: u64 = 0;
    let mut s = n / 2;
    while s > 0 {
        let rx = u32::from(x & s > 0);
        let ry = u32::from(y & s > 0);
        d += s as u64 * s as u64 * ((3 * rx) ^ ry) as u64;
        if ry == 0 {
            if rx == 1 {
                x = n - 1 - x;
                y = n - 1 - y;
            }
            std::mem::swap(&mut x, &mut y);
        }
        s /= 2;
    }
    d
}

/// Triangulates `points`. Coincident points are triangulated once (through
/// the lowest index of each group) and reported via `duplicates`.
pub fn triangulate(points: &[Point]) -> Triangulation {
    let n = points.len();
    let mut lex: Vec<usize> = (0..n).collect();
    lex.sort_by(|&a, &b| points[a].lex_cmp(&points[b]).then(a.cmp(&b)));
    let mut unique: Vec<usize> = Vec::with_capacity(n);
    let mut duplicates = false;
    for &i in &lex {
        match unique.last() {
            Some(&u) if points[u] == points[i] => duplicates = true,
            _ => unique.push(i),
        }
    }

    let mut out = Triangulation {
        duplicates,
        ..Default::default()
    };
    if unique.len() < 2 {
        out.collinear = true;
        return out;
    }

    let (mut minx, mut miny, mut maxx, mut maxy) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for &i in &unique {
        let p = points[i];
        minx = minx.min(p.x);
        miny = miny.min(p.y);
        maxx = maxx.max(p.x);
        maxy = maxy.max(p.y);
    }
    let span = (maxx - minx).max(maxy - miny).max(f64::MIN_POSITIVE);
    let scale = 65535.0 / span;
    let mut order = unique.clone();
    order.sort_by_cached_key(|&i| {
        let p = points[i];
        let hx = ((p.x - minx) * scale) as u32;
        let hy = ((p.y - miny) * scale) as u32;
        (hilbert_index(hx.min(65535), hy.min(65535)), i)
    });

    let a = order[0] as u32;
    let b = order[1] as u32;
    let third = order[2..]
        .iter()
        .position(|&c| orient2d(points[a as usize], points[b as usize], points[c]) != Ordering::Equal);
    let Some(third) = third.map(|k| k + 2) else {
        out.collinear = true;
        // `unique` is in lexicographic order, which runs along the line.
        out.edges = unique
            .windows(2)
            .map(|w| (w[0].min(w[1]), w[0].max(w[1])))
            .collect();
        out.edges.sort_unstable();
        return out;
    };

    let mut builder = Builder {
        pts: points,
        tris: Vec::with_capacity(2 * unique.len() + 8),
        free: Vec::new(),
        mark: Vec::new(),
        dead: Vec::new(),
        generation: 0,
        last: 0,
        walk_counter: 0,
    };
    builder.init(a, b, order[third] as u32);
    for (k, &v) in order.iter().enumerate() {
        if k == 0 || k == 1 || k == third {
            continue;
        }
        builder.insert(v as u32);
    }

    let dead = &builder.dead;
    let mut edges = Vec::with_capacity(3 * unique.len());
    for (t, tri) in builder.tris.iter().enumerate() {
        if dead[t] || tri.is_ghost() {
            continue;
        }
        let [x, y, z] = tri.v.map(|v| v as usize);
        out.triangles.push([x, y, z]);
        for (p, q) in [(x, y), (y, z), (z, x)] {
            edges.push((p.min(q), p.max(q)));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    out.edges = edges;
    out
}
