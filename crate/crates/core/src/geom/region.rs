//! Exact open regions that decide proximity-graph edges.
//!
//! Every template region is a [`Lens`]: the open intersection of two open
//! discs of equal radius. The RNG lune uses the endpoints themselves as
//! centers; the Gabriel disc is the degenerate lens with both centers at the
//! midpoint.

use serde::{Deserialize, Serialize};

use super::{Point, Window, SQ_TOL};
use crate::error::{Error, Result};

/// Open intersection of two open discs of squared radius `radius_sq`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lens {
    pub c1: Point,
    pub c2: Point,
    pub radius_sq: f64,
}

/// Axis-aligned bounds of a region's closure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Bounds {
    fn empty() -> Self {
        Bounds {
            min_x: f64::INFINITY,
            min_y: f64::INFINITY,
            max_x: f64::NEG_INFINITY,
            max_y: f64::NEG_INFINITY,
        }
    }

    fn add(&mut self, p: Point) {
        self.min_x = self.min_x.min(p.x);
        self.min_y = self.min_y.min(p.y);
        self.max_x = self.max_x.max(p.x);
        self.max_y = self.max_y.max(p.y);
    }
}

impl Lens {
    #[inline]
    pub fn contains(&self, z: Point) -> bool {
        let limit = self.radius_sq - SQ_TOL;
        z.dist_sq(self.c1) < limit && z.dist_sq(self.c2) < limit
    }

    fn in_closed_disc(&self, center: Point, z: Point) -> bool {
        z.dist_sq(center) <= self.radius_sq + SQ_TOL
    }

    /// The two points where the bounding circles cross, if the centers differ.
    pub fn corners(&self) -> Option<[Point; 2]> {
        let d_sq = self.c1.dist_sq(self.c2);
        if d_sq == 0.0 {
            return None;
        }
        let d = d_sq.sqrt();
        let h = (self.radius_sq - d_sq / 4.0).max(0.0).sqrt();
        let m = Point::new((self.c1.x + self.c2.x) / 2.0, (self.c1.y + self.c2.y) / 2.0);
        let (ux, uy) = ((self.c2.x - self.c1.x) / d, (self.c2.y - self.c1.y) / d);
        Some([
            Point::new(m.x - uy * h, m.y + ux * h),
            Point::new(m.x + uy * h, m.y - ux * h),
        ])
    }

    /// Exact bounding box of the closed lens, from the axis extrema of each
    /// arc that survive clipping by the other disc plus the two corners.
    pub fn bounds(&self) -> Bounds {
        let r = self.radius_sq.sqrt();
        let mut b = Bounds::empty();
        match self.corners() {
            None => {
                b.add(Point::new(self.c1.x - r, self.c1.y - r));
                b.add(Point::new(self.c1.x + r, self.c1.y + r));
            }
            Some(corners) => {
                for c in corners {
                    b.add(c);
                }
                for (center, other) in [(self.c1, self.c2), (self.c2, self.c1)] {
                    for e in [
                        Point::new(center.x - r, center.y),
                        Point::new(center.x + r, center.y),
                        Point::new(center.x, center.y - r),
                        Point::new(center.x, center.y + r),
                    ] {
                        if self.in_closed_disc(other, e) {
                            b.add(e);
                        }
                    }
                }
            }
        }
        b
    }

    /// True iff the open lens misses the complement of the closed window.
    pub fn inside_window(&self, window: &Window) -> bool {
        let b = self.bounds();
        b.min_x >= window.x0 && b.max_x <= window.x1 && b.min_y >= window.y0 && b.max_y <= window.y1
    }

    /// A point of the open lens lying strictly outside the closed window, if any.
    ///
    /// Used to build adversarial outside configurations: a city placed at the
    /// witness kills the edge the lens certifies.
    pub fn exterior_witness(&self, window: &Window) -> Option<Point> {
        let center = Point::new((self.c1.x + self.c2.x) / 2.0, (self.c1.y + self.c2.y) / 2.0);
        let mut extremes = Vec::with_capacity(10);
        if let Some(cs) = self.corners() {
            extremes.extend(cs);
        }
        let r = self.radius_sq.sqrt();
        for c in [self.c1, self.c2] {
            for e in [
                Point::new(c.x - r, c.y),
                Point::new(c.x + r, c.y),
                Point::new(c.x, c.y - r),
                Point::new(c.x, c.y + r),
            ] {
                if self.in_closed_disc(self.c1, e) && self.in_closed_disc(self.c2, e) {
                    extremes.push(e);
                }
            }
        }
        let outside = |p: Point| !window.contains(p);
        for e in extremes {
            if !outside(e) {
                continue;
            }
            // Slide from the boundary extreme toward the center until the
            // point is strictly inside the lens while still outside the window.
            let mut t = 0.5;
            for _ in 0..60 {
                let p = Point::new(e.x + t * (center.x - e.x), e.y + t * (center.y - e.y));
                if outside(p) && self.contains(p) {
                    return Some(p);
                }
                t *= 0.5;
            }
        }
        None
    }
}

/// The RNG lune of a pair: open intersection of the discs of radius d(p, q)
/// centered at p and at q.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lune {
    pub p: Point,
    pub q: Point,
    pub radius: f64,
}

impl Lune {
    pub fn new(p: Point, q: Point) -> Result<Self> {
        let radius = p.dist(q);
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::invalid("lune", "endpoints must be distinct and finite"));
        }
        Ok(Lune { p, q, radius })
    }

    pub fn lens(&self) -> Lens {
        Lens {
            c1: self.p,
            c2: self.q,
            radius_sq: self.p.dist_sq(self.q),
        }
    }

    /// `max(d(z,p), d(z,q)) < d(p,q)`, strictly.
    pub fn contains(&self, z: Point) -> bool {
        self.lens().contains(z)
    }

    pub fn inside_window(&self, window: &Window) -> bool {
        self.lens().inside_window(window)
    }
}

pub fn lune_contains(lune: &Lune, z: Point) -> bool {
    lune.contains(z)
}

pub fn lune_inside_window(lune: &Lune, window: &Window) -> bool {
    lune.inside_window(window)
}

/// The empty-region rule of a proximity graph.
///
/// `BetaLune { beta }` is the lune-based β-skeleton region for β in `[1, 2]`:
/// discs of radius βd/2 centered at `p + (β/2)(q − p)` and `q + (β/2)(p − q)`.
/// β = 1 is the Gabriel disc and β = 2 the RNG lune; every such region lies
/// inside the lune, so every template graph contains the RNG.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProximityTemplate {
    FullLune,
    GabrielDisc,
    BetaLune { beta: f64 },
}

impl ProximityTemplate {
    pub fn validate(&self) -> Result<()> {
        if let ProximityTemplate::BetaLune { beta } = *self {
            if !(1.0..=2.0).contains(&beta) {
                return Err(Error::invalid(
                    "beta",
                    format!("beta must lie in [1, 2], got {beta}"),
                ));
            }
        }
        Ok(())
    }

    /// The open region for the pair, or `None` when the endpoints coincide
    /// (a zero-length pair has an empty region).
    pub fn region(&self, p: Point, q: Point) -> Option<Lens> {
        let d_sq = p.dist_sq(q);
        if d_sq == 0.0 {
            return None;
        }
        Some(match *self {
            ProximityTemplate::FullLune => Lens {
                c1: p,
                c2: q,
                radius_sq: d_sq,
            },
            ProximityTemplate::GabrielDisc => {
                let m = Point::new((p.x + q.x) / 2.0, (p.y + q.y) / 2.0);
                Lens {
                    c1: m,
                    c2: m,
                    radius_sq: d_sq / 4.0,
                }
            }
            ProximityTemplate::BetaLune { beta } => {
                let h = beta / 2.0;
                Lens {
                    c1: Point::new(p.x + h * (q.x - p.x), p.y + h * (q.y - p.y)),
                    c2: Point::new(q.x + h * (p.x - q.x), q.y + h * (p.y - q.y)),
                    radius_sq: h * h * d_sq,
                }
            }
        })
    }

    pub fn name(&self) -> String {
        match self {
            ProximityTemplate::FullLune => "rng".into(),
            ProximityTemplate::GabrielDisc => "gabriel".into(),
            ProximityTemplate::BetaLune { beta } => format!("beta_skeleton({beta})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use rand::Rng;

    fn lune(px: f64, py: f64, qx: f64, qy: f64) -> Lune {
        Lune::new(Point::new(px, py), Point::new(qx, qy)).unwrap()
    }

    #[test]
    fn lune_membership_examples() {
        let l = lune(0.0, 0.0, 1.0, 0.0);
        assert!(l.contains(Point::new(0.5, 0.0)));
        assert!(!l.contains(Point::new(0.5, 3f64.sqrt() / 2.0)));
        assert!(!l.contains(Point::new(2.0, 0.0)));
        // Endpoints themselves are on the boundary.
        assert!(!l.contains(Point::new(0.0, 0.0)));
    }

    #[test]
    fn lune_window_examples() {
        let w = Window::square(10.0).unwrap();
        assert!(lune(5.0, 5.0, 6.0, 5.0).inside_window(&w));
        // A horizontal lune spans exactly [p.x, q.x] in x.
        assert!(lune(0.1, 5.0, 1.1, 5.0).inside_window(&w));
        assert!(lune(1.0, 5.0, 2.0, 5.0).inside_window(&w));
        assert!(!lune(5.0, 0.5, 6.0, 0.5).inside_window(&w));
        assert!(!lune(0.5, 5.0, 0.5, 6.0).inside_window(&w));
    }

    #[test]
    fn degenerate_lune_rejected() {
        assert!(Lune::new(Point::new(1.0, 1.0), Point::new(1.0, 1.0)).is_err());
    }

    #[test]
    fn beta_endpoints_match_named_templates() {
        let p = Point::new(0.25, 0.5);
        let q = Point::new(1.5, -0.75);
        let g = ProximityTemplate::GabrielDisc.region(p, q).unwrap();
        let b1 = ProximityTemplate::BetaLune { beta: 1.0 }.region(p, q).unwrap();
        assert!((g.radius_sq - b1.radius_sq).abs() < 1e-15);
        assert!(g.c1.dist(b1.c1) < 1e-15);
        let l = ProximityTemplate::FullLune.region(p, q).unwrap();
        let b2 = ProximityTemplate::BetaLune { beta: 2.0 }.region(p, q).unwrap();
        assert!(l.c1.dist(b2.c2) < 1e-15 && l.c2.dist(b2.c1) < 1e-15);
        assert!(ProximityTemplate::BetaLune { beta: 0.5 }.validate().is_err());
        assert!(ProximityTemplate::BetaLune { beta: 2.5 }.validate().is_err());
    }

    /// Dense sampling of the closed lens boundary; the lens is inside the
    /// window iff every sampled boundary point is.
    fn boundary_oracle(lens: &Lens, window: &Window, samples: usize) -> bool {
        let r = lens.radius_sq.sqrt();
        for (c, o) in [(lens.c1, lens.c2), (lens.c2, lens.c1)] {
            for k in 0..samples {
                let t = std::f64::consts::TAU * k as f64 / samples as f64;
                let p = Point::new(c.x + r * t.cos(), c.y + r * t.sin());
                if p.dist_sq(o) <= lens.radius_sq && !window.contains(p) {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn window_test_agrees_with_boundary_sampling() {
        let w = Window::square(10.0).unwrap();
        let mut rng = seed::rng(21);
        let mut disagreements = 0;
        let mut checked = 0;
        for template in [
            ProximityTemplate::FullLune,
            ProximityTemplate::GabrielDisc,
            ProximityTemplate::BetaLune { beta: 1.5 },
        ] {
            for _ in 0..1000 {
                let p = Point::new(rng.random_range(-1.0..11.0), rng.random_range(-1.0..11.0));
                let a = rng.random_range(0.0..std::f64::consts::TAU);
                let d = rng.random_range(0.05..4.0);
                let q = Point::new(p.x + d * a.cos(), p.y + d * a.sin());
                let lens = template.region(p, q).unwrap();
                let exact = lens.inside_window(&w);
                let oracle = boundary_oracle(&lens, &w, 100_000);
                // The sampling oracle can miss an excursion narrower than its
                // resolution; only the exact=inside/oracle=outside direction
                // would be a real defect.
                if exact && !oracle {
                    panic!("exact test says inside but boundary sample escapes: {lens:?}");
                }
                if exact != oracle {
                    disagreements += 1;
                }
                checked += 1;
            }
        }
        assert_eq!(disagreements, 0, "{disagreements} of {checked} lenses disagree");
    }

    #[test]
    fn exterior_witness_is_in_lens_and_outside() {
        let w = Window::square(10.0).unwrap();
        let l = lune(0.3, 5.0, 0.3, 6.0).lens();
        let z = l.exterior_witness(&w).expect("lune pokes out of x = 0");
        assert!(l.contains(z) && !w.contains(z));
        assert!(lune(5.0, 5.0, 6.0, 5.0).lens().exterior_witness(&w).is_none());
    }
}
