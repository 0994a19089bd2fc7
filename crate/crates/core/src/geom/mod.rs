//! Point configurations, sampling windows and the Poisson sampler.

pub mod index;
pub mod predicates;
pub mod region;

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::seed;

pub use index::GridIndex;
pub use region::{Lens, Lune, ProximityTemplate};

/// Absolute tolerance applied to every squared-distance comparison.
///
/// A point counts as inside an open region only if it is inside by more than
/// this amount, so points on a region boundary never block an edge.
pub const SQ_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    #[inline]
    pub fn dist_sq(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    #[inline]
    pub fn dist(self, other: Point) -> f64 {
        self.dist_sq(other).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub(crate) fn lex_cmp(&self, other: &Point) -> std::cmp::Ordering {
        self.x.total_cmp(&other.x).then(self.y.total_cmp(&other.y))
    }
}

/// Closed axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Window {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        let w = Window { x0, y0, x1, y1 };
        w.validate()?;
        Ok(w)
    }

    /// The square `[0, side]²`.
    pub fn square(side: f64) -> Result<Self> {
        Window::new(0.0, 0.0, side, side)
    }

    pub fn centered_square(center: Point, side: f64) -> Result<Self> {
        let h = side / 2.0;
        Window::new(center.x - h, center.y - h, center.x + h, center.y + h)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x0, self.y0, self.x1, self.y1]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("window", "bounds must be finite"));
        }
        if !(self.x0 < self.x1 && self.y0 < self.y1) {
            return Err(Error::invalid(
                "window",
                format!("degenerate window {:?}", self),
            ));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        Point::new((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }

    pub fn contains_open(&self, p: Point) -> bool {
        p.x > self.x0 && p.x < self.x1 && p.y > self.y0 && p.y < self.y1
    }

    pub fn contains_window(&self, other: &Window) -> bool {
        other.x0 >= self.x0 && other.x1 <= self.x1 && other.y0 >= self.y0 && other.y1 <= self.y1
    }

    pub fn expand(&self, margin: f64) -> Window {
        Window {
            x0: self.x0 - margin,
            y0: self.y0 - margin,
            x1: self.x1 + margin,
            y1: self.y1 + margin,
        }
    }

    fn include(&self, p: Point) -> Window {
        Window {
            x0: self.x0.min(p.x),
            y0: self.y0.min(p.y),
            x1: self.x1.max(p.x),
            y1: self.y1.max(p.y),
        }
    }

    /// Distance from `p` to the boundary of the window (Δ for points inside).
    pub fn boundary_distance(&self, p: Point) -> f64 {
        let inner = (p.x - self.x0)
            .min(self.x1 - p.x)
            .min(p.y - self.y0)
            .min(self.y1 - p.y);
        if inner >= 0.0 {
            inner
        } else {
            let dx = (self.x0 - p.x).max(0.0).max(p.x - self.x1);
            let dy = (self.y0 - p.y).max(0.0).max(p.y - self.y1);
            (dx * dx + dy * dy).sqrt()
        }
    }
}

/// A finite set of cities in a window, with the provenance of the sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub points: Vec<Point>,
    pub window: Window,
    pub seed: Option<u64>,
    pub intensity: f64,
}

impl Configuration {
    /// A deterministic (unsampled) configuration. Every point must lie in the closed window.
    pub fn new(points: Vec<Point>, window: Window) -> Result<Self> {
        window.validate()?;
        for (i, p) in points.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::invalid("points", format!("point {i} is not finite")));
            }
            if !window.contains(*p) {
                return Err(Error::invalid(
                    "points",
                    format!("point {i} ({}, {}) lies outside the window", p.x, p.y),
                ));
            }
        }
        Ok(Configuration {
            points,
            window,
            seed: None,
            intensity: 0.0,
        })
    }

    pub fn empty(window: Window) -> Self {
        Configuration {
            points: Vec::new(),
            window,
            seed: None,
            intensity: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Cities in the open interior of `window`, re-windowed to `window`.
    /// Returns the sub-configuration and the original index of each city.
    pub fn restrict_open(&self, window: Window) -> (Configuration, Vec<usize>) {
        let mut points = Vec::new();
        let mut origin = Vec::new();
        for (i, &p) in self.points.iter().enumerate() {
            if window.contains_open(p) {
                points.push(p);
                origin.push(i);
            }
        }
        (
            Configuration {
                points,
                window,
                seed: self.seed,
                intensity: self.intensity,
            },
            origin,
        )
    }

    /// Hex SHA-256 prefix of the point list (bit patterns, in order).
    pub fn fingerprint(&self) -> String {
        points_fingerprint(&self.points)
    }

    pub fn has_duplicates(&self) -> bool {
        let mut sorted = self.points.clone();
        sorted.sort_by(Point::lex_cmp);
        sorted.windows(2).any(|w| w[0] == w[1])
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "x", "y"])?;
        for (i, p) in self.points.iter().enumerate() {
            w.write_record([i.to_string(), p.x.to_string(), p.y.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the `index,x,y` CSV form. Indices must be `0..n` in order.
    pub fn read_csv<R: Read>(input: R, envelope: &ConfigEnvelope) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let mut points = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |k: usize, name: &str| -> Result<f64> {
                rec.get(k)
                    .ok_or_else(|| Error::invalid(name, format!("row {row}: missing column")))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::invalid(name, format!("row {row}: {e}")))
            };
            let idx = parse(0, "index")?;
            if idx != row as f64 {
                return Err(Error::invalid("index", format!("row {row}: expected index {row}")));
            }
            points.push(Point::new(parse(1, "x")?, parse(2, "y")?));
        }
        let mut c = Configuration::new(points, envelope.window)?;
        c.seed = envelope.seed;
        c.intensity = envelope.intensity;
        Ok(c)
    }

    pub fn envelope(&self) -> ConfigEnvelope {
        ConfigEnvelope {
            window: self.window,
            intensity: self.intensity,
            seed: self.seed,
            n: self.points.len(),
            fingerprint: self.fingerprint(),
        }
    }
}

/// JSON metadata carried alongside the point CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEnvelope {
    pub window: Window,
    pub intensity: f64,
    pub seed: Option<u64>,
    pub n: usize,
    pub fingerprint: String,
}

pub fn points_fingerprint(points: &[Point]) -> String {
    let mut h = Sha256::new();
    for p in points {
        h.update(p.x.to_bits().to_le_bytes());
        h.update(p.y.to_bits().to_le_bytes());
    }
    hex::encode(&h.finalize()[..16])
}

/// Homogeneous Poisson process of the given intensity on `window`.
///
/// The count is Poisson(intensity × area) and positions are i.i.d. uniform;
/// the output is a pure function of `(window, intensity, seed)`.
pub fn sample_ppp(window: Window, intensity: f64, seed: u64) -> Result<Configuration> {
    window.validate()?;
    if !intensity.is_finite() || intensity < 0.0 {
        return Err(Error::invalid(
            "intensity",
            format!("must be finite and non-negative, got {intensity}"),
        ));
    }
    let mut rng = seed::rng(seed);
    let mean = intensity * window.area();
    let count = if mean > 0.0 {
        let dist = Poisson::new(mean).map_err(|e| Error::invalid("intensity", e.to_string()))?;
        dist.sample(&mut rng) as usize
    } else {
        0
    };
    let (w, h) = (window.width(), window.height());
    let points = (0..count)
        .map(|_| {
            let x = window.x0 + w * rng.random::<f64>();
            let y = window.y0 + h * rng.random::<f64>();
            // Rounding in x0 + w*u can land a hair past x1.
            Point::new(x.min(window.x1), y.min(window.y1))
        })
        .collect();
    Ok(Configuration {
        points,
        window,
        seed: Some(seed),
        intensity,
    })
}

/// Exactly `n` i.i.d. uniform points on `window`.
pub fn sample_uniform(window: Window, n: usize, seed: u64) -> Result<Configuration> {
    window.validate()?;
    let mut rng = seed::rng(seed);
    let (w, h) = (window.width(), window.height());
    let points = (0..n)
        .map(|_| {
            let x = window.x0 + w * rng.random::<f64>();
            let y = window.y0 + h * rng.random::<f64>();
            Point::new(x.min(window.x1), y.min(window.y1))
        })
        .collect();
    Ok(Configuration {
        points,
        window,
        seed: Some(seed),
        intensity: n as f64 / window.area(),
    })
}

#[derive(Debug, Clone)]
pub struct Planted {
    pub config: Configuration,
    /// Index of each planted point in `config.points`.
    pub indices: Vec<usize>,
    /// A planted point coincides with an existing or another planted point.
    pub degenerate: bool,
    /// The window was enlarged to cover a planted point outside it.
    pub window_expanded: bool,
}

/// Appends `extra` to the configuration, keeping existing indices stable.
pub fn plant(config: &Configuration, extra: &[Point]) -> Planted {
    let mut out = config.clone();
    let mut indices = Vec::with_capacity(extra.len());
    let mut degenerate = false;
    let mut window_expanded = false;
    for &p in extra {
        if out.points.contains(&p) {
            degenerate = true;
        }
        if !out.window.contains(p) {
            out.window = out.window.include(p);
            window_expanded = true;
        }
        indices.push(out.points.len());
        out.points.push(p);
    }
    Planted {
        config: out,
        indices,
        degenerate,
        window_expanded,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_intensity_is_empty() {
        let c = sample_ppp(Window::square(10.0).unwrap(), 0.0, 99).unwrap();
        assert!(c.is_empty());
    }

    #[test]
    fn same_seed_same_points() {
        let w = Window::square(10.0).unwrap();
        let a = sample_ppp(w, 1.0, 5).unwrap();
        let b = sample_ppp(w, 1.0, 5).unwrap();
        assert_eq!(a, b);
        let c = sample_ppp(w, 1.0, 6).unwrap();
        assert_ne!(a.points, c.points);
    }

    #[test]
    fn rejects_bad_parameters() {
        let w = Window::square(10.0).unwrap();
        assert!(sample_ppp(w, f64::NAN, 1).is_err());
        assert!(sample_ppp(w, -1.0, 1).is_err());
        assert!(Window::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(Window::new(0.0, 0.0, f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn poisson_mean_matches_area() {
        let w = Window::square(10.0).unwrap();
        let reps = 10_000u64;
        let total: usize = (0..reps)
            .map(|r| sample_ppp(w, 1.0, seed::derive_seed(3, &[r])).unwrap().len())
            .sum();
        let mean = total as f64 / reps as f64;
        assert!((mean - 100.0).abs() < 3.0, "mean count {mean}");
    }

    #[test]
    fn disjoint_subwindow_counts_uncorrelated() {
        let w = Window::new(0.0, 0.0, 10.0, 5.0).unwrap();
        let reps = 10_000u64;
        let mut left = Vec::new();
        let mut right = Vec::new();
        for r in 0..reps {
            let c = sample_ppp(w, 1.0, seed::derive_seed(11, &[r])).unwrap();
            let l = c.points.iter().filter(|p| p.x < 5.0).count() as f64;
            left.push(l);
            right.push(c.len() as f64 - l);
        }
        let n = reps as f64;
        let ml = left.iter().sum::<f64>() / n;
        let mr = right.iter().sum::<f64>() / n;
        let cov: f64 = left.iter().zip(&right).map(|(a, b)| (a - ml) * (b - mr)).sum::<f64>() / n;
        let vl: f64 = left.iter().map(|a| (a - ml).powi(2)).sum::<f64>() / n;
        let vr: f64 = right.iter().map(|b| (b - mr).powi(2)).sum::<f64>() / n;
        let rho = cov / (vl * vr).sqrt();
        assert!(rho.abs() < 0.05, "rho = {rho}");
    }

    #[test]
    fn plant_behaviour() {
        let w = Window::square(10.0).unwrap();
        let base = sample_ppp(w, 0.5, 1).unwrap();
        let same = plant(&base, &[]);
        assert_eq!(same.config, base);
        assert!(same.indices.is_empty());

        let empty = Configuration::empty(w);
        let two = plant(&empty, &[Point::new(0.0, 0.0), Point::new(3.0, 0.0)]);
        assert_eq!(two.config.len(), 2);
        assert_eq!(two.indices, vec![0, 1]);
        assert!(!two.degenerate);

        let dup = plant(&base, &[base.points[0]]);
        assert!(dup.degenerate);
        assert_eq!(dup.indices, vec![base.len()]);
        assert_eq!(&dup.config.points[..base.len()], &base.points[..]);

        let outside = plant(&empty, &[Point::new(-1.0, 2.0)]);
        assert!(outside.window_expanded);
        assert!(outside.config.window.contains(Point::new(-1.0, 2.0)));
    }

    #[test]
    fn csv_round_trip() {
        let c = sample_ppp(Window::square(5.0).unwrap(), 2.0, 8).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let back = Configuration::read_csv(&buf[..], &c.envelope()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn boundary_distance() {
        let w = Window::square(10.0).unwrap();
        assert_eq!(w.boundary_distance(Point::new(2.0, 5.0)), 2.0);
        assert_eq!(w.boundary_distance(Point::new(5.0, 9.5)), 0.5);
    }
}
