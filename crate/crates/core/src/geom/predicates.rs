//! Orientation and in-circle predicates.
//!
//! Both use a floating-point filter with Shewchuk's static error bounds and
//! fall back to exact big-integer evaluation when the filter cannot decide.

use std::cmp::Ordering;

use num_bigint::BigInt;

use super::Point;

const EPS: f64 = f64::EPSILON / 2.0;
const CCW_ERR: f64 = (3.0 + 16.0 * EPS) * EPS;
const ICC_ERR: f64 = (10.0 + 96.0 * EPS) * EPS;

/// Sign of the signed area of `(a, b, c)`: `Greater` for a counter-clockwise turn.
pub fn orient2d(a: Point, b: Point, c: Point) -> Ordering {
    let left = (a.x - c.x) * (b.y - c.y);
    let right = (a.y - c.y) * (b.x - c.x);
    let det = left - right;
    let bound = CCW_ERR * (left.abs() + right.abs());
    if det > bound {
        Ordering::Greater
    } else if -det > bound {
        Ordering::Less
    } else {
        orient2d_exact(a, b, c)
    }
}

/// `Greater` iff `d` is strictly inside the circle through the
/// counter-clockwise triangle `(a, b, c)`.
pub fn incircle(a: Point, b: Point, c: Point, d: Point) -> Ordering {
    let (adx, ady) = (a.x - d.x, a.y - d.y);
    let (bdx, bdy) = (b.x - d.x, b.y - d.y);
    let (cdx, cdy) = (c.x - d.x, c.y - d.y);
    let (bc, cb) = (bdx * cdy, cdx * bdy);
    let (ca, ac) = (cdx * ady, adx * cdy);
    let (ab, ba) = (adx * bdy, bdx * ady);
    let alift = adx * adx + ady * ady;
    let blift = bdx * bdx + bdy * bdy;
    let clift = cdx * cdx + cdy * cdy;
    let det = alift * (bc - cb) + blift * (ca - ac) + clift * (ab - ba);
    let permanent =
        (bc.abs() + cb.abs()) * alift + (ca.abs() + ac.abs()) * blift + (ab.abs() + ba.abs()) * clift;
    let bound = ICC_ERR * permanent;
    if det > bound {
        Ordering::Greater
    } else if -det > bound {
        Ordering::Less
    } else {
        incircle_exact(a, b, c, d)
    }
}

/// `v = mantissa * 2^exp` exactly.
fn decompose(v: f64) -> (i64, i32) {
    if v == 0.0 {
        return (0, 0);
    }
    let bits = v.to_bits();
    let sign = if bits >> 63 == 0 { 1i64 } else { -1 };
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & ((1u64 << 52) - 1)) as i64;
    let (m, e) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1i64 << 52), exp - 1075)
    };
    (sign * m, e)
}

/// Scales every value to an integer by a common power of two.
fn to_integers(values: &[f64]) -> Vec<BigInt> {
    let parts: Vec<(i64, i32)> = values.iter().map(|&v| decompose(v)).collect();
    let emin = parts
        .iter()
        .filter(|(m, _)| *m != 0)
        .map(|&(_, e)| e)
        .min()
        .unwrap_or(0);
    parts
        .into_iter()
        .map(|(m, e)| BigInt::from(m) << ((e - emin) as usize))
        .collect()
}

fn sign(v: &BigInt) -> Ordering {
    v.sign().cmp(&num_bigint::Sign::NoSign)
}

fn orient2d_exact(a: Point, b: Point, c: Point) -> Ordering {
    let v = to_integers(&[a.x, a.y, b.x, b.y, c.x, c.y]);
    let det = (&v[0] - &v[4]) * (&v[3] - &v[5]) - (&v[1] - &v[5]) * (&v[2] - &v[4]);
    sign(&det)
}

fn incircle_exact(a: Point, b: Point, c: Point, d: Point) -> Ordering {
    let v = to_integers(&[a.x, a.y, b.x, b.y, c.x, c.y, d.x, d.y]);
    let (adx, ady) = (&v[0] - &v[6], &v[1] - &v[7]);
    let (bdx, bdy) = (&v[2] - &v[6], &v[3] - &v[7]);
    let (cdx, cdy) = (&v[4] - &v[6], &v[5] - &v[7]);
    let alift = &adx * &adx + &ady * &ady;
    let blift = &bdx * &bdx + &bdy * &bdy;
    let clift = &cdx * &cdx + &cdy * &cdy;
    let det = alift * (&bdx * &cdy - &cdx * &bdy)
        + blift * (&cdx * &ady - &adx * &cdy)
        + clift * (&adx * &bdy - &bdx * &ady);
    sign(&det)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decompose_round_trips() {
        for v in [1.0, -0.1, 3.5e-300, 1e300, 5e-324, 123.456] {
            let (m, e) = decompose(v);
            // Split the scale so 2^e itself never underflows.
            assert_eq!(m as f64 * 2f64.powi(e / 2) * 2f64.powi(e - e / 2), v, "{v}");
        }
    }

    #[test]
    fn orientation_basic() {
        let (a, b) = (Point::new(0.0, 0.0), Point::new(1.0, 0.0));
        assert_eq!(orient2d(a, b, Point::new(0.0, 1.0)), Ordering::Greater);
        assert_eq!(orient2d(a, b, Point::new(0.0, -1.0)), Ordering::Less);
        assert_eq!(orient2d(a, b, Point::new(7.0, 0.0)), Ordering::Equal);
    }

    #[test]
    fn near_collinear_is_exact() {
        // Points on the line y = x with tiny perturbations that naive
        // arithmetic misjudges.
        let a = Point::new(0.5, 0.5);
        let b = Point::new(12.0, 12.0);
        let c = Point::new(24.0, 24.0);
        assert_eq!(orient2d(a, b, c), Ordering::Equal);
        let c2 = Point::new(24.0, f64::from_bits(24f64.to_bits() + 1));
        assert_eq!(orient2d(a, b, c2), Ordering::Greater);
        let c3 = Point::new(24.0, f64::from_bits(24f64.to_bits() - 1));
        assert_eq!(orient2d(a, b, c3), Ordering::Less);
    }

    #[test]
    fn cocircular_is_zero() {
        let a = Point::new(1.0, 0.0);
        let b = Point::new(0.0, 1.0);
        let c = Point::new(-1.0, 0.0);
        assert_eq!(incircle(a, b, c, Point::new(0.0, -1.0)), Ordering::Equal);
        assert_eq!(incircle(a, b, c, Point::new(0.0, 0.0)), Ordering::Greater);
        assert_eq!(incircle(a, b, c, Point::new(3.0, 0.0)), Ordering::Less);
        // Nearly on the unit circle: the filter must defer to exact arithmetic.
        let d = Point::new(0.6, -0.8);
        assert_eq!(incircle(a, b, c, d), incircle_exact(a, b, c, d));
    }
}
