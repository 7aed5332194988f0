//! Quadrature rules on triangles and on time intervals.

use crate::error::{Error, Result};

/// Barycentric point with weight relative to the triangle area.
pub type TriPoint = ([f64; 3], f64);

/// Edge-midpoint rule, exact for quadratics.
pub const MIDEDGE: [TriPoint; 3] = [
    ([0.5, 0.5, 0.0], 1.0 / 3.0),
    ([0.0, 0.5, 0.5], 1.0 / 3.0),
    ([0.5, 0.0, 0.5], 1.0 / 3.0),
];

const A1: f64 = 0.059_715_871_789_770;
const B1: f64 = 0.470_142_064_105_115;
const A2: f64 = 0.797_426_985_353_087;
const B2: f64 = 0.101_286_507_323_456;
const W1: f64 = 0.132_394_152_788_506;
const W2: f64 = 0.125_939_180_544_827;

/// Seven-point rule, exact for polynomials of degree five.
pub const DEGREE5: [TriPoint; 7] = [
    ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
    ([A1, B1, B1], W1),
    ([B1, A1, B1], W1),
    ([B1, B1, A1], W1),
    ([A2, B2, B2], W2),
    ([B2, A2, B2], W2),
    ([B2, B2, A2], W2),
];

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; order];
    let mut w = vec![0.0; order];
    let n = order as f64;
    for i in 0..(order + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..order {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[order - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[order - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Gauss-Legendre rule with `panels` equal subintervals.
pub fn composite(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let hp = (b - a) / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * hp;
        let mut part = 0.0;
        for (x, w) in rule.0.iter().zip(&rule.1) {
            part += w * f(mid + 0.5 * hp * x);
        }
        sum += 0.5 * hp * part;
    }
    sum
}

/// Integrates `f` over [a, b], doubling the panel count until successive values
/// agree to `tol` relative to `scale` (or to the integral itself when `scale` is 0).
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, min_panels: usize, tol: f64, scale: f64) -> Result<f64> {
    let rule = gauss_legendre(20);
    let mut panels = min_panels.max(1);
    let mut prev = composite(f, a, b, panels, &rule);
    for _ in 0..14 {
        panels *= 2;
        let next = composite(f, a, b, panels, &rule);
        let reference = if scale > 0.0 { scale } else { next.abs() };
        if (next - prev).abs() <= tol * reference.max(f64::MIN_POSITIVE) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Quadrature(format!("no convergence on [{a}, {b}] with {panels} panels")))
}
