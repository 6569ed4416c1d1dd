//! Quadrature helpers: periodic trapezoid on circles and Gauss–Legendre on segments.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::GaussLegendre;

use crate::cpoly::C64;
use crate::error::{Error, Result};

type Rule = Arc<Vec<(f64, f64)>>;

/// Gauss–Legendre nodes and weights on [-1, 1], cached per degree.
pub fn gauss_legendre(n: usize) -> Rule {
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("quadrature cache poisoned");
    map.entry(n)
        .or_insert_with(|| {
            let rule = GaussLegendre::new(n.max(2)).expect("degree >= 2");
            Arc::new(rule.as_node_weight_pairs().to_vec())
        })
        .clone()
}

fn max_norm<const K: usize>(v: &[C64; K]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `∮ integrand(x) dx` over the circle `|x - center| = radius`, counterclockwise unless
/// `clockwise`. The node count doubles from 256 until two successive rules agree to `tol`
/// relative to the integrand's L1 mass on the circle.
pub fn circle_integral<const K: usize, F>(
    integrand: F,
    center: C64,
    radius: f64,
    clockwise: bool,
    tol: f64,
) -> Result<[C64; K]>
where
    F: Fn(C64) -> [C64; K],
{
    let rule = |n: usize| {
        let mut acc = [C64::new(0.0, 0.0); K];
        let mut mass = 0.0f64;
        for k in 0..n {
            let e = C64::from_polar(1.0, TAU * k as f64 / n as f64);
            let x = center + e * radius;
            let dx = C64::new(0.0, 1.0) * e * radius * (TAU / n as f64);
            let vals = integrand(x);
            for (a, v) in acc.iter_mut().zip(vals) {
                *a += v * dx;
                mass = mass.max(v.norm());
            }
        }
        if clockwise {
            acc.iter_mut().for_each(|a| *a = -*a);
        }
        (acc, mass * TAU * radius)
    };
    let mut n = 256;
    let (mut prev, _) = rule(n);
    while n < 1 << 17 {
        n *= 2;
        let (next, mass) = rule(n);
        let diff: f64 = (0..K)
            .map(|i| (next[i] - prev[i]).norm())
            .fold(0.0, f64::max);
        if diff <= tol * max_norm(&next).max(mass) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::convergence(
        "quad",
        "circle quadrature did not settle; a singularity lies close to the contour",
    ))
}

/// Integral of a smooth function over [0, 1] with `n` Gauss–Legendre nodes.
pub fn unit_interval<const K: usize, F>(integrand: F, n: usize) -> [C64; K]
where
    F: Fn(f64) -> [C64; K],
{
    let mut acc = [C64::new(0.0, 0.0); K];
    for &(x, w) in gauss_legendre(n).iter() {
        let vals = integrand(0.5 * (x + 1.0));
        for (a, v) in acc.iter_mut().zip(vals) {
            *a += v * (0.5 * w);
        }
    }
    acc
}

/// Same as [`unit_interval`] with node doubling from 64 up to 2048.
pub fn unit_interval_adaptive<const K: usize, F>(integrand: F, tol: f64) -> Result<[C64; K]>
where
    F: Fn(f64) -> [C64; K],
{
    let mut n = 64;
    let mut prev = unit_interval(&integrand, n);
    while n < 2048 {
        n *= 2;
        let next = unit_interval(&integrand, n);
        let diff: f64 = (0..K)
            .map(|i| (next[i] - prev[i]).norm())
            .fold(0.0, f64::max);
        if diff <= tol * max_norm(&next).max(f64::MIN_POSITIVE) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::convergence(
        "quad",
        "segment quadrature did not settle",
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn residue_of_simple_pole() {
        let c = C64::new(0.3, -0.2);
        let [v] = circle_integral(
            |x| [C64::new(1.0, 0.0) / (x - c)],
            C64::new(0.0, 0.0),
            1.0,
            false,
            1e-14,
        )
        .unwrap();
        assert!((v - C64::new(0.0, 2.0 * PI)).norm() < 1e-12);
        let [w] = circle_integral(
            |x| [C64::new(1.0, 0.0) / (x - c)],
            C64::new(0.0, 0.0),
            1.0,
            true,
            1e-14,
        )
        .unwrap();
        assert!((w + v).norm() < 1e-12);
    }

    #[test]
    fn polynomial_exactness() {
        let [v] = unit_interval(|t| [C64::new(t.powi(9), 0.0)], 8);
        assert!((v.re - 0.1).abs() < 1e-15);
    }
}
