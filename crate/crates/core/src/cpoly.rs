//! Complex polynomials of degree at most six and the degree-2 bracket calculus.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

pub const MAX_DEGREE: usize = 6;
/// Residual bound for accepted roots, relative to the coefficient scale.
pub const TOL_ROOT: f64 = 1e-13;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Polynomial with complex coefficients stored low-to-high; trailing zeros allowed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CPoly {
    coeffs: Vec<C64>,
}

impl CPoly {
    pub fn new(coeffs: Vec<C64>) -> Result<Self> {
        let mut coeffs = coeffs;
        while coeffs.len() > MAX_DEGREE + 1 {
            if coeffs.last() != Some(&C64::new(0.0, 0.0)) {
                return Err(Error::domain("cpoly", "degree exceeds 6"));
            }
            coeffs.pop();
        }
        if coeffs
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::domain("cpoly", "non-finite coefficient"));
        }
        Ok(CPoly { coeffs })
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&x| c(x, 0.0)).collect())
    }

    pub fn zero() -> Self {
        CPoly { coeffs: vec![] }
    }

    /// Monic-style product `lead * Π (x - r)` over finite roots.
    pub fn from_roots(lead: C64, roots: &[C64]) -> Result<Self> {
        let mut out = vec![lead];
        for &r in roots {
            let mut next = vec![C64::new(0.0, 0.0); out.len() + 1];
            for (k, &a) in out.iter().enumerate() {
                next[k + 1] += a;
                next[k] -= a * r;
            }
            out = next;
        }
        Self::new(out)
    }

    pub fn coeff(&self, j: usize) -> C64 {
        self.coeffs.get(j).copied().unwrap_or_default()
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Coefficients padded to exactly seven entries.
    pub fn padded(&self) -> [C64; 7] {
        let mut out = [C64::new(0.0, 0.0); 7];
        for (k, &a) in self.coeffs.iter().enumerate() {
            out[k] = a;
        }
        out
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|z| *z != C64::new(0.0, 0.0))
    }

    pub fn is_zero(&self) -> bool {
        self.degree().is_none()
    }

    pub fn leading(&self) -> C64 {
        self.degree().map(|d| self.coeffs[d]).unwrap_or_default()
    }

    pub fn eval(&self, x: C64) -> C64 {
        self.coeffs
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, &a| acc * x + a)
    }

    pub fn derivative(&self) -> CPoly {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &a)| a * k as f64)
            .collect();
        CPoly { coeffs }
    }

    pub fn scale(&self, s: C64) -> CPoly {
        CPoly {
            coeffs: self.coeffs.iter().map(|&a| a * s).collect(),
        }
    }

    pub fn add(&self, other: &CPoly) -> CPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        CPoly {
            coeffs: (0..n).map(|k| self.coeff(k) + other.coeff(k)).collect(),
        }
    }

    pub fn sub(&self, other: &CPoly) -> CPoly {
        self.add(&other.scale(c(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &CPoly) -> Result<CPoly> {
        let (Some(da), Some(db)) = (self.degree(), other.degree()) else {
            return Ok(CPoly::zero());
        };
        if da + db > MAX_DEGREE {
            return Err(Error::domain("cpoly", "product degree exceeds 6"));
        }
        let mut out = vec![C64::new(0.0, 0.0); da + db + 1];
        for i in 0..=da {
            for j in 0..=db {
                out[i + j] += self.coeffs[i] * other.coeffs[j];
            }
        }
        Ok(CPoly { coeffs: out })
    }

    /// Sum of coefficient magnitudes, used as the reference scale.
    pub fn norm1(&self) -> f64 {
        self.coeffs.iter().map(|a| a.norm()).sum()
    }

    /// Largest relative coefficient discrepancy.
    pub fn rel_diff(&self, other: &CPoly) -> f64 {
        let scale = self.norm1().max(other.norm1()).max(f64::MIN_POSITIVE);
        (0..=MAX_DEGREE)
            .map(|k| (self.coeff(k) - other.coeff(k)).norm())
            .fold(0.0, f64::max)
            / scale
    }

    fn quad(&self) -> Result<[C64; 3]> {
        match self.degree() {
            Some(d) if d > 2 => Err(Error::domain("cpoly", "expected degree <= 2")),
            _ => Ok([self.coeff(0), self.coeff(1), self.coeff(2)]),
        }
    }
}

/// A point of the Riemann sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpherePoint {
    Finite(C64),
    Infinity,
}

impl SpherePoint {
    pub fn finite(self) -> Option<C64> {
        match self {
            SpherePoint::Finite(z) => Some(z),
            SpherePoint::Infinity => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, SpherePoint::Infinity)
    }

    /// Chordal distance on the unit sphere, in [0, 2].
    pub fn chordal(self, other: SpherePoint) -> f64 {
        match (self, other) {
            (SpherePoint::Infinity, SpherePoint::Infinity) => 0.0,
            (SpherePoint::Finite(z), SpherePoint::Infinity)
            | (SpherePoint::Infinity, SpherePoint::Finite(z)) => 2.0 / (1.0 + z.norm_sqr()).sqrt(),
            (SpherePoint::Finite(z), SpherePoint::Finite(w)) => {
                2.0 * (z - w).norm() / ((1.0 + z.norm_sqr()) * (1.0 + w.norm_sqr())).sqrt()
            }
        }
    }

    /// Image on the unit sphere under inverse stereographic projection.
    pub fn to_sphere(self) -> [f64; 3] {
        match self {
            SpherePoint::Infinity => [0.0, 0.0, 1.0],
            SpherePoint::Finite(z) => {
                let r2 = z.norm_sqr();
                let d = 1.0 + r2;
                [2.0 * z.re / d, 2.0 * z.im / d, (r2 - 1.0) / d]
            }
        }
    }

    pub fn from_sphere(p: [f64; 3]) -> SpherePoint {
        let den = 1.0 - p[2];
        if den <= 1e-300 {
            SpherePoint::Infinity
        } else {
            SpherePoint::Finite(c(p[0] / den, p[1] / den))
        }
    }
}

/// Normalized Möbius map x -> (ax+b)/(cx+d) with ad - bc = 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moebius {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

impl Moebius {
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Result<Self> {
        let det = a * d - b * c;
        if det.norm() == 0.0 || !det.norm().is_finite() {
            return Err(Error::domain("cpoly", "singular Moebius transformation"));
        }
        let s = det.sqrt();
        Ok(Moebius {
            a: a / s,
            b: b / s,
            c: c / s,
            d: d / s,
        })
    }

    pub fn identity() -> Self {
        let one = c(1.0, 0.0);
        let zero = c(0.0, 0.0);
        Moebius {
            a: one,
            b: zero,
            c: zero,
            d: one,
        }
    }

    pub fn inverse(&self) -> Self {
        Moebius {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    pub fn apply(&self, p: SpherePoint) -> SpherePoint {
        match p {
            SpherePoint::Infinity => {
                if self.c == C64::new(0.0, 0.0) {
                    SpherePoint::Infinity
                } else {
                    SpherePoint::Finite(self.a / self.c)
                }
            }
            SpherePoint::Finite(x) => {
                let den = self.c * x + self.d;
                if den == C64::new(0.0, 0.0) {
                    SpherePoint::Infinity
                } else {
                    SpherePoint::Finite((self.a * x + self.b) / den)
                }
            }
        }
    }

    /// `S(x1) - S(x2)` without cancellation, given an accurate `x1 - x2`.
    pub fn image_difference(&self, x1: C64, x2: C64, diff: C64) -> C64 {
        diff / ((self.c * x1 + self.d) * (self.c * x2 + self.d))
    }
}

/// The weight-`k` action `(cx+d)^k p(S x)`, expanded.
pub fn moebius_act(s: &Moebius, p: &CPoly, weight: usize) -> Result<CPoly> {
    if let Some(d) = p.degree() {
        if d > weight {
            return Err(Error::domain("cpoly", "degree exceeds the action weight"));
        }
    }
    let num = CPoly {
        coeffs: vec![s.b, s.a],
    };
    let den = CPoly {
        coeffs: vec![s.d, s.c],
    };
    let mut out = CPoly::zero();
    for j in 0..=weight {
        let a = p.coeff(j);
        if a == C64::new(0.0, 0.0) {
            continue;
        }
        let mut term = CPoly { coeffs: vec![a] };
        for _ in 0..j {
            term = term.mul(&num)?;
        }
        for _ in j..weight {
            term = term.mul(&den)?;
        }
        out = out.add(&term);
    }
    Ok(out)
}

/// `(cx+d)^2 (p∘S)` for a polynomial of degree at most two.
pub fn moebius_conjugate(s: &Moebius, p: &CPoly) -> Result<CPoly> {
    p.quad()?;
    moebius_act(s, p, 2)
}

/// `[p, q] = p'q - pq'`.
pub fn bracket(p: &CPoly, q: &CPoly) -> Result<CPoly> {
    let [p0, p1, p2] = p.quad()?;
    let [q0, q1, q2] = q.quad()?;
    CPoly::new(vec![
        p1 * q0 - p0 * q1,
        (p2 * q0 - p0 * q2) * 2.0,
        p2 * q1 - p1 * q2,
    ])
}

pub fn discr(p: &CPoly) -> Result<C64> {
    let [p0, p1, p2] = p.quad()?;
    Ok(p1 * p1 - p0 * p2 * 4.0)
}

pub fn res(p: &CPoly, q: &CPoly) -> Result<C64> {
    let [p0, p1, p2] = p.quad()?;
    let [q0, q1, q2] = q.quad()?;
    let u = p2 * q0 - p0 * q2;
    Ok(u * u + (p2 * q1 - p1 * q2) * (p0 * q1 - p1 * q0))
}

/// Determinant of the coefficient matrix with columns p, q, r.
pub fn delta(p: &CPoly, q: &CPoly, r: &CPoly) -> Result<C64> {
    let [p0, p1, p2] = p.quad()?;
    let [q0, q1, q2] = q.quad()?;
    let [r0, r1, r2] = r.quad()?;
    Ok(p0 * (q1 * r2 - q2 * r1) - q0 * (p1 * r2 - p2 * r1) + r0 * (p1 * q2 - p2 * q1))
}

/// Both roots of a binary quadratic form `p2 x^2 + p1 x + p0`, as sphere points.
pub fn quadratic_roots(p: &CPoly) -> Result<[SpherePoint; 2]> {
    let [p0, p1, p2] = p.quad()?;
    let zero = C64::new(0.0, 0.0);
    if p2 == zero && p1 == zero {
        if p0 == zero {
            return Err(Error::domain("cpoly", "zero quadratic has no roots"));
        }
        return Ok([SpherePoint::Infinity, SpherePoint::Infinity]);
    }
    if p2 == zero {
        return Ok([SpherePoint::Finite(-p0 / p1), SpherePoint::Infinity]);
    }
    let d = (p1 * p1 - p0 * p2 * 4.0).sqrt();
    let s = if (-p1 - d).norm() >= (-p1 + d).norm() {
        -p1 - d
    } else {
        -p1 + d
    };
    if s == zero {
        return Ok([SpherePoint::Finite(zero), SpherePoint::Finite(zero)]);
    }
    Ok([
        SpherePoint::Finite(s / (p2 * 2.0)),
        SpherePoint::Finite(p0 * 2.0 / s),
    ])
}

/// The six sphere roots of `f`: its finite roots plus `6 - deg f` copies of infinity.
pub fn roots(f: &CPoly) -> Result<Vec<SpherePoint>> {
    let deg = f
        .degree()
        .ok_or_else(|| Error::domain("cpoly", "zero polynomial"))?;
    if deg == 0 {
        return Err(Error::domain(
            "cpoly",
            "constant polynomial has no finite roots",
        ));
    }
    let mut finite = aberth(&f.coeffs[..=deg])?;
    polish_clusters(&f.coeffs[..=deg], &mut finite);
    let mut out: Vec<SpherePoint> = finite.into_iter().map(SpherePoint::Finite).collect();
    out.resize(MAX_DEGREE, SpherePoint::Infinity);
    Ok(out)
}

fn residual_ok(coeffs: &[C64], x: C64) -> (bool, f64) {
    let val = coeffs
        .iter()
        .rev()
        .fold(C64::new(0.0, 0.0), |acc, &a| acc * x + a);
    let r = x.norm().max(1.0);
    let scale: f64 = coeffs
        .iter()
        .enumerate()
        .map(|(k, a)| a.norm() * r.powi(k as i32))
        .sum();
    let rel = val.norm() / scale.max(f64::MIN_POSITIVE);
    (rel <= TOL_ROOT, rel)
}

/// Re-centers tight root pairs on the nearby critical point; Aberth leaves them
/// only to about the square root of machine precision, and lopsided.
fn polish_clusters(coeffs: &[C64], rs: &mut [C64]) {
    let horner = |cs: &[C64], x: C64| {
        cs.iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, &a| acc * x + a)
    };
    let d1: Vec<C64> = (1..coeffs.len()).map(|k| coeffs[k] * k as f64).collect();
    let d2: Vec<C64> = (1..d1.len()).map(|k| d1[k] * k as f64).collect();
    let d3: Vec<C64> = (1..d2.len()).map(|k| d2[k] * k as f64).collect();
    if d2.is_empty() {
        return;
    }
    let n = rs.len();
    for i in 0..n {
        for j in i + 1..n {
            let scale = 1.0 + rs[i].norm().max(rs[j].norm());
            if (rs[i] - rs[j]).norm() > 1e-5 * scale {
                continue;
            }
            // isolated pair only
            let m0 = (rs[i] + rs[j]) * 0.5;
            if (0..n).any(|k| k != i && k != j && (rs[k] - m0).norm() < 1e-3 * scale) {
                continue;
            }
            let mut m = m0;
            for _ in 0..5 {
                let den = horner(&d2, m);
                if den.norm() == 0.0 {
                    break;
                }
                m -= horner(&d1, m) / den;
            }
            let f2 = horner(&d2, m);
            if f2.norm() == 0.0 || (m - m0).norm() > 1e-5 * scale {
                continue;
            }
            let f3 = if d3.is_empty() {
                C64::new(0.0, 0.0)
            } else {
                horner(&d3, m)
            };
            let h = (-horner(coeffs, m) * 2.0 / f2).sqrt();
            // second-order correction from the cubic Taylor term
            let shift = -f3 * h * h / (f2 * 6.0);
            let (a, b) = (m + h + shift, m - h + shift);
            if (a - rs[i]).norm() + (b - rs[j]).norm() <= (b - rs[i]).norm() + (a - rs[j]).norm() {
                rs[i] = a;
                rs[j] = b;
            } else {
                rs[i] = b;
                rs[j] = a;
            }
        }
    }
}

/// Aberth–Ehrlich simultaneous iteration; `coeffs` has a nonzero last entry.
fn aberth(coeffs: &[C64]) -> Result<Vec<C64>> {
    let n = coeffs.len() - 1;
    let lead = coeffs[n];
    let monic: Vec<C64> = coeffs.iter().map(|&a| a / lead).collect();
    if n == 1 {
        return Ok(vec![-monic[0]]);
    }
    let deriv: Vec<C64> = (1..=n).map(|k| monic[k] * k as f64).collect();
    let horner = |cs: &[C64], x: C64| {
        cs.iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, &a| acc * x + a)
    };
    // Fujiwara-type bound for the initial circle.
    let radius = (0..n)
        .map(|k| monic[k].norm().powf(1.0 / (n - k) as f64))
        .fold(0.0, f64::max)
        .max(1e-3);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_ab37);
    let mut worst = f64::INFINITY;
    for attempt in 0..8 {
        let jitter = if attempt == 0 {
            0.0
        } else {
            rng.random::<f64>()
        };
        let mut z: Vec<C64> = (0..n)
            .map(|k| {
                let th = std::f64::consts::TAU * (k as f64 + 0.25 + jitter) / n as f64 + 0.4;
                C64::from_polar(radius * (0.5 + 0.5 * (1.0 + 0.3 * jitter)), th)
            })
            .collect();
        for _ in 0..800 {
            let mut max_step: f64 = 0.0;
            for i in 0..n {
                let pv = horner(&monic, z[i]);
                if pv == C64::new(0.0, 0.0) {
                    continue;
                }
                let dv = horner(&deriv, z[i]);
                let ratio = pv / dv;
                let sum: C64 = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| C64::new(1.0, 0.0) / (z[i] - z[j]))
                    .sum();
                let w = ratio / (C64::new(1.0, 0.0) - ratio * sum);
                if !w.re.is_finite() || !w.im.is_finite() {
                    continue;
                }
                z[i] -= w;
                max_step = max_step.max(w.norm() / (1.0 + z[i].norm()));
            }
            if max_step < 1e-16 {
                break;
            }
        }
        let checks: Vec<(bool, f64)> = z.iter().map(|&x| residual_ok(coeffs, x)).collect();
        worst = checks.iter().map(|c| c.1).fold(0.0, f64::max);
        if checks.iter().all(|c| c.0) {
            return Ok(z);
        }
    }
    Err(Error::convergence(
        "cpoly",
        format!("root finder did not converge; worst relative residual {worst:.3e}"),
    ))
}

/// Separation threshold used by the admissibility test.
pub fn sep_tol(roots: &[SpherePoint]) -> f64 {
    let m = roots
        .iter()
        .filter_map(|r| r.finite())
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    1e-9 * (m + 1.0)
}

/// Degree 5 or 6 with pairwise distinct roots (infinity counted for degree 5).
pub fn is_admissible(f: &CPoly) -> bool {
    match f.degree() {
        Some(5) | Some(6) => {}
        _ => return false,
    }
    let Ok(rs) = roots(f) else { return false };
    let tol = sep_tol(&rs);
    for i in 0..rs.len() {
        for j in i + 1..rs.len() {
            let sep = match (rs[i], rs[j]) {
                (SpherePoint::Finite(a), SpherePoint::Finite(b)) => (a - b).norm(),
                (SpherePoint::Infinity, SpherePoint::Infinity) => 0.0,
                _ => f64::INFINITY,
            };
            if sep <= tol {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn p(cs: &[f64]) -> CPoly {
        CPoly::from_real(cs).unwrap()
    }

    #[test]
    fn bracket_examples() {
        let a = p(&[1.0, -2.0, 1.0]);
        let b = p(&[1.0, 2.0, 1.0]);
        assert_eq!(
            bracket(&a, &b).unwrap().padded()[..3],
            p(&[-4.0, 0.0, 4.0]).padded()[..3]
        );
        assert_eq!(
            bracket(&p(&[-1.0, 0.0, 1.0]), &p(&[1.0, 0.0, 1.0]))
                .unwrap()
                .padded()[..3],
            p(&[0.0, 4.0]).padded()[..3]
        );
        assert!(bracket(&a, &a).unwrap().is_zero());
        assert!(bracket(&p(&[0.0, 0.0, 0.0, 1.0]), &a).is_err());
    }

    #[test]
    fn scalar_invariants() {
        assert_eq!(discr(&p(&[0.0, 0.0, 1.0])).unwrap(), c(0.0, 0.0));
        assert_eq!(discr(&p(&[-1.0, 0.0, 1.0])).unwrap(), c(4.0, 0.0));
        assert_eq!(
            res(&p(&[-1.0, 0.0, 1.0]), &p(&[-4.0, 0.0, 1.0])).unwrap(),
            c(9.0, 0.0)
        );
        assert_eq!(
            res(&p(&[-1.0, 0.0, 1.0]), &p(&[-1.0, 1.0])).unwrap(),
            c(0.0, 0.0)
        );
        assert_eq!(
            delta(&p(&[1.0]), &p(&[0.0, 1.0]), &p(&[0.0, 0.0, 1.0])).unwrap(),
            c(1.0, 0.0)
        );
        let x2 = p(&[0.0, 0.0, 1.0]);
        assert_eq!(delta(&x2, &x2, &p(&[1.0, 1.0])).unwrap(), c(0.0, 0.0));
        let d = delta(&x2, &p(&[1.0, -2.0, 1.0]), &p(&[1.0, 2.0, 1.0])).unwrap();
        assert_eq!(d, c(4.0, 0.0));
    }

    #[test]
    fn discr_of_factored_quadratic() {
        let (a, t1, t2) = (c(1.5, -0.5), c(0.3, 0.2), c(-1.1, 0.7));
        let q = CPoly::from_roots(a, &[t1, t2]).unwrap();
        let expect = a * a * (t1 - t2) * (t1 - t2);
        assert!((discr(&q).unwrap() - expect).norm() < 1e-14);
    }

    #[test]
    fn root_counts() {
        let r = roots(&p(&[-1.0, 0.0, 1.0])).unwrap();
        assert_eq!(r.iter().filter(|x| x.is_infinite()).count(), 4);
        let w = p(&[0.3, -1.0, 0.2, 0.5, 0.0, 4.0]);
        let r = roots(&w).unwrap();
        assert_eq!(r.iter().filter(|x| x.is_infinite()).count(), 1);
    }

    #[test]
    fn roots_match_companion_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let cs: Vec<C64> = (0..7)
                .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let f = CPoly::new(cs.clone()).unwrap();
            let rs: Vec<C64> = roots(&f)
                .unwrap()
                .into_iter()
                .map(|r| r.finite().unwrap())
                .collect();
            let mut comp = DMatrix::<C64>::zeros(6, 6);
            for i in 1..6 {
                comp[(i, i - 1)] = c(1.0, 0.0);
            }
            for i in 0..6 {
                comp[(i, 5)] = -cs[i] / cs[6];
            }
            let eig = comp.eigenvalues().unwrap();
            for e in eig.iter() {
                let best = rs
                    .iter()
                    .map(|r| (r - e).norm())
                    .fold(f64::INFINITY, f64::min);
                assert!(best < 1e-10 * (1.0 + e.norm()), "{best}");
            }
        }
    }

    #[test]
    fn admissibility() {
        assert!(is_admissible(&p(&[-1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0])));
        let g = p(&[0.0, 0.0, 1.0])
            .mul(&p(&[1.0, -2.0, 1.0]))
            .unwrap()
            .mul(&p(&[1.0, 2.0, 1.0]))
            .unwrap();
        assert!(!is_admissible(&g));
        assert!(!is_admissible(&p(&[1.0, 0.0, 0.0, 0.0, 1.0])));
    }

    #[test]
    fn moebius_identity_and_inverse() {
        let q = p(&[0.5, -1.0, 2.0]);
        assert_eq!(moebius_conjugate(&Moebius::identity(), &q).unwrap(), q);
        let s = Moebius::new(c(1.0, 1.0), c(0.5, 0.0), c(0.0, -0.3), c(2.0, 0.0)).unwrap();
        let x = SpherePoint::Finite(c(0.3, -0.8));
        let back = s.inverse().apply(s.apply(x)).finite().unwrap();
        assert!((back - c(0.3, -0.8)).norm() < 1e-14);
        assert_eq!(
            s.apply(SpherePoint::Finite(-s.d / s.c)),
            SpherePoint::Infinity
        );
    }
}
