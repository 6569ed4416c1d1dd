//! Reference evaluator: weight-2 theta series pushed through the period lattice and
//! normalized by order-2 Taylor data at the origin.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix4, Vector2};

use crate::cpoly::{c, C64};
use crate::error::{Error, Result};
use crate::kleinian::SVec;
use crate::periods::{Mat2, PeriodData};

/// Coset representatives modulo 2.
pub const REPS: [[i64; 2]; 4] = [[0, 0], [1, 0], [0, 1], [1, 1]];

/// Tail factor accepted at the edge of the summation box.
const TAIL_EXPONENT: f64 = 40.0;
const MAX_RADIUS: f64 = 60.0;

fn im_part(omega: &Mat2) -> Matrix2<f64> {
    omega.map(|z| z.im)
}

fn min_eig(y: &Matrix2<f64>) -> f64 {
    let (a, b, d) = (y[(0, 0)], 0.5 * (y[(0, 1)] + y[(1, 0)]), y[(1, 1)]);
    0.5 * (a + d) - (0.25 * (a - d) * (a - d) + b * b).sqrt()
}

fn quad_form(om: &Mat2, k: [f64; 2]) -> C64 {
    om[(0, 0)] * k[0] * k[0] + (om[(0, 1)] + om[(1, 0)]) * k[0] * k[1] + om[(1, 1)] * k[1] * k[1]
}

/// Shortest member of the coset `rep + 2Z^2` under `Im Omega`; the series is normalized by it.
fn coset_anchor(rep: [i64; 2], omega: &Mat2) -> [f64; 2] {
    let y = im_part(omega);
    let mut best = ([rep[0] as f64, rep[1] as f64], f64::INFINITY);
    for j0 in -2..=2 {
        for j1 in -2..=2 {
            let k = [(rep[0] + 2 * j0) as f64, (rep[1] + 2 * j1) as f64];
            let v =
                y[(0, 0)] * k[0] * k[0] + 2.0 * y[(0, 1)] * k[0] * k[1] + y[(1, 1)] * k[1] * k[1];
            if v < best.1 - 1e-12 {
                best = (k, v);
            }
        }
    }
    best.0
}

/// Value, gradient and Hessian of a weight-2 theta series.
#[derive(Clone, Copy, Debug)]
pub struct SeriesJet {
    pub value: C64,
    pub grad: [C64; 2],
    pub hess: [[C64; 2]; 2],
}

/// `sum_k exp(i pi/2 (k^T Omega k - k0^T Omega k0) + 2 pi i k^T u)` over `k` in `rep + 2Z^2`,
/// where `k0` is the shortest member of the coset.
pub fn r2_basis_jet(rep: [i64; 2], omega: &Mat2, u: &Vector2<C64>) -> Result<SeriesJet> {
    let y = im_part(omega);
    let lam = min_eig(&y);
    if lam <= 0.0 {
        return Err(Error::domain(
            "thetaref",
            "imaginary part of the Riemann matrix is not positive definite",
        ));
    }
    let radius = (2.0 * TAIL_EXPONENT / (PI * lam)).sqrt() + 2.0;
    if radius > MAX_RADIUS {
        return Err(Error::convergence(
            "thetaref",
            format!("theta series needs truncation radius {radius:.1}; Im Omega is too flat"),
        ));
    }
    let yinv = y.try_inverse().expect("positive definite");
    let iu = Vector2::new(u[0].im, u[1].im);
    let centre = -(yinv * iu) * 2.0;
    let k0 = coset_anchor(rep, omega);
    let base = quad_form(omega, k0);
    let range = |i: usize| {
        let lo = ((centre[i] - radius - rep[i] as f64) / 2.0).floor() as i64;
        let hi = ((centre[i] + radius - rep[i] as f64) / 2.0).ceil() as i64;
        lo..=hi
    };
    let two_pi_i = c(0.0, 2.0 * PI);
    let mut jet = SeriesJet {
        value: c(0.0, 0.0),
        grad: [c(0.0, 0.0); 2],
        hess: [[c(0.0, 0.0); 2]; 2],
    };
    for j0 in range(0) {
        for j1 in range(1) {
            let k = [(rep[0] + 2 * j0) as f64, (rep[1] + 2 * j1) as f64];
            let dk = [k[0] - centre[0], k[1] - centre[1]];
            if (dk[0] * dk[0] + dk[1] * dk[1]).sqrt() > radius {
                continue;
            }
            let expo = c(0.0, PI / 2.0) * (quad_form(omega, k) - base)
                + two_pi_i * (u[0] * k[0] + u[1] * k[1]);
            let term = expo.exp();
            jet.value += term;
            for a in 0..2 {
                jet.grad[a] += two_pi_i * k[a] * term;
                for b in 0..2 {
                    jet.hess[a][b] += two_pi_i * two_pi_i * k[a] * k[b] * term;
                }
            }
        }
    }
    Ok(jet)
}

pub fn r2_basis_eval(rep: [i64; 2], omega: &Mat2, u: &Vector2<C64>) -> Result<C64> {
    Ok(r2_basis_jet(rep, omega, u)?.value)
}

/// Oracle for the canonical basis at one tower level.
#[derive(Clone, Debug)]
pub struct ThetaOracle {
    omega: Mat2,
    a_inv: Mat2,
    /// Quadratic exponent `eta_A A^-1`, symmetrized.
    quad: Mat2,
    /// Rows map the four series onto (S, S22, S12, S11).
    coeffs: Matrix4<C64>,
}

impl ThetaOracle {
    pub fn new(periods: &PeriodData, level: usize) -> Result<Self> {
        let (a, omega, eta) = periods.level(level);
        let a_inv = a
            .try_inverse()
            .ok_or_else(|| Error::domain("thetaref", "a-period matrix is singular"))?;
        let n = eta * a_inv;
        let quad = (n + n.transpose()) * c(0.5, 0.0);
        let zero = Vector2::zeros();
        let mut taylor = Matrix4::<C64>::zeros();
        for (i, rep) in REPS.iter().enumerate() {
            let jet = r2_basis_jet(*rep, &omega, &zero)?;
            let h = Mat2::new(
                jet.hess[0][0],
                jet.hess[0][1],
                jet.hess[1][0],
                jet.hess[1][1],
            );
            let q = quad * jet.value + a_inv.transpose() * h * a_inv * c(0.5, 0.0);
            taylor[(i, 0)] = jet.value;
            taylor[(i, 1)] = q[(0, 0)];
            taylor[(i, 2)] = q[(0, 1)] + q[(1, 0)];
            taylor[(i, 3)] = q[(1, 1)];
        }
        let mut target = Matrix4::<C64>::zeros();
        target[(0, 1)] = c(1.0, 0.0);
        target[(1, 2)] = c(2.0, 0.0);
        target[(2, 3)] = c(-1.0, 0.0);
        target[(3, 0)] = c(1.0, 0.0);
        let tinv = taylor.try_inverse().ok_or_else(|| {
            Error::domain("thetaref", "Taylor matrix of the theta basis is singular")
        })?;
        Ok(ThetaOracle {
            omega,
            a_inv,
            quad,
            coeffs: target * tinv,
        })
    }

    pub fn eval(&self, z: &Vector2<C64>) -> Result<SVec> {
        let u = self.a_inv * z;
        let ex = (z.transpose() * self.quad * z)[(0, 0)].exp();
        let dex = self.quad * z * c(2.0, 0.0);
        let mut vals = [c(0.0, 0.0); 4];
        let mut d1 = [c(0.0, 0.0); 4];
        let mut d2 = [c(0.0, 0.0); 4];
        for (i, rep) in REPS.iter().enumerate() {
            let jet = r2_basis_jet(*rep, &self.omega, &u)?;
            let g = self.a_inv.transpose() * Vector2::new(jet.grad[0], jet.grad[1]);
            vals[i] = ex * jet.value;
            d1[i] = ex * (dex[0] * jet.value + g[0]);
            d2[i] = ex * (dex[1] * jet.value + g[1]);
        }
        let mix = |v: [C64; 4]| -> [C64; 4] {
            let mut out = [c(0.0, 0.0); 4];
            for (r, o) in out.iter_mut().enumerate() {
                *o = (0..4).map(|k| self.coeffs[(r, k)] * v[k]).sum();
            }
            out
        };
        Ok(SVec {
            s: mix(vals),
            ds1: mix(d1),
            ds2: mix(d2),
        })
    }
}

/// The canonical basis of the input curve at `z`.
pub fn oracle_s(periods: &PeriodData, z: &Vector2<C64>) -> Result<SVec> {
    ThetaOracle::new(periods, 0)?.eval(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpoly::CPoly;
    use crate::disks::find_disks;
    use crate::periods::compute_periods;
    use crate::richelot::iterate_tower;

    fn sample_omega() -> Mat2 {
        Mat2::new(c(0.2, 1.1), c(-0.3, 0.4), c(-0.3, 0.4), c(0.1, 0.9))
    }

    #[test]
    fn functional_equation() {
        let om = sample_omega();
        let z = Vector2::new(c(0.13, -0.07), c(-0.21, 0.05));
        for rep in REPS {
            let base = r2_basis_eval(rep, &om, &z).unwrap();
            for (m, n) in [
                ([1i64, 0], [0i64, 1]),
                ([0, 1], [1, 0]),
                ([1, -1], [2, 0]),
                ([-1, 2], [0, -1]),
            ] {
                let mv = Vector2::new(c(m[0] as f64, 0.0), c(m[1] as f64, 0.0));
                let nv = Vector2::new(c(n[0] as f64, 0.0), c(n[1] as f64, 0.0));
                let shifted = r2_basis_eval(rep, &om, &(z + nv + om * mv)).unwrap();
                let mom = (mv.transpose() * om * mv)[(0, 0)];
                let mz = (mv.transpose() * z)[(0, 0)];
                let factor = (c(0.0, -2.0 * PI) * mom + c(0.0, -4.0 * PI) * mz).exp();
                assert!(
                    (shifted - factor * base).norm() < 1e-11 * shifted.norm().max(1.0),
                    "rep {rep:?}"
                );
            }
        }
    }

    #[test]
    fn series_is_even() {
        let om = sample_omega();
        let z = Vector2::new(c(0.31, 0.02), c(-0.12, -0.08));
        for rep in REPS {
            let a = r2_basis_eval(rep, &om, &z).unwrap();
            let b = r2_basis_eval(rep, &om, &-z).unwrap();
            assert!((a - b).norm() < 1e-13 * a.norm());
        }
    }

    #[test]
    fn trivial_coset_tends_to_one() {
        let om = Mat2::new(c(0.0, 40.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 40.0));
        let v = r2_basis_eval([0, 0], &om, &Vector2::new(c(0.2, 0.0), c(0.1, 0.0))).unwrap();
        assert!((v - c(1.0, 0.0)).norm() < 1e-20f64.max(1e-15));
    }

    fn periods() -> PeriodData {
        let f = CPoly::from_real(&[0.7, -0.2, 1.1, 0.4, -0.9, 0.3, 1.5]).unwrap();
        let d = find_disks(&f).unwrap();
        compute_periods(&iterate_tower(&f, &d, 1e-13, 40).unwrap()).unwrap()
    }

    #[test]
    fn taylor_normalization() {
        let p = periods();
        let o = ThetaOracle::new(&p, 0).unwrap();
        let s0 = o.eval(&Vector2::zeros()).unwrap();
        for (k, want) in [0.0, 0.0, 0.0, 1.0].iter().enumerate() {
            assert!((s0.s[k] - c(*want, 0.0)).norm() < 1e-10);
        }
        let eps = 1e-4;
        for (z, want) in [
            ([eps, 0.0], [eps * eps, 0.0, 0.0]),
            ([0.0, eps], [0.0, 0.0, -eps * eps]),
            ([eps, eps], [eps * eps, 2.0 * eps * eps, -eps * eps]),
        ] {
            let s = o.eval(&Vector2::new(c(z[0], 0.0), c(z[1], 0.0))).unwrap();
            for k in 0..3 {
                assert!(
                    (s.s[k] - c(want[k], 0.0)).norm() < 1e-10,
                    "{k} {} {}",
                    s.s[k],
                    want[k]
                );
            }
        }
    }

    #[test]
    fn quasi_periodicity() {
        let p = periods();
        let o = ThetaOracle::new(&p, 0).unwrap();
        let z = Vector2::new(c(0.11, -0.05), c(0.07, 0.13));
        let base = o.eval(&z).unwrap();
        for j in 0..3 {
            let w = Vector2::new(p.w[(0, j)], p.w[(1, j)]);
            let eta = Vector2::new(p.e[(0, j)], p.e[(1, j)]);
            let factor = ((eta * c(2.0, 0.0)).transpose() * (z + w * c(0.5, 0.0)))[(0, 0)].exp();
            let shifted = o.eval(&(z + w)).unwrap();
            for k in 0..4 {
                let scale = shifted.s.iter().map(|v| v.norm()).fold(0.0, f64::max);
                assert!((shifted.s[k] - factor * base.s[k]).norm() < 1e-8 * scale);
            }
        }
    }

    #[test]
    fn global_sign_flip_invariance() {
        let p = periods();
        let mut q = p.clone();
        q.w = -q.w;
        q.a = -q.a;
        q.b = -q.b;
        q.e_levels.iter_mut().for_each(|e| *e = -*e);
        q.e = -q.e;
        q.eta_a = -q.eta_a;
        let z = Vector2::new(c(0.21, 0.05), c(-0.17, 0.09));
        let a = oracle_s(&p, &z).unwrap();
        let b = oracle_s(&q, &z).unwrap();
        for k in 0..4 {
            assert!((a.s[k] - b.s[k]).norm() < 1e-10 * a.s[3].norm());
        }
    }
}
