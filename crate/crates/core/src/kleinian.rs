//! Weight-2 Kleinian functions: closed forms at the degenerate limit, fitted transfer
//! matrices between tower levels, and the backward recursion with derived quantities.

use nalgebra::{DMatrix, DVector, Matrix4, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cpoly::{c, CPoly, SpherePoint, C64};
use crate::error::{Error, Result};
use crate::periods::{Mat2, PeriodData};
use crate::richelot::{DegenerateCurve, RichelotStep, RichelotTower};
use crate::thetaref::ThetaOracle;

/// `(S, S22, S12, S11)` at a point with both first partials.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SVec {
    pub s: [C64; 4],
    pub ds1: [C64; 4],
    pub ds2: [C64; 4],
}

impl SVec {
    pub fn partial(&self, j: usize) -> &[C64; 4] {
        if j == 0 {
            &self.ds1
        } else {
            &self.ds2
        }
    }

    /// Largest component modulus of the value vector.
    pub fn scale(&self) -> f64 {
        self.s.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Component-wise distance relative to the larger of the two value scales.
    pub fn rel_diff(&self, other: &SVec) -> f64 {
        let sc = self.scale().max(other.scale()).max(f64::MIN_POSITIVE);
        (0..4)
            .map(|k| (self.s[k] - other.s[k]).norm())
            .fold(0.0, f64::max)
            / sc
    }
}

pub const FIT_TOL: f64 = 1e-9;
pub const HOLDOUT_TOL: f64 = 1e-8;
/// The limit functions match a level to roughly the square of its gap, so the recursion starts at
/// the first level whose gap is below this; the steps after it only amplify fit noise.
pub const LIMIT_START_GAP: f64 = 1e-7;
const FIT_SAMPLES: usize = 60;
const HOLDOUT_SAMPLES: usize = 50;
const POLE_TOL: f64 = 1e-10;

/// Quadratic exponent of the limit functions.
pub fn limit_m_matrix(g: &DegenerateCurve) -> Result<Mat2> {
    let (fin, inf) = g.finite_roots();
    let half = g.c * 0.5;
    Ok(match inf {
        None => {
            let (t1, t2, t3) = (fin[0], fin[1], fin[2]);
            let e1 = t1 + t2 + t3;
            let e2 = t1 * t2 + t1 * t3 + t2 * t3;
            let e3 = t1 * t2 * t3;
            Mat2::new(e3 * e1, -e3, -e3, e2) * half
        }
        Some(_) => {
            let z = c(0.0, 0.0);
            Mat2::new(fin[0] * fin[1], z, z, z) * half
        }
    })
}

/// `sin^2(k (z2 - a z1))` with its gradient.
fn sin_sq(k: C64, a: C64, z: &Vector2<C64>) -> (C64, [C64; 2]) {
    let arg = k * (z[1] - a * z[0]);
    let s = arg.sin();
    let d = (arg * 2.0).sin() * k;
    (s * s, [-a * d, d])
}

/// Multiplies `E(z) = exp(z^T M z)` into a value and gradient 4-vector pair.
fn with_exponential(m: &Mat2, z: &Vector2<C64>, f: [C64; 4], df: [[C64; 4]; 2]) -> SVec {
    let e = (z.transpose() * m * z)[(0, 0)].exp();
    let de = (m + m.transpose()) * z;
    let mut out = SVec {
        s: [c(0.0, 0.0); 4],
        ds1: [c(0.0, 0.0); 4],
        ds2: [c(0.0, 0.0); 4],
    };
    for k in 0..4 {
        out.s[k] = e * f[k];
        out.ds1[k] = e * (de[0] * f[k] + df[0][k]);
        out.ds2[k] = e * (de[1] * f[k] + df[1][k]);
    }
    out
}

fn limit_generic(g: &DegenerateCurve, t: [C64; 3], z: &Vector2<C64>) -> Result<SVec> {
    let m = limit_m_matrix(g)?;
    let kappa = c(0.0, 0.5) * g.c.sqrt();
    let (t1, t2, t3) = (t[0], t[1], t[2]);
    let pi2 = {
        let p = (t1 - t2) * (t1 - t3) * (t2 - t3);
        p * p
    };
    let mut f = [c(0.0, 0.0); 4];
    let mut df = [[c(0.0, 0.0); 4]; 2];
    f[3] = pi2 * 0.5;
    for (a, b, d) in [(t1, t2, t3), (t2, t3, t1), (t3, t1, t2)] {
        let (s2, ds2) = sin_sq(kappa * (b - d), a, z);
        let w = (a - b) * (a - d);
        let coef = [
            w,
            w * (b + d),
            w * b * d,
            w * (a * b * d * (a + b + d) + b * b * d * d),
        ];
        for k in 0..4 {
            f[k] += coef[k] * s2;
            for j in 0..2 {
                df[j][k] += coef[k] * ds2[j];
            }
        }
    }
    let pre = c(-4.0, 0.0) / (g.c * pi2);
    let scales = [pre, pre, -pre, c(2.0, 0.0) / pi2];
    for k in 0..4 {
        f[k] *= scales[k];
        for row in df.iter_mut() {
            row[k] *= scales[k];
        }
    }
    Ok(with_exponential(&m, z, f, df))
}

fn limit_infinite(g: &DegenerateCurve, t1: C64, t2: C64, z: &Vector2<C64>) -> Result<SVec> {
    let m = limit_m_matrix(g)?;
    let kappa = c(0.0, 0.5) * g.c.sqrt();
    let d12 = t1 - t2;
    let (s1, ds1) = sin_sq(kappa, t1, z);
    let (s2, ds2) = sin_sq(kappa, t2, z);
    // sin^2(kappa d12 z1) as sin^2(k (0 - a z1)) with k = kappa, a = -d12
    let (s3, ds3) = sin_sq(kappa, -d12, &Vector2::new(z[0], c(0.0, 0.0)));
    let ds3 = [ds3[0], c(0.0, 0.0)];
    let k = c(4.0, 0.0) / (g.c * d12 * d12);
    // each component is a linear combination of (1, s1, s2, s3)
    let table = [
        [c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), -k],
        [c(0.0, 0.0), k * d12, -k * d12, -k * (t1 + t2)],
        [c(0.0, 0.0), -k * d12 * t2, k * d12 * t1, k * t1 * t2],
        [
            c(1.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            t1 * t2 * 2.0 / (d12 * d12),
        ],
    ];
    let mut f = [c(0.0, 0.0); 4];
    let mut df = [[c(0.0, 0.0); 4]; 2];
    for (r, row) in table.iter().enumerate() {
        f[r] = row[0] + row[1] * s1 + row[2] * s2 + row[3] * s3;
        for j in 0..2 {
            df[j][r] = row[1] * ds1[j] + row[2] * ds2[j] + row[3] * ds3[j];
        }
    }
    Ok(with_exponential(&m, z, f, df))
}

/// Closed-form basis on the degenerate curve, with partials.
pub fn limit_s(g: &DegenerateCurve, z: &Vector2<C64>) -> Result<SVec> {
    match g.t.iter().position(|p| p.is_infinite()) {
        None => {
            let t: Vec<C64> = g.t.iter().filter_map(|p| p.finite()).collect();
            limit_generic(g, [t[0], t[1], t[2]], z)
        }
        Some(j) => {
            let t1 = g.t[(j + 1) % 3].finite().expect("one infinite root");
            let t2 = g.t[(j + 2) % 3].finite().expect("one infinite root");
            limit_infinite(g, t1, t2, z)
        }
    }
}

/// Symmetric 4x4 matrices expressing each component at one level as a quadratic form in the
/// basis of the next level.
#[derive(Clone, Debug, Serialize)]
pub struct TransferMatrices {
    #[serde(skip)]
    pub x: [Matrix4<C64>; 4],
    pub fit_residual: f64,
    pub holdout_residual: f64,
}

const PAIRS: [(usize, usize); 10] = [
    (0, 0),
    (0, 1),
    (0, 2),
    (0, 3),
    (1, 1),
    (1, 2),
    (1, 3),
    (2, 2),
    (2, 3),
    (3, 3),
];

fn design_row(s: &[C64; 4]) -> [C64; 10] {
    let mut row = [c(0.0, 0.0); 10];
    for (i, &(a, b)) in PAIRS.iter().enumerate() {
        row[i] = s[a] * s[b] * if a == b { 1.0 } else { 2.0 };
    }
    row
}

fn quad_form4(x: &Matrix4<C64>, s: &[C64; 4], ds: &[C64; 4]) -> (C64, C64) {
    let mut v = c(0.0, 0.0);
    let mut d = c(0.0, 0.0);
    for a in 0..4 {
        for b in 0..4 {
            v += s[a] * x[(a, b)] * s[b];
            d += ds[a] * x[(a, b)] * s[b] * 2.0;
        }
    }
    (v, d)
}

/// `exp(-z^T h z)` weight times `-32 Delta^3`, the left-hand factor of the transfer relation.
fn lhs_factor(step: &RichelotStep, z: &Vector2<C64>) -> C64 {
    let d3 = step.delta * step.delta * step.delta;
    -(d3 * 32.0) * (-(z.transpose() * step.h_matrix * z)[(0, 0)]).exp()
}

/// Where transfer fits are sampled: a box around the origin plus the fundamental domain.
#[derive(Clone, Copy, Debug)]
pub struct FitRegion {
    pub box_scale: f64,
    pub a: Mat2,
    pub b: Mat2,
}

impl FitRegion {
    pub fn from_periods(p: &PeriodData) -> Self {
        let box_scale = 0.5
            * (0..3)
                .map(|j| p.w.column(j).norm())
                .fold(f64::INFINITY, f64::min);
        FitRegion {
            box_scale,
            a: p.a,
            b: p.b,
        }
    }

    /// Even draws land near the origin, odd ones anywhere in a slightly enlarged period cell.
    fn sample(&self, rng: &mut ChaCha8Rng, k: usize) -> Vector2<C64> {
        if k.is_multiple_of(2) {
            let sc = self.box_scale;
            let mut u = || sc * (2.0 * rng.random::<f64>() - 1.0);
            Vector2::new(c(u(), u()), c(u(), u()))
        } else {
            let mut u = || c(1.2 * rng.random::<f64>() - 0.6, 0.0);
            self.a * Vector2::new(u(), u()) + self.b * Vector2::new(u(), u())
        }
    }
}

/// Fits the transfer matrices of one step against the reference evaluator at both levels.
pub fn fit_transfer_matrices(
    step: &RichelotStep,
    oracle: &ThetaOracle,
    oracle_hat: &ThetaOracle,
    region: &FitRegion,
    seed: u64,
    fit_tol: f64,
) -> Result<TransferMatrices> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cands = Vec::new();
    for k in 0..FIT_SAMPLES + 10 {
        let z = region.sample(&mut rng, k);
        let hat = oracle_hat.eval(&z)?;
        let here = oracle.eval(&z)?;
        cands.push((z, hat, here));
    }
    let top = cands
        .iter()
        .map(|(_, h, _)| h.s[0].norm())
        .fold(0.0, f64::max);
    let samples: Vec<_> = cands
        .into_iter()
        .filter(|(_, h, _)| h.s[0].norm() >= 1e-8 * top)
        .take(FIT_SAMPLES)
        .collect();
    if samples.len() < 25 {
        return Err(Error::certificate(
            "kleinian",
            "too few usable sample points for the transfer fit",
        ));
    }
    let n = samples.len();
    let rhs_rows: Vec<[C64; 4]> = samples
        .iter()
        .map(|(z, _, here)| {
            let f = lhs_factor(step, z);
            [f * here.s[0], f * here.s[1], f * here.s[2], f * here.s[3]]
        })
        .collect();
    // rows weighted so the least-squares residual is relative per point
    let weight: Vec<f64> = rhs_rows
        .iter()
        .map(|r| 1.0 / r.iter().map(|v| v.norm()).fold(f64::MIN_POSITIVE, f64::max))
        .collect();
    let mut design = DMatrix::<C64>::zeros(n, 10);
    for (i, (_, hat, _)) in samples.iter().enumerate() {
        for (j, v) in design_row(&hat.s).into_iter().enumerate() {
            design[(i, j)] = v * weight[i];
        }
    }
    let col_scale: Vec<f64> = (0..10)
        .map(|j| design.column(j).norm().max(f64::MIN_POSITIVE))
        .collect();
    for (j, s) in col_scale.iter().enumerate() {
        design.column_mut(j).scale_mut(1.0 / s);
    }
    let svd = design.clone().svd(true, true);
    let mut x = [Matrix4::<C64>::zeros(); 4];
    let mut worst = 0.0f64;
    for comp in 0..4 {
        let b = DVector::from_iterator(n, rhs_rows.iter().zip(&weight).map(|(r, w)| r[comp] * *w));
        let sol = svd
            .solve(&b, 1e-15)
            .map_err(|e| Error::certificate("kleinian", format!("transfer fit failed: {e}")))?;
        let res = &design * &sol - &b;
        worst = res.iter().map(|v| v.norm()).fold(worst, f64::max);
        for (j, &(a, bb)) in PAIRS.iter().enumerate() {
            let v = sol[j] / col_scale[j];
            x[comp][(a, bb)] = v;
            x[comp][(bb, a)] = v;
        }
    }
    if worst > fit_tol {
        return Err(Error::certificate(
            "kleinian",
            format!("transfer relation violated: fit residual {worst:.2e} exceeds {fit_tol:.0e}"),
        ));
    }
    let mut holdout = 0.0f64;
    for k in 0..HOLDOUT_SAMPLES {
        let z = region.sample(&mut rng, k);
        let hat = oracle_hat.eval(&z)?;
        let here = oracle.eval(&z)?;
        let f = lhs_factor(step, &z);
        let sc = here.scale();
        for comp in 0..4 {
            let (v, _) = quad_form4(&x[comp], &hat.s, &hat.ds1);
            holdout = holdout.max((v / f - here.s[comp]).norm() / sc);
        }
    }
    if holdout > HOLDOUT_TOL {
        return Err(Error::certificate(
            "kleinian",
            format!(
                "transfer matrices fail hold-out: residual {holdout:.2e} exceeds {HOLDOUT_TOL:.0e}"
            ),
        ));
    }
    Ok(TransferMatrices {
        x,
        fit_residual: worst,
        holdout_residual: holdout,
    })
}

/// One step of the backward recursion.
pub fn transfer_apply(
    step: &RichelotStep,
    tm: &TransferMatrices,
    hat: &SVec,
    z: &Vector2<C64>,
) -> Result<SVec> {
    let hz = (step.h_matrix + step.h_matrix.transpose()) * z;
    let q = (z.transpose() * step.h_matrix * z)[(0, 0)];
    if q.re > 700.0 {
        return Err(Error::domain(
            "kleinian",
            format!("exponential prefactor overflows at |z| = {:.3e}", z.norm()),
        ));
    }
    let d3 = step.delta * step.delta * step.delta;
    let pre = -q.exp() / (d3 * 32.0);
    let mut out = SVec {
        s: [c(0.0, 0.0); 4],
        ds1: [c(0.0, 0.0); 4],
        ds2: [c(0.0, 0.0); 4],
    };
    for k in 0..4 {
        let (v, d1) = quad_form4(&tm.x[k], &hat.s, &hat.ds1);
        let (_, d2) = quad_form4(&tm.x[k], &hat.s, &hat.ds2);
        out.s[k] = pre * v;
        out.ds1[k] = pre * (hz[0] * v + d1);
        out.ds2[k] = pre * (hz[1] * v + d2);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug)]
pub struct EvalOptions {
    pub fit_tol: f64,
    pub seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            fit_tol: FIT_TOL,
            seed: 0x5eed,
        }
    }
}

/// Tower, period data and fitted transfer matrices: everything a point evaluation needs.
pub struct Evaluator {
    pub tower: RichelotTower,
    pub periods: PeriodData,
    pub transfers: Vec<TransferMatrices>,
    /// Level at which the backward recursion is seeded with the limit functions.
    pub start_level: usize,
    oracle: ThetaOracle,
}

impl Evaluator {
    pub fn new(tower: RichelotTower, periods: PeriodData, opts: EvalOptions) -> Result<Self> {
        let levels = tower.steps.len() + 1;
        let oracles: Vec<ThetaOracle> = (0..levels)
            .into_par_iter()
            .map(|n| ThetaOracle::new(&periods, n))
            .collect::<Result<_>>()?;
        let region = FitRegion::from_periods(&periods);
        let transfers = tower
            .steps
            .par_iter()
            .enumerate()
            .map(|(n, step)| {
                fit_transfer_matrices(
                    step,
                    &oracles[n],
                    &oracles[n + 1],
                    &region,
                    opts.seed.wrapping_add(n as u64),
                    opts.fit_tol,
                )
                .map_err(|e| match e {
                    Error::Certificate { module, msg } => Error::Certificate {
                        module,
                        msg: format!("step {n}: {msg}"),
                    },
                    other => other,
                })
            })
            .collect::<Result<_>>()?;
        let oracle = oracles.into_iter().next().expect("level 0");
        let start_level = tower
            .gap_history()
            .iter()
            .position(|g| *g <= LIMIT_START_GAP)
            .unwrap_or(levels - 1)
            .min(levels - 1);
        Ok(Evaluator {
            tower,
            periods,
            transfers,
            start_level,
            oracle,
        })
    }

    pub fn levels(&self) -> usize {
        self.tower.steps.len()
    }

    /// Backward recursion from the degenerate limit, after moving `z` to a short lattice
    /// representative; the recursion loses accuracy far out along the b-periods.
    pub fn eval_s(&self, z: &Vector2<C64>) -> Result<SVec> {
        let (z0, w, eta) = self.periods.metric_reduce(z)?;
        if w.iter().all(|x| *x == c(0.0, 0.0)) {
            return self.eval_s_direct(z);
        }
        let s = self.eval_s_direct(&z0)?;
        let f = (eta.transpose() * (z0 * c(2.0, 0.0) + w))[(0, 0)].exp();
        let (e1, e2) = (eta[0] * 2.0, eta[1] * 2.0);
        Ok(SVec {
            s: s.s.map(|v| f * v),
            ds1: std::array::from_fn(|k| f * (e1 * s.s[k] + s.ds1[k])),
            ds2: std::array::from_fn(|k| f * (e2 * s.s[k] + s.ds2[k])),
        })
    }

    /// The recursion at `z` itself, without lattice reduction.
    pub fn eval_s_direct(&self, z: &Vector2<C64>) -> Result<SVec> {
        let mut cur = limit_s(&self.tower.limit, z)?;
        let used = self
            .tower
            .steps
            .iter()
            .zip(&self.transfers)
            .take(self.start_level);
        for (step, tm) in used.rev() {
            cur = transfer_apply(step, tm, &cur, z)?;
        }
        Ok(cur)
    }

    pub fn oracle_s(&self, z: &Vector2<C64>) -> Result<SVec> {
        self.oracle.eval(z)
    }

    /// `(p22, p12, p11)` as component ratios.
    pub fn wp(&self, z: &Vector2<C64>) -> Result<[C64; 3]> {
        wp_from(&self.eval_s(z)?)
    }

    /// `sigma(2z)` by duplication together with `(zeta_1(z), zeta_2(z))`.
    pub fn sigma_zeta(&self, z: &Vector2<C64>) -> Result<(C64, [C64; 2])> {
        check_weierstrass(self.tower.f())?;
        sigma_zeta_from(&self.eval_s(z)?)
    }
}

pub fn wp_from(s: &SVec) -> Result<[C64; 3]> {
    if s.s[0].norm() < POLE_TOL * s.scale() {
        return Err(Error::domain(
            "kleinian",
            format!("point is near the polar set (|S| = {:.2e})", s.s[0].norm()),
        ));
    }
    Ok([s.s[1] / s.s[0], s.s[2] / s.s[0], s.s[3] / s.s[0]])
}

pub fn check_weierstrass(f: &CPoly) -> Result<()> {
    if f.degree() != Some(5) || (f.leading() - c(4.0, 0.0)).norm() > 1e-12 {
        return Err(Error::domain(
            "kleinian",
            "sigma needs a quintic with leading coefficient 4",
        ));
    }
    Ok(())
}

pub fn sigma_zeta_from(s: &SVec) -> Result<(C64, [C64; 2])> {
    let [v, v22, v12, v11] = s.s;
    let [d, d22, d12, d11] = s.ds1;
    let sigma = v12 * d22 - v22 * d12 + v11 * d - v * d11;
    if v.norm() < POLE_TOL * s.scale() {
        return Err(Error::domain(
            "kleinian",
            "zeta undefined: point is near the polar set",
        ));
    }
    Ok((sigma, [s.ds1[0] / (v * 2.0), s.ds2[0] / (v * 2.0)]))
}

/// Convenience for a finite degenerate curve from real data.
pub fn degenerate(c0: C64, t: [Option<C64>; 3]) -> Result<DegenerateCurve> {
    let p = t.map(|x| x.map_or(SpherePoint::Infinity, SpherePoint::Finite));
    DegenerateCurve::new(c0, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disks::find_disks;
    use crate::periods::{compute_periods, degenerate_e, degenerate_w};
    use crate::richelot::iterate_tower;

    fn generic() -> DegenerateCurve {
        degenerate(
            c(1.0, 0.0),
            [Some(c(0.0, 0.0)), Some(c(1.0, 0.0)), Some(c(-1.0, 0.0))],
        )
        .unwrap()
    }

    fn twisted() -> DegenerateCurve {
        degenerate(
            c(0.8, -0.3),
            [Some(c(0.2, 0.4)), Some(c(-0.7, 0.1)), Some(c(0.5, -0.9))],
        )
        .unwrap()
    }

    fn infinite() -> DegenerateCurve {
        degenerate(c(1.3, 0.4), [Some(c(0.2, 0.4)), None, Some(c(-0.7, 0.1))]).unwrap()
    }

    fn check_taylor(g: &DegenerateCurve) {
        let s0 = limit_s(g, &Vector2::zeros()).unwrap();
        assert!((s0.s[3] - c(1.0, 0.0)).norm() < 1e-12);
        for k in 0..3 {
            assert!(s0.s[k].norm() < 1e-12);
        }
        let e = 1e-4;
        let at = |a: f64, b: f64| limit_s(g, &Vector2::new(c(a, 0.0), c(b, 0.0))).unwrap();
        let (x, y, xy) = (at(e, 0.0), at(0.0, e), at(e, e));
        let e2 = e * e;
        assert!((x.s[0] - e2).norm() < 1e-9 * e2 * 1e4);
        assert!(x.s[1].norm() < 1e-9 && x.s[2].norm() < 1e-9);
        assert!((y.s[2] + e2).norm() < 1e-9 && y.s[0].norm() < 1e-9 && y.s[1].norm() < 1e-9);
        assert!((xy.s[1] - 2.0 * e2).norm() < 1e-9);
    }

    #[test]
    fn limit_taylor_normalization() {
        for g in [generic(), twisted(), infinite()] {
            check_taylor(&g);
        }
    }

    #[test]
    fn limit_quasi_periodicity() {
        for g in [generic(), twisted(), infinite()] {
            let w = degenerate_w(&g).unwrap();
            let e = degenerate_e(&g).unwrap();
            let z = Vector2::new(c(0.13, -0.2), c(0.31, 0.07));
            let base = limit_s(&g, &z).unwrap();
            for j in 0..3 {
                let wj = Vector2::new(w[(0, j)], w[(1, j)]);
                let ej = Vector2::new(e[(0, j)], e[(1, j)]);
                let f = ((ej * c(2.0, 0.0)).transpose() * (z + wj * c(0.5, 0.0)))[(0, 0)].exp();
                let sh = limit_s(&g, &(z + wj)).unwrap();
                for k in 0..4 {
                    assert!(
                        (sh.s[k] - f * base.s[k]).norm() < 1e-9 * sh.scale(),
                        "col {j} comp {k}"
                    );
                }
            }
        }
    }

    #[test]
    fn limit_permutation_invariance() {
        let g = twisted();
        let h = DegenerateCurve::new(g.c, [g.t[2], g.t[0], g.t[1]]).unwrap();
        let z = Vector2::new(c(0.3, 0.1), c(-0.2, 0.25));
        assert!(limit_s(&g, &z).unwrap().rel_diff(&limit_s(&h, &z).unwrap()) < 1e-13);
    }

    #[test]
    fn m_matrix_matches_second_kind_periods() {
        for g in [generic(), twisted(), infinite()] {
            let w = degenerate_w(&g).unwrap();
            let e = degenerate_e(&g).unwrap();
            let a = Mat2::new(w[(0, 0)], w[(0, 1)], w[(1, 0)], w[(1, 1)]);
            let ea = Mat2::new(e[(0, 0)], e[(0, 1)], e[(1, 0)], e[(1, 1)]);
            let m = limit_m_matrix(&g).unwrap();
            assert!((ea * a.try_inverse().unwrap() - m).norm() < 1e-12 * m.norm().max(1.0));
        }
    }

    #[test]
    fn limit_derivatives() {
        for g in [twisted(), infinite()] {
            let z = Vector2::new(c(0.21, 0.1), c(-0.3, 0.15));
            let s = limit_s(&g, &z).unwrap();
            let h = 1e-6;
            for j in 0..2 {
                let mut dz = Vector2::zeros();
                dz[j] = c(h, 0.0);
                let (p, m) = (
                    limit_s(&g, &(z + dz)).unwrap(),
                    limit_s(&g, &(z - dz)).unwrap(),
                );
                for k in 0..4 {
                    let fd = (p.s[k] - m.s[k]) / (2.0 * h);
                    assert!((fd - s.partial(j)[k]).norm() < 1e-7 * s.scale().max(1.0));
                }
            }
        }
    }

    #[test]
    fn recursion_matches_oracle() {
        let f = CPoly::from_real(&[0.7, -0.2, 1.1, 0.4, -0.9, 0.3, 1.5]).unwrap();
        let d = find_disks(&f).unwrap();
        let t = iterate_tower(&f, &d, 1e-13, 40).unwrap();
        let p = compute_periods(&t).unwrap();
        let ev = Evaluator::new(t, p, EvalOptions::default()).unwrap();
        for tm in &ev.transfers {
            assert!(tm.fit_residual < FIT_TOL && tm.holdout_residual < HOLDOUT_TOL);
        }
        let z = Vector2::new(c(0.2, -0.1), c(0.05, 0.3));
        let a = ev.eval_s(&z).unwrap();
        let b = ev.oracle_s(&z).unwrap();
        assert!(a.rel_diff(&b) < 1e-7, "{}", a.rel_diff(&b));
    }
}
