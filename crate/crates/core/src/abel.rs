//! Abel map of degree-2 divisors: Kummer coordinates, descent through the tower,
//! inversion on the degenerate curve and sign resolution.

use nalgebra::{Matrix5, Vector2, Vector5};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cpoly::{c, CPoly, C64};
use crate::error::{Error, Result};
use crate::kleinian::{Evaluator, SVec, TransferMatrices};
use crate::richelot::DegenerateCurve;

pub const CERT_TOL: f64 = 1e-6;
const DESCENT_TOL: f64 = 1e-8;
const DEDUP_TOL: f64 = 1e-6;
const RANDOM_SEEDS: usize = 16;
const LEAF_BUDGET: usize = 50;
const ON_CURVE_TOL: f64 = 1e-10;
/// Lattice-coordinate radius within which an ambiguous class is tested against the nearest half period.
const HALF_PERIOD_RADIUS: f64 = 1e-3;

/// A point on `y^2 = f(x)`: finite `[x, y]`, or `{"inf": a}` with `a` the value of `y/x^3`
/// (zero for the single point of a quintic).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CurvePoint {
    Finite([C64; 2]),
    Infinite { inf: C64 },
}

impl CurvePoint {
    pub fn finite(x: C64, y: C64) -> Self {
        CurvePoint::Finite([x, y])
    }

    /// Image under `y -> -y`.
    pub fn conj(self) -> Self {
        match self {
            CurvePoint::Finite([x, y]) => CurvePoint::Finite([x, -y]),
            CurvePoint::Infinite { inf } => CurvePoint::Infinite { inf: -inf },
        }
    }

    pub fn validate(&self, f: &CPoly) -> Result<()> {
        match *self {
            CurvePoint::Finite([x, y]) => {
                let fx = f.eval(x);
                let scale = f
                    .coeffs()
                    .iter()
                    .enumerate()
                    .map(|(k, a)| a.norm() * x.norm().max(1.0).powi(k as i32))
                    .sum::<f64>();
                if (y * y - fx).norm() > ON_CURVE_TOL * scale {
                    return Err(Error::Input(format!(
                        "point ({x}, {y}) is not on the curve"
                    )));
                }
            }
            CurvePoint::Infinite { inf } => {
                let f6 = f.coeff(6);
                let ok = match f.degree() {
                    Some(6) => (inf * inf - f6).norm() <= ON_CURVE_TOL * f6.norm(),
                    Some(5) => inf.norm() == 0.0,
                    _ => false,
                };
                if !ok {
                    return Err(Error::Input(format!(
                        "no point at infinity with y/x^3 = {inf}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Divisor2 {
    pub p: CurvePoint,
    pub q: CurvePoint,
}

/// Unit-norm projective 4-vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KummerVec {
    pub v: [C64; 4],
}

fn norm4(v: &[C64; 4]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

impl KummerVec {
    pub fn new(v: [C64; 4]) -> Result<Self> {
        let n = norm4(&v);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::domain("abel", "Kummer vector is zero or not finite"));
        }
        Ok(KummerVec {
            v: v.map(|z| z / n),
        })
    }

    /// Sine of the angle between the two complex lines.
    pub fn distance(&self, other: &[C64; 4]) -> f64 {
        proj_dist(&self.v, other)
    }
}

pub fn proj_dist(u: &[C64; 4], v: &[C64; 4]) -> f64 {
    let (nu, nv) = (norm4(u), norm4(v));
    let ip: C64 = (0..4).map(|k| u[k].conj() * v[k]).sum::<C64>() / (nu * nu);
    let r: f64 = (0..4)
        .map(|k| (v[k] - u[k] * ip).norm_sqr())
        .sum::<f64>()
        .sqrt();
    (r / nv).min(1.0)
}

/// Value at `(x1, x2)` of the two-point expression whose difference with `2 y1 y2` gives `p11`.
fn two_point_form(f: &CPoly, x1: C64, x2: C64) -> C64 {
    let p = f.padded();
    let coef = |k: usize| if k < 7 { p[k] } else { c(0.0, 0.0) };
    (0..4)
        .map(|j| {
            let xx = (x1 * x2).powi(j as i32);
            xx * (coef(2 * j) * 2.0 + coef(2 * j + 1) * (x1 + x2))
        })
        .sum()
}

/// Projective `(S : S22 : S12 : S11)` at the Abel image of a divisor in general position.
pub fn kummer_coords(f: &CPoly, d: &Divisor2) -> Result<KummerVec> {
    match (d.p, d.q) {
        (CurvePoint::Finite([x1, y1]), CurvePoint::Finite([x2, y2])) => {
            let dx = x1 - x2;
            if dx.norm() <= 1e-12 * x1.norm().max(1.0) {
                if (y1 + y2).norm() <= 1e-12 * y1.norm().max(1.0) {
                    return KummerVec::new([c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
                }
                return Err(Error::domain(
                    "abel",
                    "points share an x-coordinate; use the auxiliary-point decomposition",
                ));
            }
            let p11 = (two_point_form(f, x1, x2) - y1 * y2 * 2.0) / (dx * dx * 4.0);
            KummerVec::new([c(1.0, 0.0), x1 + x2, -x1 * x2, p11])
        }
        (CurvePoint::Infinite { inf }, CurvePoint::Finite([x, y]))
        | (CurvePoint::Finite([x, y]), CurvePoint::Infinite { inf }) => {
            let p = f.padded();
            let x2 = x * x;
            KummerVec::new([
                c(0.0, 0.0),
                c(1.0, 0.0),
                -x,
                (p[6] * x2 * x * 2.0 + p[5] * x2 - inf * y * 2.0) * 0.25,
            ])
        }
        (CurvePoint::Infinite { .. }, CurvePoint::Infinite { .. }) => Err(Error::domain(
            "abel",
            "both points at infinity; use the auxiliary-point decomposition",
        )),
    }
}

fn quad_map(tm: &TransferMatrices, v: &[C64; 4]) -> [C64; 4] {
    let mut out = [c(0.0, 0.0); 4];
    for (k, o) in out.iter_mut().enumerate() {
        for a in 0..4 {
            for b in 0..4 {
                *o += v[a] * tm.x[k][(a, b)] * v[b];
            }
        }
    }
    out
}

/// Newton on `Q(v) = lambda u`, `conj(seed) . v = 1`.
fn newton_preimage(tm: &TransferMatrices, u: &[C64; 4], seed: &[C64; 4]) -> Option<[C64; 4]> {
    let mut v = *seed;
    let q = quad_map(tm, &v);
    let uu: f64 = norm4(u).powi(2);
    let mut lam: C64 = (0..4).map(|k| u[k].conj() * q[k]).sum::<C64>() / uu;
    for _ in 0..80 {
        let q = quad_map(tm, &v);
        let mut jac = Matrix5::<C64>::zeros();
        let mut rhs = Vector5::<C64>::zeros();
        for k in 0..4 {
            for a in 0..4 {
                let mut g = c(0.0, 0.0);
                for b in 0..4 {
                    g += tm.x[k][(a, b)] * v[b];
                }
                jac[(k, a)] = g * 2.0;
            }
            jac[(k, 4)] = -u[k];
            rhs[k] = -(q[k] - lam * u[k]);
        }
        for a in 0..4 {
            jac[(4, a)] = seed[a].conj();
        }
        rhs[4] = -((0..4).map(|a| seed[a].conj() * v[a]).sum::<C64>() - 1.0);
        let step = jac.lu().solve(&rhs)?;
        for a in 0..4 {
            v[a] += step[a];
        }
        lam += step[4];
        if !v.iter().all(|z| z.is_finite()) {
            return None;
        }
        if step.norm() < 1e-15 * (norm4(&v) + lam.norm()) {
            break;
        }
    }
    (proj_dist(&quad_map(tm, &v), u) < DESCENT_TOL)
        .then(|| KummerVec::new(v).ok().map(|k| k.v))
        .flatten()
}

fn random_unit(rng: &mut ChaCha8Rng) -> [C64; 4] {
    let mut v = [c(0.0, 0.0); 4];
    for z in v.iter_mut() {
        *z = c(
            2.0 * rng.random::<f64>() - 1.0,
            2.0 * rng.random::<f64>() - 1.0,
        );
    }
    let n = norm4(&v);
    v.map(|z| z / n)
}

/// Distinct preimages of `u` under one quadratic step, nearest to `u` first.
pub fn kummer_preimages(
    tm: &TransferMatrices,
    u: &KummerVec,
    rng: &mut ChaCha8Rng,
) -> Vec<KummerVec> {
    let mut found: Vec<[C64; 4]> = Vec::new();
    let mut seeds = vec![u.v];
    seeds.extend((0..RANDOM_SEEDS).map(|_| random_unit(rng)));
    for s in &seeds {
        if let Some(v) = newton_preimage(tm, &u.v, s) {
            if found.iter().all(|w| proj_dist(w, &v) > DEDUP_TOL) {
                found.push(v);
            }
        }
    }
    found.sort_by(|a, b| proj_dist(a, &u.v).total_cmp(&proj_dist(b, &u.v)));
    found.into_iter().map(|v| KummerVec { v }).collect()
}

/// Chain of nearest preimages from level 0 down to the degenerate limit.
pub fn descend_kummer(ev: &Evaluator, v0: &KummerVec, seed: u64) -> Result<Vec<KummerVec>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chain = vec![*v0];
    for (n, tm) in ev.transfers.iter().enumerate() {
        let next = kummer_preimages(tm, chain.last().expect("nonempty"), &mut rng);
        let v = next.first().ok_or_else(|| {
            Error::convergence("abel", format!("step {n}: Newton found no Kummer preimage"))
        })?;
        chain.push(*v);
    }
    Ok(chain)
}

/// `∫_{x1}^{x2} (1, x) dx / (sqrt(c) prod (x - t_j))` with roots of `a x^2 - b x - g` as ends.
pub fn degenerate_invert(g: &DegenerateCurve, v: &KummerVec) -> Result<Vector2<C64>> {
    let [alpha, beta, gamma, _] = v.v;
    if alpha.norm() < 1e-12 {
        return Err(Error::domain(
            "abel",
            "limit Kummer vector has a root at infinity",
        ));
    }
    let disc = (beta * beta + alpha * gamma * 4.0).sqrt();
    let (x1, x2) = ((beta - disc) / (alpha * 2.0), (beta + disc) / (alpha * 2.0));
    let (fin, _) = g.finite_roots();
    let sc = g.c.sqrt();
    let len = (x2 - x1).norm();
    // detour through a shifted midpoint when a pole sits on the segment
    let mut mids: Vec<C64> = Vec::new();
    if fin
        .iter()
        .any(|&t| seg_dist(t, x1, x2) < 1e-8 * len.max(1e-300))
    {
        mids.push((x1 + x2) * 0.5 + (x2 - x1) * c(0.0, 0.25));
    }
    let mut nodes = vec![x1];
    nodes.extend(mids);
    nodes.push(x2);
    let mut z = Vector2::zeros();
    for (j, &t) in fin.iter().enumerate() {
        let r: C64 = fin
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != j)
            .map(|(_, &s)| t - s)
            .product();
        let log: C64 = nodes
            .windows(2)
            .map(|w| ((w[1] - t) / (w[0] - t)).ln())
            .sum();
        z += Vector2::new(c(1.0, 0.0), t) * (log / (r * sc));
    }
    Ok(z)
}

fn seg_dist(z: C64, p: C64, q: C64) -> f64 {
    let d = q - p;
    if d.norm() == 0.0 {
        return (z - p).norm();
    }
    let t = ((z - p) * d.conj()).re / d.norm_sqr();
    (z - (p + d * t.clamp(0.0, 1.0))).norm()
}

#[derive(Clone, Debug, Serialize)]
pub struct AbelResult {
    #[serde(serialize_with = "ser_vec2")]
    pub z: Vector2<C64>,
    /// Set when the sign test cannot separate `z` from `-z` (2-torsion).
    pub sign_ambiguous: bool,
    /// Projective distance between `eval_S(z)` and the divisor's Kummer vector.
    pub kummer_residual: f64,
    /// Mismatch in the derivative identities that fix the sign.
    pub sign_residual: f64,
    pub descent_residual: f64,
    pub leaves_tried: usize,
}

fn ser_vec2<S: serde::Serializer>(z: &Vector2<C64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    [z[0], z[1]].serialize(s)
}

/// Derivative data that flips sign with `z`: returns `(computed, expected)`.
fn sign_data(s: &SVec, d: &Divisor2) -> Result<([C64; 2], [C64; 2])> {
    match (d.p, d.q) {
        (CurvePoint::Finite([x1, y1]), CurvePoint::Finite([x2, y2])) => {
            let (v, v22, v12) = (s.s[0], s.s[1], s.s[2]);
            let (dv, d22, d12) = (s.ds2[0], s.ds2[1], s.ds2[2]);
            let dp22 = (d22 * v - v22 * dv) / (v * v);
            let dp12 = (d12 * v - v12 * dv) / (v * v);
            let dx = x2 - x1;
            Ok(([dp22, dp12], [(y2 - y1) / dx, (x2 * y1 - x1 * y2) / dx]))
        }
        (CurvePoint::Infinite { inf }, CurvePoint::Finite([x, y]))
        | (CurvePoint::Finite([x, y]), CurvePoint::Infinite { inf }) => {
            if x.norm() < 1e-12 {
                return Err(Error::domain("abel", "sign test at infinity needs x != 0"));
            }
            let lg = |j: usize| s.partial(j)[1] / s.s[1] - s.partial(j)[2] / s.s[2];
            Ok(([lg(0), lg(1)], [inf * x * x - y / x, -inf * x]))
        }
        _ => Err(Error::domain(
            "abel",
            "sign test needs at least one finite point",
        )),
    }
}

fn vec_dist(a: &[C64; 2], b: &[C64; 2], sign: f64) -> f64 {
    ((a[0] - b[0] * sign).norm_sqr() + (a[1] - b[1] * sign).norm_sqr()).sqrt()
}

/// Projective distance, tightened by the O(1) ratios `S22/S`, `S12/S` when those are defined;
/// near the base class the projective distance alone cannot tell points apart.
fn certificate_miss(s: &SVec, v0: &KummerVec) -> f64 {
    let mut miss = proj_dist(&s.s, &v0.v);
    let [a, b, g, _] = v0.v;
    if a.norm() > 1e-8 && s.s[0].norm() > 0.0 {
        for (want, got) in [(b / a, s.s[1] / s.s[0]), (g / a, s.s[2] / s.s[0])] {
            miss = miss.max((want - got).norm() / want.norm().max(1.0));
        }
    }
    miss
}

/// Symmetric classes sit where the Kummer map is stationary, so descent only pins them to about
/// the square root of the residual. The nearest half period is taken instead when it certifies.
fn snap_half_period(ev: &Evaluator, d: &Divisor2, z: Vector2<C64>, cert_tol: f64) -> Vector2<C64> {
    let Ok(u) = ev.periods.lattice_coords(&z) else {
        return z;
    };
    let half: Vec<f64> = u.iter().map(|x| (2.0 * x).round() / 2.0).collect();
    if u.iter()
        .zip(&half)
        .any(|(x, h)| (x - h).abs() > HALF_PERIOD_RADIUS)
    {
        return z;
    }
    let t = ev.periods.a * Vector2::new(c(half[0], 0.0), c(half[1], 0.0))
        + ev.periods.b * Vector2::new(c(half[2], 0.0), c(half[3], 0.0));
    let certified = kummer_coords(ev.tower.f(), d)
        .and_then(|v0| ev.eval_s(&t).map(|s| certificate_miss(&s, &v0)))
        .is_ok_and(|miss| miss < cert_tol);
    if certified {
        t
    } else {
        z
    }
}

/// Abel image of a divisor in general position (no auxiliary decomposition).
fn abel_direct(ev: &Evaluator, d: &Divisor2, seed: u64, cert_tol: f64) -> Result<AbelResult> {
    let f = ev.tower.f();
    let v0 = kummer_coords(f, d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let levels = ev.transfers.len();
    let mut leaves = 0usize;
    let mut best_miss = f64::INFINITY;
    // depth-first over preimage choices, nearest first
    let mut stack: Vec<(usize, Vec<KummerVec>)> = vec![(0, vec![v0])];
    while let Some((n, chain)) = stack.pop() {
        if n == levels {
            leaves += 1;
            let vn = chain.last().expect("nonempty");
            if let Ok(z) = degenerate_invert(&ev.tower.limit, vn) {
                if let Ok(s) = ev.eval_s(&z) {
                    let miss = certificate_miss(&s, &v0);
                    best_miss = best_miss.min(miss);
                    if miss < cert_tol {
                        let descent = chain
                            .windows(2)
                            .zip(&ev.transfers)
                            .map(|(w, tm)| proj_dist(&quad_map(tm, &w[1].v), &w[0].v))
                            .fold(0.0, f64::max);
                        return finish(ev, d, z, s, miss, descent, leaves, cert_tol);
                    }
                }
            }
            if leaves >= LEAF_BUDGET {
                break;
            }
            continue;
        }
        let pre = kummer_preimages(&ev.transfers[n], chain.last().expect("nonempty"), &mut rng);
        for v in pre.into_iter().rev() {
            let mut next = chain.clone();
            next.push(v);
            stack.push((n + 1, next));
        }
    }
    Err(Error::certificate(
        "abel",
        format!("no descent chain reproduces the divisor's Kummer point ({leaves} leaves, best distance {best_miss:.2e})"),
    ))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    ev: &Evaluator,
    d: &Divisor2,
    z: Vector2<C64>,
    s: SVec,
    miss: f64,
    descent: f64,
    leaves: usize,
    cert_tol: f64,
) -> Result<AbelResult> {
    let (got, want) = sign_data(&s, d)?;
    let (plus, minus) = (vec_dist(&got, &want, 1.0), vec_dist(&got, &want, -1.0));
    let scale = (want[0].norm_sqr() + want[1].norm_sqr())
        .sqrt()
        .max((got[0].norm_sqr() + got[1].norm_sqr()).sqrt());
    let ambiguous = scale < cert_tol.sqrt() || plus.min(minus) > 0.5 * plus.max(minus);
    let (z, resid) = if plus <= minus {
        (z, plus)
    } else {
        (-z, minus)
    };
    let sign_residual = if scale > 0.0 {
        resid / scale.max(1.0)
    } else {
        0.0
    };
    if !ambiguous && sign_residual > cert_tol {
        return Err(Error::certificate(
            "abel",
            format!("sign identities fail at the recovered point ({sign_residual:.2e})"),
        ));
    }
    let z = if ambiguous {
        snap_half_period(ev, d, z, cert_tol)
    } else {
        z
    };
    Ok(AbelResult {
        z: ev.periods.reduce(&z)?,
        sign_ambiguous: ambiguous,
        kummer_residual: miss,
        sign_residual,
        descent_residual: descent,
        leaves_tried: leaves,
    })
}

fn is_base_class(f: &CPoly, d: &Divisor2) -> bool {
    match (d.p, d.q) {
        (CurvePoint::Finite([x1, y1]), CurvePoint::Finite([x2, y2])) => {
            (x1 - x2).norm() <= 1e-12 * x1.norm().max(1.0)
                && (y1 + y2).norm() <= 1e-10 * y1.norm().max(1.0)
        }
        (CurvePoint::Infinite { inf: a }, CurvePoint::Infinite { inf: b }) => {
            f.degree() == Some(5) || (a + b).norm() <= 1e-10 * a.norm()
        }
        _ => false,
    }
}

fn needs_auxiliary(d: &Divisor2) -> bool {
    match (d.p, d.q) {
        (CurvePoint::Finite([x1, _]), CurvePoint::Finite([x2, _])) => {
            (x1 - x2).norm() <= 1e-8 * x1.norm().max(1.0)
        }
        (CurvePoint::Infinite { .. }, CurvePoint::Infinite { .. }) => true,
        (CurvePoint::Infinite { .. }, CurvePoint::Finite([x, _]))
        | (CurvePoint::Finite([x, _]), CurvePoint::Infinite { .. }) => x.norm() < 1e-8,
    }
}

fn random_point(f: &CPoly, rng: &mut ChaCha8Rng) -> CurvePoint {
    let x = c(
        2.0 * rng.random::<f64>() - 1.0,
        2.0 * rng.random::<f64>() - 1.0,
    );
    CurvePoint::finite(x, f.eval(x).sqrt())
}

/// Abel image modulo the period lattice, reduced to lattice coordinates in [-1/2, 1/2).
pub fn abel_map(ev: &Evaluator, d: &Divisor2, seed: u64, cert_tol: f64) -> Result<AbelResult> {
    let f = ev.tower.f();
    d.p.validate(f)?;
    d.q.validate(f)?;
    if is_base_class(f, d) {
        let zero = Vector2::zeros();
        return Ok(AbelResult {
            z: zero,
            sign_ambiguous: true,
            kummer_residual: 0.0,
            sign_residual: 0.0,
            descent_residual: 0.0,
            leaves_tried: 0,
        });
    }
    if !needs_auxiliary(d) {
        match abel_direct(ev, d, seed, cert_tol) {
            Err(Error::Certificate { .. }) => {}
            other => return other,
        }
    }
    // split off a random point: P + Q ~ (P + R) + (Q + conj R)
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa5a5);
    let mut last = None;
    for attempt in 0..4 {
        let r = random_point(f, &mut rng);
        let d1 = Divisor2 { p: d.p, q: r };
        let d2 = Divisor2 {
            p: d.q,
            q: r.conj(),
        };
        let parts =
            abel_direct(ev, &d1, seed.wrapping_add(2 * attempt + 1), cert_tol).and_then(|a| {
                abel_direct(ev, &d2, seed.wrapping_add(2 * attempt + 2), cert_tol).map(|b| (a, b))
            });
        match parts {
            Ok((a, b)) => {
                let z = a.z + b.z;
                let ambiguous = ev.periods.lattice_defect(&(z * c(2.0, 0.0)))? < cert_tol;
                let z = if ambiguous {
                    snap_half_period(ev, d, z, cert_tol)
                } else {
                    z
                };
                return Ok(AbelResult {
                    z: ev.periods.reduce(&z)?,
                    sign_ambiguous: ambiguous,
                    kummer_residual: a.kummer_residual.max(b.kummer_residual),
                    sign_residual: a.sign_residual.max(b.sign_residual),
                    descent_residual: a.descent_residual.max(b.descent_residual),
                    leaves_tried: a.leaves_tried + b.leaves_tried,
                });
            }
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("attempted"))
}

/// Divisor whose Abel image is `z`, read off from the basis values and partials at `z`.
pub fn divisor_from_point(s: &SVec) -> Result<Divisor2> {
    let [v, v22, v12, _] = s.s;
    if v.norm() < 1e-10 * s.scale() {
        return Err(Error::domain("abel", "point lies on the polar set"));
    }
    let (sum, prod) = (v22 / v, -v12 / v);
    let disc = (sum * sum - prod * 4.0).sqrt();
    let (x1, x2) = ((sum - disc) * 0.5, (sum + disc) * 0.5);
    let dp = |k: usize| (s.ds2[k] * v - s.s[k] * s.ds2[0]) / (v * v);
    let (a, b) = (dp(1), dp(2));
    Ok(Divisor2 {
        p: CurvePoint::finite(x1, b + x1 * a),
        q: CurvePoint::finite(x2, b + x2 * a),
    })
}
