//! Richelot steps subordinate to a disk triple, the iteration driver, and its degenerate limit.
//!
//! The driver keeps each root pair as (midpoint, half-difference) in a working coordinate
//! where all six roots are finite. Half-differences are propagated through resultant
//! identities, so the in-disk gaps stay accurate far below the size of the roots.

use nalgebra::Matrix2;
use serde::Serialize;

use crate::cpoly::{
    bracket, c, delta, moebius_conjugate, quadratic_roots, roots, CPoly, Moebius, SpherePoint, C64,
};
use crate::disks::{factor_by_disks, split_roots, DiskTriple};
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-13;
pub const DEFAULT_MAX_ITER: usize = 40;

/// A double root farther out than this multiple of the others is read as infinity.
const INFINITE_ROOT_RATIO: f64 = 1e12;

/// One application of the disk-respecting Richelot construction.
#[derive(Clone, Debug)]
pub struct RichelotStep {
    pub f: CPoly,
    pub factors: [CPoly; 3],
    pub delta: C64,
    pub f_hat: CPoly,
    pub h_matrix: Matrix2<C64>,
}

/// `c (x - t1)^2 (x - t2)^2 (x - t3)^2`, with at most one `t_j` at infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DegenerateCurve {
    pub c: C64,
    pub t: [SpherePoint; 3],
}

impl DegenerateCurve {
    pub fn new(c: C64, t: [SpherePoint; 3]) -> Result<Self> {
        if c.norm() == 0.0 {
            return Err(Error::domain("richelot", "degenerate curve needs c != 0"));
        }
        if t.iter().filter(|p| p.is_infinite()).count() > 1 {
            return Err(Error::domain(
                "richelot",
                "at most one double root may sit at infinity",
            ));
        }
        for i in 0..3 {
            for j in i + 1..3 {
                if t[i] == t[j] {
                    return Err(Error::domain(
                        "richelot",
                        "double roots of the limit must be distinct",
                    ));
                }
            }
        }
        Ok(DegenerateCurve { c, t })
    }

    /// Finite double roots, and the index of the infinite one if present.
    pub fn finite_roots(&self) -> (Vec<C64>, Option<usize>) {
        let fin = self.t.iter().filter_map(|p| p.finite()).collect();
        (fin, self.t.iter().position(|p| p.is_infinite()))
    }

    pub fn poly(&self) -> Result<CPoly> {
        let (fin, _) = self.finite_roots();
        let doubled: Vec<C64> = fin.iter().flat_map(|&t| [t, t]).collect();
        CPoly::from_roots(self.c, &doubled)
    }
}

/// One level of the tower, in the original coordinate.
#[derive(Clone, Debug, Serialize)]
pub struct TowerLevel {
    pub f: CPoly,
    #[serde(serialize_with = "ser_pairs")]
    pub roots: [[SpherePoint; 2]; 3],
    /// In-disk root gaps: Euclidean for finite disks, chordal for an exterior one.
    pub gaps: [f64; 3],
    pub leading: C64,
}

fn ser_point(p: &SpherePoint) -> serde_json::Value {
    match p {
        SpherePoint::Finite(z) => serde_json::json!([z.re, z.im]),
        SpherePoint::Infinity => serde_json::json!("inf"),
    }
}

fn ser_pairs<S: serde::Serializer>(
    pairs: &[[SpherePoint; 2]; 3],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    let v: Vec<Vec<serde_json::Value>> = pairs
        .iter()
        .map(|p| p.iter().map(ser_point).collect())
        .collect();
    serde::Serialize::serialize(&v, s)
}

#[derive(Clone, Debug)]
pub struct RichelotTower {
    pub disks: DiskTriple,
    pub levels: Vec<TowerLevel>,
    pub steps: Vec<RichelotStep>,
    pub limit: DegenerateCurve,
    /// Scale used to make the stopping rule relative.
    pub root_scale: f64,
}

impl RichelotTower {
    pub fn f(&self) -> &CPoly {
        &self.levels[0].f
    }

    /// Largest scaled in-disk gap at every level.
    pub fn gap_history(&self) -> Vec<f64> {
        self.levels
            .iter()
            .map(|l| scaled_gap(&self.disks, l.gaps, self.root_scale))
            .collect()
    }
}

fn scaled_gap(disks: &DiskTriple, gaps: [f64; 3], scale: f64) -> f64 {
    (0..3)
        .map(|j| {
            if disks.get(j).is_exterior() {
                gaps[j]
            } else {
                gaps[j] / (1.0 + scale)
            }
        })
        .fold(0.0, f64::max)
}

/// The symmetric matrix attached to a factorization `f = p q r`.
pub fn h_matrix(p: &CPoly, q: &CPoly, r: &CPoly) -> Result<Matrix2<C64>> {
    let d = delta(p, q, r)?;
    if d.norm() == 0.0 {
        return Err(Error::domain("richelot", "delta vanishes"));
    }
    let ph = bracket(q, r)?;
    let qh = bracket(r, p)?;
    let rh = bracket(p, q)?;
    let (p, q, r) = (p.padded(), q.padded(), r.padded());
    let (ph, qh, rh) = (ph.padded(), qh.padded(), rh.padded());
    let mu = |j: usize, k: usize, l: usize, m: usize| {
        ph[j] * p[k] * p[l] * q[m] * r[m]
            + qh[j] * q[k] * q[l] * p[m] * r[m]
            + rh[j] * r[k] * r[l] * p[m] * q[m]
    };
    let psi0 = mu(0, 0, 0, 2) * 4.0 + mu(2, 1, 1, 0) + mu(2, 0, 0, 1);
    let psi2 = -mu(2, 2, 2, 0) * 4.0 - mu(0, 1, 1, 2) - mu(0, 2, 2, 1);
    let h11 = p[0] * q[1] * r[1] + p[1] * q[0] * r[1] + p[1] * q[1] * r[0] + psi0 / d;
    let h22 = p[2] * q[1] * r[1] + p[1] * q[2] * r[1] + p[1] * q[1] * r[2] - psi2 / d;
    let h12 = -mu(1, 0, 2, 1) / d;
    Ok(Matrix2::new(h11, h12, h12, h22) / c(8.0, 0.0))
}

fn step_from_factors(f: CPoly, factors: [CPoly; 3], f_hat: Option<CPoly>) -> Result<RichelotStep> {
    let [p1, p2, p3] = &factors;
    let d = delta(p1, p2, p3)?;
    if d.norm() == 0.0 {
        return Err(Error::domain(
            "richelot",
            "delta vanished for a subordinate factorization",
        ));
    }
    let f_hat = match f_hat {
        Some(g) => g,
        None => bracket(p2, p3)?
            .mul(&bracket(p3, p1)?)?
            .mul(&bracket(p1, p2)?)?
            .scale(c(0.25, 0.0) / d),
    };
    let h = h_matrix(p1, p2, p3)?;
    Ok(RichelotStep {
        f,
        factors,
        delta: d,
        f_hat,
        h_matrix: h,
    })
}

/// A single step computed directly from the coefficients of `f`.
pub fn richelot_step(f: &CPoly, disks: &DiskTriple) -> Result<RichelotStep> {
    let factors = factor_by_disks(f, disks)?;
    step_from_factors(f.clone(), factors, None)
}

/// Root pair in the working coordinate.
#[derive(Clone, Copy, Debug)]
struct Pair {
    mid: C64,
    half: C64,
}

impl Pair {
    fn roots(&self) -> [C64; 2] {
        [self.mid + self.half, self.mid - self.half]
    }

    fn monic(&self) -> CPoly {
        let [a, b] = self.roots();
        CPoly::from_roots(c(1.0, 0.0), &[a, b]).expect("degree 2")
    }
}

struct Frame {
    map: Moebius,
    inv: Moebius,
}

impl Frame {
    fn to_original(&self, xi: C64) -> SpherePoint {
        self.inv.apply(SpherePoint::Finite(xi))
    }

    /// Scalar `gamma` with `(cx+d)^6 f~(T x) = lc~ * prod gamma_k * prod (x - x_k)`.
    fn gamma(&self, xi: C64, original: SpherePoint) -> C64 {
        match original {
            SpherePoint::Finite(_) => self.map.a - xi * self.map.c,
            SpherePoint::Infinity => self.map.b - xi * self.map.d,
        }
    }

    fn gap(&self, exterior: bool, pair: &Pair) -> f64 {
        let [x1, x2] = pair.roots();
        let diff = self.inv.image_difference(x1, x2, pair.half * 2.0);
        let (o1, o2) = (self.to_original(x1), self.to_original(x2));
        if !exterior {
            return diff.norm();
        }
        match (o1, o2) {
            (SpherePoint::Finite(a), SpherePoint::Finite(b)) => {
                2.0 * diff.norm() / ((1.0 + a.norm_sqr()) * (1.0 + b.norm_sqr())).sqrt()
            }
            _ => o1.chordal(o2),
        }
    }
}

fn choose_frame(disks: &DiskTriple, rs: &[SpherePoint]) -> Result<Frame> {
    let Some(ext) = disks.disks().iter().find(|d| d.is_exterior()) else {
        if rs.iter().any(|r| r.is_infinite()) {
            return Err(Error::domain(
                "richelot",
                "root at infinity but no exterior disk",
            ));
        }
        return Ok(Frame {
            map: Moebius::identity(),
            inv: Moebius::identity(),
        });
    };
    let (cen, rad) = (ext.center(), ext.radius());
    let mut best: Option<(f64, C64)> = None;
    for ring in [0.0, 0.3, 0.6, 0.9] {
        let count = if ring == 0.0 { 1 } else { 24 };
        for k in 0..count {
            let x0 =
                cen + C64::from_polar(ring * rad, std::f64::consts::TAU * k as f64 / count as f64);
            let p = SpherePoint::Finite(x0);
            if disks.locate(p).is_some() {
                continue;
            }
            let to_disks = disks
                .disks()
                .iter()
                .filter(|d| !d.is_exterior())
                .map(|d| (x0 - d.center()).norm() - d.radius())
                .fold(f64::INFINITY, f64::min);
            let to_roots = rs
                .iter()
                .filter_map(|r| r.finite())
                .map(|r| (r - x0).norm())
                .fold(f64::INFINITY, f64::min);
            let score = to_disks.min(to_roots);
            if best.is_none_or(|b| score > b.0) {
                best = Some((score, x0));
            }
        }
    }
    let (_, x0) = best.ok_or_else(|| {
        Error::domain(
            "richelot",
            "no point outside the disks for the working frame",
        )
    })?;
    let i = c(0.0, 1.0);
    let map = Moebius::new(c(0.0, 0.0), i, i, -i * x0)?;
    Ok(Frame {
        map,
        inv: map.inverse(),
    })
}

struct WorkState {
    pairs: [Pair; 3],
    lead: C64,
}

impl WorkState {
    fn factors(&self) -> [CPoly; 3] {
        [
            self.pairs[0].monic(),
            self.pairs[1].monic(),
            self.pairs[2].monic().scale(self.lead),
        ]
    }
}

/// Original-coordinate factors with `p1`, `p2` normalized and `p3` carrying the rest.
fn original_factors(frame: &Frame, disks: &DiskTriple, work: &[CPoly; 3]) -> Result<[CPoly; 3]> {
    let mut ps = Vec::with_capacity(3);
    for w in work {
        ps.push(moebius_conjugate(&frame.map, w)?);
    }
    let mut scale = c(1.0, 0.0);
    for j in 0..2 {
        let s = if disks.get(j).is_exterior() {
            *ps[j]
                .coeffs()
                .iter()
                .max_by(|a, b| a.norm().total_cmp(&b.norm()))
                .expect("nonzero")
        } else {
            ps[j].coeff(2)
        };
        ps[j] = ps[j].scale(c(1.0, 0.0) / s);
        scale *= s;
    }
    ps[2] = ps[2].scale(scale);
    Ok([ps[0].clone(), ps[1].clone(), ps[2].clone()])
}

fn assign(b: &CPoly, j: usize, k: usize, frame: &Frame, disks: &DiskTriple) -> Result<(C64, C64)> {
    let [r, s] = quadratic_roots(b)?;
    let (Some(r), Some(s)) = (r.finite(), s.finite()) else {
        return Err(Error::convergence(
            "richelot",
            "bracket root left the working chart",
        ));
    };
    let depth = |x: C64, d: usize| disks.get(d).depth(frame.to_original(x));
    let keep = depth(r, j).max(depth(s, k));
    let swap = depth(s, j).max(depth(r, k));
    Ok(if keep <= swap { (r, s) } else { (s, r) })
}

fn advance(state: &WorkState, frame: &Frame, disks: &DiskTriple) -> Result<WorkState> {
    let [p1, p2, p3] = state.factors();
    let d = delta(&p1, &p2, &p3)?;
    if d.norm() == 0.0 {
        return Err(Error::domain("richelot", "delta vanished along the tower"));
    }
    let b12 = bracket(&p1, &p2)?;
    let b23 = bracket(&p2, &p3)?;
    let b31 = bracket(&p3, &p1)?;
    let (l12, l23, l31) = (b12.coeff(2), b23.coeff(2), b31.coeff(2));
    let (a1, a2) = assign(&b12, 0, 1, frame, disks)?;
    let (b2, b3) = assign(&b23, 1, 2, frame, disks)?;
    let (c3, c1) = assign(&b31, 2, 0, frame, disks)?;
    let [h1, h2, h3] = [
        state.pairs[0].half,
        state.pairs[1].half,
        state.pairs[2].half,
    ];
    let dd = d * d * 4.0;
    let diff1 = dd * h1 * h1 / (l12 * l12 * l31 * l31 * (a1 - c3) * (a2 - c1) * (a2 - c3));
    let diff2 = dd * h2 * h2 / (l12 * l12 * l23 * l23 * (a1 - b2) * (a1 - b3) * (a2 - b3));
    let diff3 = dd * state.lead * state.lead * h3 * h3
        / (l23 * l23 * l31 * l31 * (b2 - c3) * (b2 - c1) * (b3 - c1));
    let pairs = [
        Pair {
            mid: (a1 + c1) * 0.5,
            half: diff1 * 0.5,
        },
        Pair {
            mid: (a2 + b2) * 0.5,
            half: diff2 * 0.5,
        },
        Pair {
            mid: (b3 + c3) * 0.5,
            half: diff3 * 0.5,
        },
    ];
    Ok(WorkState {
        pairs,
        lead: l12 * l23 * l31 / (d * 4.0),
    })
}

fn level_of(
    state: &WorkState,
    frame: &Frame,
    disks: &DiskTriple,
    f: Option<CPoly>,
) -> Result<(TowerLevel, [CPoly; 3])> {
    let factors = original_factors(frame, disks, &state.factors())?;
    let f = match f {
        Some(f) => f,
        None => factors[0].mul(&factors[1])?.mul(&factors[2])?,
    };
    let mut roots = [[SpherePoint::Infinity; 2]; 3];
    let mut gaps = [0.0; 3];
    for j in 0..3 {
        let [x1, x2] = state.pairs[j].roots();
        roots[j] = [frame.to_original(x1), frame.to_original(x2)];
        gaps[j] = frame.gap(disks.get(j).is_exterior(), &state.pairs[j]);
    }
    let leading = f.leading();
    Ok((
        TowerLevel {
            f,
            roots,
            gaps,
            leading,
        },
        factors,
    ))
}

fn limit_of(state: &WorkState, frame: &Frame) -> Result<DegenerateCurve> {
    let mids: Vec<C64> = state.pairs.iter().map(|p| p.mid).collect();
    let mut t: Vec<SpherePoint> = mids.iter().map(|&m| frame.to_original(m)).collect();
    for j in 0..3 {
        if let SpherePoint::Finite(tj) = t[j] {
            let others = (0..3)
                .filter(|&k| k != j)
                .filter_map(|k| t[k].finite())
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            if tj.norm() > INFINITE_ROOT_RATIO * (1.0 + others) {
                t[j] = SpherePoint::Infinity;
            }
        }
    }
    let mut cc = state.lead;
    for j in 0..3 {
        let g = frame.gamma(mids[j], t[j]);
        cc *= g * g;
    }
    DegenerateCurve::new(cc, [t[0], t[1], t[2]])
}

/// Iterates the disk-respecting Richelot step until every in-disk root gap is below `tol`.
pub fn iterate_tower(
    f: &CPoly,
    disks: &DiskTriple,
    tol: f64,
    max_iter: usize,
) -> Result<RichelotTower> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Input("tower tolerance must be positive".into()));
    }
    let rs = roots(f)?;
    let groups = split_roots(&rs, disks).ok_or_else(|| {
        Error::domain(
            "richelot",
            "polynomial is not subordinate to the disk triple",
        )
    })?;
    let root_scale = rs
        .iter()
        .filter_map(|r| r.finite())
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let frame = choose_frame(disks, &rs)?;
    let mut lead = f.leading();
    let mut pairs = [Pair {
        mid: c(0.0, 0.0),
        half: c(0.0, 0.0),
    }; 3];
    for (j, g) in groups.iter().enumerate() {
        let mut xi = [c(0.0, 0.0); 2];
        for k in 0..2 {
            xi[k] = frame.map.apply(g[k]).finite().ok_or_else(|| {
                Error::domain("richelot", "working frame maps a root to infinity")
            })?;
            lead /= frame.gamma(xi[k], g[k]);
        }
        pairs[j] = Pair {
            mid: (xi[0] + xi[1]) * 0.5,
            half: (xi[0] - xi[1]) * 0.5,
        };
    }
    let mut state = WorkState { pairs, lead };
    let (level0, mut factors) = level_of(&state, &frame, disks, Some(f.clone()))?;
    let mut levels = vec![level0];
    let mut steps = Vec::new();
    loop {
        let last = levels.last().expect("nonempty");
        if scaled_gap(disks, last.gaps, root_scale) < tol {
            break;
        }
        if steps.len() >= max_iter {
            let hist: Vec<String> = levels
                .iter()
                .map(|l| format!("{:.3e}", scaled_gap(disks, l.gaps, root_scale)))
                .collect();
            return Err(Error::convergence(
                "richelot",
                format!(
                    "tower did not reach tol {tol:.1e} in {max_iter} steps; gap history [{}]",
                    hist.join(", ")
                ),
            ));
        }
        let next = advance(&state, &frame, disks)?;
        let (level, next_factors) = level_of(&next, &frame, disks, None)?;
        steps.push(step_from_factors(
            last.f.clone(),
            factors,
            Some(level.f.clone()),
        )?);
        levels.push(level);
        factors = next_factors;
        state = next;
    }
    let limit = limit_of(&state, &frame)?;
    Ok(RichelotTower {
        disks: *disks,
        levels,
        steps,
        limit,
        root_scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpoly::{discr, res};
    use crate::disks::{find_disks, is_subordinate, Disk};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fin(x: f64, y: f64, r: f64) -> Disk {
        Disk::Finite {
            center: c(x, y),
            radius: r,
        }
    }

    fn triple_double() -> CPoly {
        CPoly::from_roots(
            c(1.0, 0.0),
            &[
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(1.0, 0.0),
                c(1.0, 0.0),
                c(-1.0, 0.0),
                c(-1.0, 0.0),
            ],
        )
        .unwrap()
    }

    fn random_clustered(rng: &mut ChaCha8Rng, spread: f64) -> CPoly {
        let centers = [c(0.0, 0.0), c(3.0, 0.0), c(1.5, 2.5)];
        let mut rs = Vec::new();
        for cen in centers {
            for _ in 0..2 {
                rs.push(cen + c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * spread);
            }
        }
        CPoly::from_roots(c(0.7, 0.3), &rs).unwrap()
    }

    #[test]
    fn fixed_point_of_triple_double_root() {
        let g = triple_double();
        let d =
            DiskTriple::new(fin(0.0, 0.0, 0.4), fin(1.0, 0.0, 0.4), fin(-1.0, 0.0, 0.4)).unwrap();
        let s = richelot_step(&g, &d).unwrap();
        assert!((s.delta - c(4.0, 0.0)).norm() < 1e-7);
        assert!(s.f_hat.rel_diff(&g) < 1e-11, "{}", s.f_hat.rel_diff(&g));
    }

    #[test]
    fn brackets_of_fixed_point() {
        // the unnormalized product of brackets is 16 x^2 (x-1)^2 (x+1)^2
        let p = CPoly::from_real(&[0.0, 0.0, 1.0]).unwrap();
        let q = CPoly::from_real(&[1.0, -2.0, 1.0]).unwrap();
        let r = CPoly::from_real(&[1.0, 2.0, 1.0]).unwrap();
        let prod = bracket(&q, &r)
            .unwrap()
            .mul(&bracket(&r, &p).unwrap())
            .unwrap()
            .mul(&bracket(&p, &q).unwrap())
            .unwrap();
        assert!(prod.rel_diff(&triple_double().scale(c(16.0, 0.0))) < 1e-15);
    }

    #[test]
    fn h_matrix_is_gauge_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_clustered(&mut rng, 0.8);
        let d = find_disks(&f).unwrap();
        let [p, q, r] = factor_by_disks(&f, &d).unwrap();
        let h = h_matrix(&p, &q, &r).unwrap();
        let (al, be) = (c(1.3, -0.4), c(-0.2, 0.9));
        let ga = c(1.0, 0.0) / (al * be);
        let h2 = h_matrix(&p.scale(al), &q.scale(be), &r.scale(ga)).unwrap();
        assert!((h - h2).norm() < 1e-11 * h.norm());
    }

    #[test]
    fn step_output_is_subordinate_and_matches_brackets() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let f = random_clustered(&mut rng, 1.0);
            let d = find_disks(&f).unwrap();
            let s = richelot_step(&f, &d).unwrap();
            assert!(is_subordinate(&s.f_hat, &d).unwrap());
            assert!(crate::cpoly::is_admissible(&s.f_hat));
            let t = iterate_tower(&f, &d, 1e-13, 40).unwrap();
            assert!(t.levels[1].f.rel_diff(&s.f_hat) < 1e-11);
        }
    }

    #[test]
    fn double_root_persists() {
        let a = c(0.1, 0.05);
        let f = CPoly::from_roots(
            c(1.0, 0.0),
            &[a, a, c(2.0, 0.1), c(2.3, -0.2), c(0.8, 2.0), c(1.1, 2.2)],
        )
        .unwrap();
        let d = find_disks(&f).unwrap();
        let mut g = f;
        for _ in 0..4 {
            let s = richelot_step(&g, &d).unwrap();
            g = s.f_hat;
            let rs = roots(&g).unwrap();
            let k = d.locate(SpherePoint::Finite(a)).unwrap();
            let near: Vec<_> = rs.iter().filter(|r| d.locate(**r) == Some(k)).collect();
            for r in near {
                assert!((r.finite().unwrap() - a).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn quadratic_convergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = random_clustered(&mut rng, 1.0);
        let d = find_disks(&f).unwrap();
        let t = iterate_tower(&f, &d, 1e-60, 40).unwrap();
        let h = t.gap_history();
        assert!(t.steps.len() <= 12, "{h:?}");
        let n = h.len();
        for k in n - 3..n - 1 {
            let slope = h[k + 1].ln() / h[k].ln();
            assert!(slope > 1.7 && slope < 2.3, "{h:?}");
        }
    }

    #[test]
    fn leading_coefficient_recursion() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let f = random_clustered(&mut rng, 0.8);
        let d = find_disks(&f).unwrap();
        let t = iterate_tower(&f, &d, 1e-13, 40).unwrap();
        for (k, s) in t.steps.iter().enumerate() {
            let lc = s.factors[2].leading();
            let monic: Vec<CPoly> = s
                .factors
                .iter()
                .map(|p| p.scale(c(1.0, 0.0) / p.leading()))
                .collect();
            let sums: Vec<C64> = monic.iter().map(|p| -p.coeff(1)).collect();
            let dm = delta(&monic[0], &monic[1], &monic[2]).unwrap();
            let q = (sums[0] - sums[1]) * (sums[2] - sums[0]) * (sums[1] - sums[2]) / (dm * 4.0);
            let ratio = t.levels[k + 1].leading / lc;
            assert!((ratio - q).norm() < 1e-11 * q.norm());
        }
    }

    #[test]
    fn agm_substructure() {
        // p3 constant: the third pair sits at infinity
        let p1 = CPoly::from_roots(c(1.0, 0.0), &[c(1.0, 0.2), c(2.0, -0.1)]).unwrap();
        let p2 = CPoly::from_roots(c(1.0, 0.0), &[c(-1.2, 0.1), c(-2.5, 0.3)]).unwrap();
        let disks = DiskTriple::new(
            fin(1.5, 0.0, 1.0),
            fin(-1.8, 0.0, 1.0),
            Disk::Exterior {
                center: c(0.0, 0.0),
                radius: 5.0,
            },
        )
        .unwrap();
        let mut f = p1.mul(&p2).unwrap();
        let mut pairs: Vec<[[C64; 2]; 2]> = Vec::new();
        for _ in 0..3 {
            let s = richelot_step(&f, &disks).unwrap();
            let [q1, q2, _] = &s.factors;
            // e1 is the midpoint of the previous pair, e2 the root of [p1, p2] in the same disk
            let b = bracket(q1, q2).unwrap();
            let rs: Vec<C64> = quadratic_roots(&b)
                .unwrap()
                .iter()
                .map(|r| r.finite().unwrap())
                .collect();
            let (r1, r2) = if rs[0].re > 0.0 {
                (rs[0], rs[1])
            } else {
                (rs[1], rs[0])
            };
            pairs.push([[-q1.coeff(1) * 0.5, r1], [-q2.coeff(1) * 0.5, r2]]);
            f = s.f_hat;
        }
        let ab: Vec<(C64, C64)> = pairs
            .iter()
            .map(|[[e11, e21], [e12, e22]]| {
                (
                    ((e11 - e22) * (e21 - e12)).sqrt(),
                    ((e11 - e12) * (e21 - e22)).sqrt(),
                )
            })
            .collect();
        for k in 0..ab.len() - 1 {
            let (a, b) = ab[k];
            let (a1, b1) = ab[k + 1];
            assert!((a1 - (a + b) * 0.5).norm() < 1e-11 * a1.norm(), "{ab:?}");
            assert!((b1 * b1 - a * b).norm() < 1e-11 * (a * b).norm());
        }
    }

    #[test]
    fn already_degenerate_has_no_steps() {
        let g = triple_double();
        let d =
            DiskTriple::new(fin(0.0, 0.0, 0.4), fin(1.0, 0.0, 0.4), fin(-1.0, 0.0, 0.4)).unwrap();
        let t = iterate_tower(&g, &d, 1e-6, 40).unwrap();
        assert!(t.steps.is_empty());
        assert!((t.limit.c - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn quintic_tower_has_finite_limit() {
        let w = CPoly::from_real(&[0.3, -1.0, 0.2, 0.5, 0.0, 4.0]).unwrap();
        let d = find_disks(&w).unwrap();
        let t = iterate_tower(&w, &d, 1e-13, 40).unwrap();
        assert!(t.steps.len() <= 10);
        let g = t.limit.poly().unwrap();
        let last = &t.levels.last().unwrap().f;
        assert!(g.rel_diff(last) < 1e-9, "{g:?} {last:?}");
    }

    #[test]
    fn resultant_identities_used_by_the_driver() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut rp = || {
            CPoly::new(
                (0..3)
                    .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                    .collect(),
            )
            .unwrap()
        };
        let (p, q, r) = (rp(), rp(), rp());
        let d = delta(&p, &q, &r).unwrap();
        let lhs = res(&bracket(&r, &p).unwrap(), &bracket(&p, &q).unwrap()).unwrap();
        assert!((lhs - d * d * discr(&p).unwrap()).norm() < 1e-13);
    }
}
