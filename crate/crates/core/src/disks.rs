//! Disks on the Riemann sphere and root subordination.

use serde::{Deserialize, Serialize};

use crate::cpoly::{roots, CPoly, SpherePoint, C64};
use crate::error::{Error, Result};

/// Minimal separation between disks of a triple.
pub const DISJOINT_MARGIN: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Disk {
    /// `|x - center| < radius`.
    Finite { center: C64, radius: f64 },
    /// `|x - center| > radius`, together with infinity.
    Exterior { center: C64, radius: f64 },
}

impl Disk {
    pub fn center(&self) -> C64 {
        match *self {
            Disk::Finite { center, .. } | Disk::Exterior { center, .. } => center,
        }
    }

    pub fn radius(&self) -> f64 {
        match *self {
            Disk::Finite { radius, .. } | Disk::Exterior { radius, .. } => radius,
        }
    }

    pub fn is_exterior(&self) -> bool {
        matches!(self, Disk::Exterior { .. })
    }

    /// Normalized depth: below 1 inside, 0 at the deepest point.
    pub fn depth(&self, p: SpherePoint) -> f64 {
        match (*self, p) {
            (Disk::Finite { .. }, SpherePoint::Infinity) => f64::INFINITY,
            (Disk::Finite { center, radius }, SpherePoint::Finite(z)) => {
                (z - center).norm() / radius
            }
            (Disk::Exterior { .. }, SpherePoint::Infinity) => 0.0,
            (Disk::Exterior { center, radius }, SpherePoint::Finite(z)) => {
                radius / (z - center).norm()
            }
        }
    }

    pub fn contains(&self, p: SpherePoint) -> bool {
        self.depth(p) < 1.0
    }
}

/// Three pairwise disjoint disks, at most one of them exterior.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[Disk; 3]", into = "[Disk; 3]")]
pub struct DiskTriple {
    disks: [Disk; 3],
}

impl TryFrom<[Disk; 3]> for DiskTriple {
    type Error = Error;
    fn try_from(disks: [Disk; 3]) -> Result<Self> {
        DiskTriple::new(disks[0], disks[1], disks[2])
    }
}

impl From<DiskTriple> for [Disk; 3] {
    fn from(t: DiskTriple) -> Self {
        t.disks
    }
}

fn separation(a: &Disk, b: &Disk) -> f64 {
    match (a, b) {
        (
            Disk::Finite {
                center: c1,
                radius: r1,
            },
            Disk::Finite {
                center: c2,
                radius: r2,
            },
        ) => (c1 - c2).norm() - r1 - r2,
        (
            Disk::Finite {
                center: c1,
                radius: r1,
            },
            Disk::Exterior {
                center: c2,
                radius: r2,
            },
        )
        | (
            Disk::Exterior {
                center: c2,
                radius: r2,
            },
            Disk::Finite {
                center: c1,
                radius: r1,
            },
        ) => r2 - (c1 - c2).norm() - r1,
        _ => f64::NEG_INFINITY,
    }
}

impl DiskTriple {
    pub fn new(d1: Disk, d2: Disk, d3: Disk) -> Result<Self> {
        let disks = [d1, d2, d3];
        for d in &disks {
            let r = d.radius();
            if !(r > 0.0 && r.is_finite()) || !d.center().norm().is_finite() {
                return Err(Error::domain(
                    "disks",
                    "disk radius must be positive and finite",
                ));
            }
        }
        for i in 0..3 {
            for j in i + 1..3 {
                let scale = 1.0 + disks[i].center().norm().max(disks[j].center().norm());
                if separation(&disks[i], &disks[j]) <= DISJOINT_MARGIN * scale {
                    return Err(Error::domain(
                        "disks",
                        format!("disks {} and {} are not disjoint", i + 1, j + 1),
                    ));
                }
            }
        }
        Ok(DiskTriple { disks })
    }

    pub fn disks(&self) -> &[Disk; 3] {
        &self.disks
    }

    pub fn get(&self, j: usize) -> &Disk {
        &self.disks[j]
    }

    /// Index of the disk that contains `p`, if any.
    pub fn locate(&self, p: SpherePoint) -> Option<usize> {
        (0..3).find(|&j| self.disks[j].contains(p))
    }
}

/// Sphere roots of `f` split by disk; `None` unless every disk holds exactly two.
pub fn split_roots(rs: &[SpherePoint], d: &DiskTriple) -> Option<[[SpherePoint; 2]; 3]> {
    let mut groups: [Vec<SpherePoint>; 3] = Default::default();
    for &r in rs {
        groups[d.locate(r)?].push(r);
    }
    if groups.iter().any(|g| g.len() != 2) {
        return None;
    }
    Some([
        [groups[0][0], groups[0][1]],
        [groups[1][0], groups[1][1]],
        [groups[2][0], groups[2][1]],
    ])
}

pub fn is_subordinate(f: &CPoly, d: &DiskTriple) -> Result<bool> {
    Ok(split_roots(&roots(f)?, d).is_some())
}

/// Factors `f = p1 p2 p3` with the roots of `p_j` in disk `j`; `p1`, `p2` monic.
pub fn factor_by_disks(f: &CPoly, d: &DiskTriple) -> Result<[CPoly; 3]> {
    let groups = split_roots(&roots(f)?, d).ok_or_else(|| {
        Error::domain("disks", "polynomial is not subordinate to the disk triple")
    })?;
    let one = C64::new(1.0, 0.0);
    let mut out = Vec::with_capacity(3);
    for (j, g) in groups.iter().enumerate() {
        let finite: Vec<C64> = g.iter().filter_map(|r| r.finite()).collect();
        let lead = if j == 2 { f.leading() } else { one };
        out.push(CPoly::from_roots(lead, &finite)?);
    }
    Ok([out[0].clone(), out[1].clone(), out[2].clone()])
}

type V3 = [f64; 3];

fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn normalize(a: V3) -> V3 {
    let n = dot(a, a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

fn cross(a: V3, b: V3) -> V3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn angle(a: V3, b: V3) -> f64 {
    // atan2 form stays accurate for nearly parallel vectors
    let c = cross(a, b);
    dot(c, c).sqrt().atan2(dot(a, b))
}

/// Center direction and angular radius of the smallest cap holding both points.
fn pair_cap(a: V3, b: V3) -> (V3, f64) {
    let s = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
    let n = if dot(s, s) < 1e-24 {
        let helper = if a[0].abs() < 0.9 {
            [1.0, 0.0, 0.0]
        } else {
            [0.0, 1.0, 0.0]
        };
        normalize(cross(a, helper))
    } else {
        normalize(s)
    };
    (n, angle(a, n).max(angle(b, n)))
}

fn perfect_matchings(n: usize) -> Vec<Vec<(usize, usize)>> {
    fn rec(rest: &[usize], acc: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if rest.is_empty() {
            out.push(acc.clone());
            return;
        }
        let first = rest[0];
        for k in 1..rest.len() {
            let remaining: Vec<usize> = rest[1..]
                .iter()
                .copied()
                .filter(|&x| x != rest[k])
                .collect();
            acc.push((first, rest[k]));
            rec(&remaining, acc, out);
            acc.pop();
        }
    }
    let idx: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    rec(&idx, &mut Vec::new(), &mut out);
    out
}

fn circumcircle(z1: C64, z2: C64, z3: C64) -> Option<(C64, f64)> {
    let w = (z3 - z1) / (z2 - z1);
    let den = w - w.conj();
    if den.norm() < 1e-14 {
        return None;
    }
    let c = z1 + (z2 - z1) * (w - w.norm_sqr()) / den;
    Some((c, (z1 - c).norm()))
}

/// Plane disk of the spherical cap with center `n` and angular radius `theta`.
fn cap_to_disk(n: V3, theta: f64) -> Option<Disk> {
    let north = [0.0, 0.0, 1.0];
    let helper = if n[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let u = normalize(cross(n, helper));
    let v = cross(n, u);
    let boundary = |phi: f64| {
        let (s, c) = phi.sin_cos();
        let p = [
            theta.cos() * n[0] + theta.sin() * (c * u[0] + s * v[0]),
            theta.cos() * n[1] + theta.sin() * (c * u[1] + s * v[1]),
            theta.cos() * n[2] + theta.sin() * (c * u[2] + s * v[2]),
        ];
        SpherePoint::from_sphere(p).finite()
    };
    let third = std::f64::consts::TAU / 3.0;
    let (center, radius) = circumcircle(boundary(0.0)?, boundary(third)?, boundary(2.0 * third)?)?;
    if angle(n, north) < theta {
        Some(Disk::Exterior { center, radius })
    } else {
        Some(Disk::Finite { center, radius })
    }
}

/// Heuristic disk triple: best of the 15 root pairings by diameter-to-gap ratio on the sphere.
pub fn find_disks(f: &CPoly) -> Result<DiskTriple> {
    let rs = roots(f)?;
    let pts: Vec<V3> = rs.iter().map(|r| r.to_sphere()).collect();
    let mut best: Option<(f64, Vec<(V3, f64)>, Vec<f64>)> = None;
    for m in perfect_matchings(6) {
        let caps: Vec<(V3, f64)> = m.iter().map(|&(i, j)| pair_cap(pts[i], pts[j])).collect();
        let mut gaps = [f64::INFINITY; 3];
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    let g = angle(caps[i].0, caps[j].0) - caps[i].1 - caps[j].1;
                    gaps[i] = gaps[i].min(g);
                }
            }
        }
        let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
        if min_gap <= 0.0 {
            continue;
        }
        let max_rad = caps.iter().map(|c| c.1).fold(0.0, f64::max);
        let score = max_rad / min_gap;
        if best.as_ref().is_none_or(|b| score < b.0) {
            best = Some((score, caps, gaps.to_vec()));
        }
    }
    let (_, caps, gaps) = best.ok_or_else(|| {
        Error::domain(
            "disks",
            "no separable root pairing found; supply disks manually with --disks",
        )
    })?;
    let north = [0.0, 0.0, 1.0];
    let mut disks = Vec::with_capacity(3);
    for (k, (n, rho)) in caps.iter().enumerate() {
        // keep the cap boundary away from the north pole so the plane circle stays well conditioned
        let theta = [0.4, 0.3, 0.2, 0.35, 0.25]
            .iter()
            .map(|s| rho + s * gaps[k])
            .find(|th| (angle(*n, north) - th).abs() > 1e-2)
            .unwrap_or(rho + 0.4 * gaps[k]);
        disks.push(cap_to_disk(*n, theta).ok_or_else(|| Error::domain("disks", "degenerate cap"))?);
    }
    disks.sort_by_key(|d| d.is_exterior());
    let triple = DiskTriple::new(disks[0], disks[1], disks[2]).map_err(|e| {
        Error::domain(
            "disks",
            format!("heuristic produced invalid disks ({e}); supply disks manually with --disks"),
        )
    })?;
    if split_roots(&rs, &triple).is_none() {
        return Err(Error::domain(
            "disks",
            "heuristic disks do not subordinate the roots; supply disks manually with --disks",
        ));
    }
    Ok(triple)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpoly::c;

    fn fin(x: f64, y: f64, r: f64) -> Disk {
        Disk::Finite {
            center: c(x, y),
            radius: r,
        }
    }

    fn poly_from_roots(rs: &[f64]) -> CPoly {
        let v: Vec<C64> = rs.iter().map(|&x| c(x, 0.0)).collect();
        CPoly::from_roots(c(1.0, 0.0), &v).unwrap()
    }

    #[test]
    fn membership() {
        let e = Disk::Exterior {
            center: c(0.0, 0.0),
            radius: 2.0,
        };
        assert!(e.contains(SpherePoint::Infinity));
        assert!(!fin(0.0, 0.0, 1.0).contains(SpherePoint::Infinity));
        assert!(e.contains(SpherePoint::Finite(c(3.0, 0.0))));
        assert!(!e.contains(SpherePoint::Finite(c(1.0, 0.0))));
    }

    #[test]
    fn subordination_examples() {
        let g = poly_from_roots(&[0.0, 0.0, 1.0, 1.0, -1.0, -1.0]);
        let d =
            DiskTriple::new(fin(0.0, 0.0, 0.5), fin(1.0, 0.0, 0.4), fin(-1.0, 0.0, 0.4)).unwrap();
        assert!(is_subordinate(&g, &d).unwrap());
        let d =
            DiskTriple::new(fin(0.0, 0.0, 0.5), fin(1.0, 0.0, 0.4), fin(5.0, 0.0, 0.4)).unwrap();
        assert!(!is_subordinate(&g, &d).unwrap());
        // x^5 - x: 0 shares no disk with another root here
        let q = CPoly::from_real(&[0.0, -1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let d = DiskTriple::new(
            fin(0.0, 0.0, 0.1),
            fin(0.6, 0.6, 0.73),
            fin(-0.6, -0.6, 0.73),
        )
        .unwrap();
        assert!(!is_subordinate(&q, &d).unwrap());
    }

    #[test]
    fn overlapping_disks_rejected() {
        assert!(
            DiskTriple::new(fin(0.0, 0.0, 1.0), fin(1.5, 0.0, 1.0), fin(5.0, 0.0, 1.0)).is_err()
        );
        let e = Disk::Exterior {
            center: c(0.0, 0.0),
            radius: 1.0,
        };
        assert!(DiskTriple::new(e, e, fin(0.0, 0.0, 0.1)).is_err());
    }

    #[test]
    fn fifteen_matchings() {
        assert_eq!(perfect_matchings(6).len(), 15);
    }

    #[test]
    fn heuristic_on_clusters() {
        let f = poly_from_roots(&[0.0, 0.1, 1.0, 1.1, -1.0, -0.9]);
        let d = find_disks(&f).unwrap();
        assert!(is_subordinate(&f, &d).unwrap());
        let groups = split_roots(&roots(&f).unwrap(), &d).unwrap();
        for g in groups {
            let (a, b) = (g[0].finite().unwrap(), g[1].finite().unwrap());
            assert!((a - b).norm() < 0.11);
        }
    }

    #[test]
    fn heuristic_on_hexagon_and_quintic() {
        let hex = CPoly::from_real(&[-1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(is_subordinate(&hex, &find_disks(&hex).unwrap()).unwrap());
        let w = CPoly::from_real(&[0.3, -1.0, 0.2, 0.5, 0.0, 4.0]).unwrap();
        let d = find_disks(&w).unwrap();
        assert!(is_subordinate(&w, &d).unwrap());
        assert!(d.get(2).is_exterior());
        let [_, _, p3] = factor_by_disks(&w, &d).unwrap();
        assert_eq!(p3.degree(), Some(1));
    }

    #[test]
    fn factors_multiply_back() {
        let f = CPoly::from_real(&[0.7, -0.2, 1.1, 0.4, -0.9, 0.3, 1.5]).unwrap();
        let d = find_disks(&f).unwrap();
        let [p1, p2, p3] = factor_by_disks(&f, &d).unwrap();
        assert_eq!(p1.leading(), c(1.0, 0.0));
        let prod = p1.mul(&p2).unwrap().mul(&p3).unwrap();
        assert!(prod.rel_diff(&f) < 1e-12);
    }

    #[test]
    fn disks_json_shape() {
        let d = DiskTriple::new(
            fin(0.0, 0.0, 0.5),
            fin(1.0, 0.0, 0.4),
            Disk::Exterior {
                center: c(0.0, 0.0),
                radius: 3.0,
            },
        )
        .unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert!(s.contains("\"kind\":\"exterior\""));
        assert!(s.contains("\"center\":[0.0,0.0]"));
        let back: DiskTriple = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
    }
}
