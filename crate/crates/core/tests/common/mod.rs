#![allow(dead_code)]

use g2kleinian::cpoly::c;
use g2kleinian::disks::find_disks;
use g2kleinian::kleinian::{EvalOptions, Evaluator};
use g2kleinian::periods::compute_periods;
use g2kleinian::richelot::{iterate_tower, RichelotTower, DEFAULT_MAX_ITER, DEFAULT_TOL};
use g2kleinian::{CPoly, C64};
use nalgebra::Vector2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;
use std::io::Write;

pub fn report(id: u32, ok: bool, what: &str) {
    let tag = if ok { "PASS" } else { "FAIL" };
    // Straight to the stream so the line shows up without --nocapture.
    let _ = writeln!(
        std::io::stderr(),
        "[acceptance] {tag} criterion {id:2}: {what}"
    );
}

pub fn unit(rng: &mut ChaCha8Rng) -> C64 {
    C64::from_polar(1.0, rng.random::<f64>() * TAU)
}

pub fn cplx(rng: &mut ChaCha8Rng, r: f64) -> C64 {
    c(rng.random_range(-r..r), rng.random_range(-r..r))
}

/// Three root pairs clustered around well-separated centres.
pub fn random_sextic(rng: &mut ChaCha8Rng) -> CPoly {
    let radius = rng.random_range(1.0..2.0);
    let turn = rng.random::<f64>() * TAU;
    let mut rs = Vec::new();
    for k in 0..3 {
        let jitter = rng.random_range(-0.3..0.3);
        let centre = C64::from_polar(radius, turn + TAU * k as f64 / 3.0 + jitter);
        let half = unit(rng) * radius * rng.random_range(0.05..0.45);
        rs.push(centre + half);
        rs.push(centre - half);
    }
    let lead = unit(rng) * rng.random_range(0.5..2.0);
    CPoly::from_roots(lead, &rs).unwrap()
}

/// Weierstrass-normalized quintic: two finite pairs and a far root paired with infinity.
pub fn random_quintic(rng: &mut ChaCha8Rng) -> CPoly {
    let turn = rng.random::<f64>() * TAU;
    let mut rs = Vec::new();
    for k in 0..2 {
        let centre = C64::from_polar(1.0, turn + TAU * k as f64 / 3.0);
        let half = unit(rng) * rng.random_range(0.05..0.35);
        rs.push(centre + half);
        rs.push(centre - half);
    }
    rs.push(C64::from_polar(
        rng.random_range(3.0..5.0),
        turn + TAU * 2.0 / 3.0,
    ));
    CPoly::from_roots(c(4.0, 0.0), &rs).unwrap()
}

/// Every fifth curve is a quintic.
pub fn random_curve(rng: &mut ChaCha8Rng, k: usize) -> CPoly {
    if k % 5 == 4 {
        random_quintic(rng)
    } else {
        random_sextic(rng)
    }
}

pub fn tower(f: &CPoly) -> RichelotTower {
    iterate_tower(f, &find_disks(f).unwrap(), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap()
}

pub fn evaluator(f: &CPoly) -> Evaluator {
    let t = tower(f);
    let p = compute_periods(&t).unwrap();
    Evaluator::new(t, p, EvalOptions::default()).unwrap()
}

/// A point in the fundamental parallelogram, scaled by `frac`.
pub fn random_z(ev: &Evaluator, rng: &mut ChaCha8Rng, frac: f64) -> Vector2<C64> {
    let m = [rng.random_range(-frac..frac), rng.random_range(-frac..frac)];
    let n = [rng.random_range(-frac..frac), rng.random_range(-frac..frac)];
    let p = &ev.periods;
    p.a * Vector2::new(c(m[0], 0.0), c(m[1], 0.0)) + p.b * Vector2::new(c(n[0], 0.0), c(n[1], 0.0))
}
