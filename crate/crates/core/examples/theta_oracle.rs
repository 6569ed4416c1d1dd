//! The theta-series reference for `S`, checked against its quasi-periodicity.

use g2kleinian::cpoly::c;
use g2kleinian::disks::find_disks;
use g2kleinian::periods::compute_periods;
use g2kleinian::richelot::{iterate_tower, DEFAULT_MAX_ITER, DEFAULT_TOL};
use g2kleinian::thetaref::oracle_s;
use g2kleinian::CPoly;
use nalgebra::Vector2;

fn main() -> g2kleinian::Result<()> {
    let f = CPoly::from_real(&[0.7, -0.2, 1.1, 0.4, -0.9, 0.3, 1.5])?;
    let tower = iterate_tower(&f, &find_disks(&f)?, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let p = compute_periods(&tower)?;

    let z = Vector2::new(c(0.12, -0.05), c(-0.2, 0.3));
    let s = oracle_s(&p, &z)?;
    println!("S(z) = {:?}", s.s);

    // S(z + w) = exp(2 eta^T (z + w/2)) S(z) for a column w of W
    for k in 0..3 {
        let w = p.w.column(k).into_owned();
        let eta = p.e.column(k).into_owned();
        let factor = (eta.transpose() * (z * c(2.0, 0.0) + w)).x.exp();
        let shifted = oracle_s(&p, &(z + w))?;
        let err = (0..4)
            .map(|j| (shifted.s[j] - factor * s.s[j]).norm())
            .fold(0.0, f64::max);
        println!("column {k}: defect {:.2e}", err / shifted.scale());
    }
    Ok(())
}
