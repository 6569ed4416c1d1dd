//! From a point of the Jacobian to a divisor and back.

use g2kleinian::abel::{abel_map, divisor_from_point, CERT_TOL};
use g2kleinian::cpoly::c;
use g2kleinian::disks::find_disks;
use g2kleinian::kleinian::{EvalOptions, Evaluator};
use g2kleinian::periods::compute_periods;
use g2kleinian::richelot::{iterate_tower, DEFAULT_MAX_ITER, DEFAULT_TOL};
use g2kleinian::CPoly;
use nalgebra::Vector2;

fn main() -> g2kleinian::Result<()> {
    let f = CPoly::from_real(&[1.0, 2.0, -0.5, 0.3, 1.2, -0.7, 0.9])?;
    let tower = iterate_tower(&f, &find_disks(&f)?, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let periods = compute_periods(&tower)?;
    let ev = Evaluator::new(tower, periods, EvalOptions::default())?;

    let z = ev
        .periods
        .reduce(&Vector2::new(c(0.31, -0.12), c(0.08, 0.27)))?;
    let d = divisor_from_point(&ev.eval_s(&z)?)?;
    println!("divisor: {}", serde_json::to_string(&d).unwrap());

    let back = abel_map(&ev, &d, 7, CERT_TOL)?;
    println!("{}", serde_json::to_string_pretty(&back).unwrap());
    println!(
        "lattice defect of the difference: {:.2e}",
        ev.periods.lattice_defect(&(back.z - z))?
    );
    Ok(())
}
