use g2kleinian::cpoly::c;
use g2kleinian::disks::find_disks;
use g2kleinian::kleinian::{EvalOptions, Evaluator};
use g2kleinian::periods::compute_periods;
use g2kleinian::richelot::{iterate_tower, DEFAULT_MAX_ITER, DEFAULT_TOL};
use g2kleinian::CPoly;
use nalgebra::Vector2;

fn main() -> g2kleinian::Result<()> {
    // Weierstrass-normalized quintic: leading coefficient 4
    let f = CPoly::from_real(&[0.3, -1.0, 0.2, 0.5, 0.0, 4.0])?;
    let tower = iterate_tower(&f, &find_disks(&f)?, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let periods = compute_periods(&tower)?;
    let ev = Evaluator::new(tower, periods, EvalOptions::default())?;

    for t in &ev.transfers {
        println!(
            "transfer fit {:.1e}  holdout {:.1e}",
            t.fit_residual, t.holdout_residual
        );
    }

    let z = Vector2::new(c(0.21, 0.04), c(-0.13, 0.1));
    let fast = ev.eval_s(&z)?;
    let slow = ev.oracle_s(&z)?;
    println!("tower vs theta: {:.2e}", fast.rel_diff(&slow));

    let [p22, p12, p11] = ev.wp(&z)?;
    println!("p22 {p22:.8}\np12 {p12:.8}\np11 {p11:.8}");
    let (sigma, zeta) = ev.sigma_zeta(&z)?;
    println!("sigma(2z) {sigma:.8}\nzeta {:.8} {:.8}", zeta[0], zeta[1]);
    Ok(())
}
