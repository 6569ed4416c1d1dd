use g2kleinian::disks::find_disks;
use g2kleinian::periods::{compute_periods, is_quasi_reduced, quadrature_periods};
use g2kleinian::richelot::{iterate_tower, DEFAULT_MAX_ITER, DEFAULT_TOL};
use g2kleinian::CPoly;

fn main() -> g2kleinian::Result<()> {
    let f = CPoly::from_real(&[-1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0])?;
    let disks = find_disks(&f)?;
    let tower = iterate_tower(&f, &disks, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let p = compute_periods(&tower)?;

    println!("W from the tower limit:{}", p.w);
    let (wq, _) = quadrature_periods(&f, &disks)?;
    println!("W by contour quadrature:{wq}");

    println!("Omega:{}", p.omega);
    let asym = (p.omega - p.omega.transpose())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    println!(
        "asymmetry {asym:.1e}, quasi-reduced {}",
        is_quasi_reduced(&p.omega)?
    );
    Ok(())
}
