//! Quadratic collapse of the root gaps along the tower.

use g2kleinian::disks::find_disks;
use g2kleinian::richelot::{iterate_tower, DEFAULT_MAX_ITER, DEFAULT_TOL};
use g2kleinian::CPoly;

fn main() -> g2kleinian::Result<()> {
    let f = CPoly::from_real(&[1.0, 2.0, -0.5, 0.3, 1.2, -0.7, 0.9])?;
    let tower = iterate_tower(&f, &find_disks(&f)?, DEFAULT_TOL, DEFAULT_MAX_ITER)?;

    let gaps = tower.gap_history();
    for (n, g) in gaps.iter().enumerate() {
        let order = match n {
            0 => String::new(),
            _ if gaps[n - 1] > 0.0 && *g > 1e-300 => {
                format!("  ratio of logs {:.3}", g.ln() / gaps[n - 1].ln())
            }
            _ => String::new(),
        };
        println!("level {n:2}  gap {g:.3e}{order}");
    }
    let lim = tower.limit;
    println!("limit: c = {:.6}, double roots {:?}", lim.c, lim.t);
    Ok(())
}
