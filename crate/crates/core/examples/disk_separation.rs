use g2kleinian::disks::{factor_by_disks, find_disks, is_subordinate};
use g2kleinian::CPoly;

fn main() -> g2kleinian::Result<()> {
    // quintic: one root pair shares its disk with infinity
    let f = CPoly::from_real(&[0.3, -1.0, 0.2, 0.5, 0.0, 4.0])?;
    let d = find_disks(&f)?;
    println!("{}", serde_json::to_string_pretty(&d).unwrap());
    println!("subordinate: {}", is_subordinate(&f, &d)?);

    let [p, q, r] = factor_by_disks(&f, &d)?;
    let back = p.mul(&q)?.mul(&r)?;
    println!("p q r vs f: {:.2e}", back.rel_diff(&f));
    Ok(())
}
