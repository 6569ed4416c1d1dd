//! Roots, the bracket `[p, q]` of quadratics and the identities tying it to `Delta`.

use g2kleinian::cpoly::{bracket, c, delta, discr, res, roots};
use g2kleinian::CPoly;

fn main() -> g2kleinian::Result<()> {
    let p = CPoly::new(vec![c(1.0, 0.5), c(-0.3, 0.0), c(2.0, -1.0)])?;
    let q = CPoly::new(vec![c(-0.7, 0.0), c(1.1, 0.2), c(0.4, 0.0)])?;
    let r = CPoly::new(vec![c(0.2, -0.9), c(0.0, 1.0), c(-1.3, 0.1)])?;

    let (ph, qh, rh) = (bracket(&q, &r)?, bracket(&r, &p)?, bracket(&p, &q)?);
    let d = delta(&p, &q, &r)?;

    // [p^, q^] = -2 Delta r
    let lhs = bracket(&ph, &qh)?;
    let rhs = r.scale(d * -2.0);
    println!("[p^,q^] + 2 Delta r : rel {:.2e}", lhs.rel_diff(&rhs));

    let dh = delta(&ph, &qh, &rh)?;
    println!(
        "Delta^ + 2 Delta^2  : {:.2e}",
        (dh + d * d * 2.0).norm() / d.norm_sqr()
    );

    let lhs = res(&ph, &qh)?;
    let rhs = d * d * discr(&r)?;
    println!(
        "res(p^,q^)          : rel {:.2e}",
        (lhs - rhs).norm() / rhs.norm()
    );

    let f = p.mul(&q)?.mul(&r)?;
    for z in roots(&f)? {
        println!("root {z:?}");
    }
    Ok(())
}
