//! Feasible aggregates: donut radii and a constructed unit-column profile.

use hedonic_eq::geometry::{classify_profile, construct_profile, donut_radii, CLASSIFY_TOL};
use hedonic_eq::linalg::{norm2, sub};
use hedonic_eq::Result;

fn main() -> Result<()> {
    let q = [1.0, 0.8, 0.5];
    let rad = donut_radii(&q)?;
    println!("r = {}, R = {}", rad.inner, rad.outer);
    for norm in [rad.inner.max(0.0), 1.0, 2.0, rad.outer] {
        let x = [norm * 0.6, norm * 0.8];
        let p = construct_profile(&q, &x, false)?;
        let err = norm2(&sub(&p.apply(&q), &x));
        println!(
            "|x| = {norm:.2}: {} (residual {err:.1e})",
            classify_profile(&p, CLASSIFY_TOL).name()
        );
    }
    match construct_profile(&q, &[3.0, 0.0], false) {
        Err(e) => println!("|x| = 3: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
