//! The two-firm reference market: benchmarks, equilibria, and cosines.

use hedonic_eq::benchmark::{monopoly_optimum, planner_optimum};
use hedonic_eq::equilibrium::enumerate_equilibria;
use hedonic_eq::{MarketInstance, Result};

fn main() -> Result<()> {
    let inst = MarketInstance::new(1.0, vec![0.0, 1.0], vec![2.0, 3f64.sqrt()])?;
    let p = planner_optimum(&inst)?;
    let m = monopoly_optimum(&inst)?;
    println!(
        "planner  q = {:?}  welfare = {:.6}  cosine = {:.6}",
        p.q,
        p.welfare,
        p.allocation.profile().cosine(0, 1)
    );
    println!("monopoly q = {:?}  welfare = {:.6}", m.q, m.welfare);
    for r in enumerate_equilibria(&inst)? {
        println!(
            "{:?}: q = {:?}  cosine = {:.6}  profits = {:?}",
            r.pattern(inst.gamma()),
            r.q(),
            r.allocation.profile().cosine(0, 1),
            r.profits
        );
    }
    Ok(())
}
