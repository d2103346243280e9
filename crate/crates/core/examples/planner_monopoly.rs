//! Planner and monopoly optima across the concentration/differentiation cutoff.

use hedonic_eq::benchmark::{monopoly_optimum, planner_optimum};
use hedonic_eq::{MarketInstance, Result};

fn main() -> Result<()> {
    for g in [0.1, 0.3, 0.5, 1.0, 2.0] {
        let inst = MarketInstance::new(1.0, vec![1.0, 0.0], vec![g, g, g])?;
        let p = planner_optimum(&inst)?;
        let m = monopoly_optimum(&inst)?;
        println!(
            "gamma {g:.1}: planner {:?} q1 = {:.4} welfare {:.4} | monopoly {:?} ratio {:.4}",
            p.regime,
            p.q[0],
            p.welfare,
            m.regime,
            m.welfare / p.welfare
        );
    }
    Ok(())
}
