//! Damped best-response dynamics from a concentrated start.

use hedonic_eq::equilibrium::{best_response_dynamics, DynamicsOptions};
use hedonic_eq::model::{Allocation, CharProfile};
use hedonic_eq::{MarketInstance, Result};

fn main() -> Result<()> {
    let inst = MarketInstance::new(1.0, vec![0.0, 1.0], vec![2.0, 3f64.sqrt()])?;
    let start = Allocation::new(CharProfile::concentrated(&[1.0, 0.0], 2)?, vec![0.1, 0.1])?;
    let opts = DynamicsOptions {
        damping: 0.2,
        ..DynamicsOptions::default()
    };
    let res = best_response_dynamics(&inst, &start, opts)?;
    for (k, q) in res.trajectory.iter().take(6).enumerate() {
        println!("sweep {k}: {q:?}");
    }
    println!("converged {} after {} sweeps", res.converged, res.sweeps);
    if let Some(r) = res.record {
        println!("limit {:?} at q = {:?}", r.pattern(inst.gamma()), r.q());
    }
    Ok(())
}
