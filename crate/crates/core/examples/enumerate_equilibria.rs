//! Every equilibrium of a four-firm market, each with a sampled deviation check.

use hedonic_eq::equilibrium::{enumerate_equilibria, verify_equilibrium_with, VerifyOptions};
use hedonic_eq::{MarketInstance, Result};

fn main() -> Result<()> {
    let inst = MarketInstance::new(0.5, vec![0.6, 0.8], vec![3.0, 1.0, 0.9, 0.8])?;
    for r in enumerate_equilibria(&inst)? {
        let v = verify_equilibrium_with(&inst, &r.allocation, VerifyOptions { samples: 512, seed: 1 })?;
        println!(
            "{:?} {:?}: q = {:?}, deviation gain {:.1e}, accepted {}",
            r.pattern(inst.gamma()),
            r.sigma(),
            r.q(),
            v.deviation_gain,
            v.accepted
        );
    }
    Ok(())
}
