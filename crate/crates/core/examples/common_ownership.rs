//! Differentiation equilibrium as common ownership rises, and the first-best check.

use hedonic_eq::extensions::ownership::{first_best_random_trials, ownership_equilibrium, ownership_welfare_slope};
use hedonic_eq::{MarketInstance, Result};

fn main() -> Result<()> {
    let inst = MarketInstance::new(1.0, vec![0.0, 1.0], vec![2.0, 3f64.sqrt()])?;
    for k in [0.0, 0.25, 0.5, 2.0 / 3.0, 0.9] {
        match ownership_equilibrium(&inst, k)? {
            Some(e) => {
                let s = ownership_welfare_slope(&inst, k)?;
                println!(
                    "kappa {k:.3}: q = {:?} weighted cosine {:?} welfare {:.4} slope {:+.4}",
                    e.q(),
                    e.cosine,
                    e.welfare,
                    s.numeric
                );
            }
            None => println!("kappa {k:.3}: no equilibrium"),
        }
    }
    let fb = first_best_random_trials(&inst, 50, 7)?;
    println!(
        "first best unreachable in {} trials (min residual {:.3} >= {:.3})",
        fb.trials, fb.min_residual, fb.lower_bound
    );
    Ok(())
}
