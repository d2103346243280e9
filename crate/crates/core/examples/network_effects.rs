//! Outputs under a line network, with the Neumann-series cross-check.

use hedonic_eq::extensions::network::{network_outputs, neumann_check, NEUMANN_TERMS};
use hedonic_eq::linalg::Matrix;
use hedonic_eq::{MarketInstance, Result};

fn main() -> Result<()> {
    let w = Matrix::from_rows(&[vec![0.0, 0.3, 0.0], vec![0.3, 0.0, 0.3], vec![0.0, 0.3, 0.0]])?;
    let inst = MarketInstance::new(1.0, vec![0.0, 1.0], vec![2.0, 2.0, 2.0])?.with_network(w)?;
    let o = network_outputs(&inst)?;
    println!("spectral radius {:.4}", o.spectral_radius);
    println!("planner     {:?} exists {}", o.planner.q, o.planner.exists);
    println!("monopoly    {:?} exists {}", o.monopoly.q, o.monopoly.exists);
    println!("equilibrium {:?} exists {}", o.equilibrium.q, o.equilibrium.exists);
    println!("monopoly outputs dominate: {}", o.monopoly_dominates);
    let c = neumann_check(&inst, 1.0, inst.gamma(), NEUMANN_TERMS)?;
    println!(
        "Neumann gap {:.1e} within bound {:.1e}: {}",
        c.gap, c.tail_bound, c.within
    );
    Ok(())
}
