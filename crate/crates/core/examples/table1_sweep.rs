//! Symmetric welfare table as CSV over a grid of standalone values.

use hedonic_eq::cli::sweep::{table1, Grid};
use hedonic_eq::Result;

fn main() -> Result<()> {
    print!("{}", table1(2, 1.0, &Grid::new(0.0, 5.0, 21)?)?);
    Ok(())
}
