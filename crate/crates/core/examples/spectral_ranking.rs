//! Oligopoly against monopoly decided by the eigen-decomposition of the demand system.

use hedonic_eq::linalg::Matrix;
use hedonic_eq::spectral::{ranking_condition, SpectralInstance};
use hedonic_eq::Result;

fn main() -> Result<()> {
    let sigma = Matrix::from_rows(&[vec![2.0, 0.8, 0.2], vec![0.8, 2.0, 0.5], vec![0.2, 0.5, 2.0]])?;
    let si = SpectralInstance::new(vec![1.0, 1.5, 0.7], sigma)?;
    let r = ranking_condition(&si)?;
    for (l, (w, p)) in r.eigenvalues.iter().zip(r.weights.iter().zip(&r.projections)) {
        println!("lambda {l:.4}: weight {w:+.4}, projection {p:.4}");
    }
    println!("major {:.6} vs minor {:.6}", r.major_mass, r.minor_mass);
    println!(
        "verdict {:?} (direct {:?}, identity gap {:.1e})",
        r.verdict, r.direct_verdict, r.identity_gap
    );
    Ok(())
}
