//! Welfare comparisons: monopoly against differentiation and against concentration.

use hedonic_eq::welfare::{compare_cosines, compare_mono_vs_conc, compare_mono_vs_diff};
use hedonic_eq::{MarketInstance, Result};

fn main() -> Result<()> {
    let large = MarketInstance::new(1.0, vec![1.0, 0.0], vec![2.0, 1.8, 1.5])?;
    let c = compare_mono_vs_diff(&large)?;
    println!(
        "{} {:.4} vs {} {:.4}: {:?}",
        c.left, c.left_welfare, c.right, c.right_welfare, c.observed
    );
    let cos = compare_cosines(&large)?;
    println!(
        "weighted cosine: planner {:.4}, differentiation {:.4}",
        cos.planner, cos.differentiation
    );

    let small = MarketInstance::new(2.0, vec![1.0, 0.0], vec![0.1, 0.2])?;
    let mc = compare_mono_vs_conc(&small)?;
    println!(
        "{} {:.4} vs {} {:.4}: {:?} (inequality says oligopoly better: {})",
        mc.comparison.left,
        mc.comparison.left_welfare,
        mc.comparison.right,
        mc.comparison.right_welfare,
        mc.comparison.observed,
        mc.inequality.oligopoly_better
    );
    Ok(())
}
