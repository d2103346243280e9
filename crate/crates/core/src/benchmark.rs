//! Social planner and monopolist optima.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{self, construct_profile, radii};
use crate::linalg;
use crate::model::{total_surplus, Allocation, CharProfile, MarketInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Differentiation,
    Concentration,
    DominantFirmPolarization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Planner,
    Monopolist,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub objective: Objective,
    pub regime: Regime,
    pub q: Vec<f64>,
    /// `x = rho * beta`
    pub rho: f64,
    pub allocation: Allocation,
    pub welfare: f64,
}

/// Norm of the best aggregate for outputs `q`: the target norm (1 for the
/// planner, 1/2 for the monopolist) clamped into the annulus `[r(q), R(q)]`.
pub fn conditional_rho(q: &[f64], which: Objective) -> Result<f64> {
    let rad = geometry::donut_radii(q)?;
    let target = match which {
        Objective::Planner => 1.0,
        Objective::Monopolist => 0.5,
    };
    Ok(rad.inner.max(rad.outer.min(target)))
}

fn dominant_firm(gamma: &[f64]) -> usize {
    let top = linalg::norm_inf(gamma);
    gamma.iter().position(|g| *g == top).unwrap_or(0)
}

pub fn planner_optimum(inst: &MarketInstance) -> Result<BenchmarkResult> {
    planner_optimum_with(inst, false)
}

/// As [`planner_optimum`]; `mirror` selects the reflected profile in the differentiation regime.
pub fn planner_optimum_with(inst: &MarketInstance, mirror: bool) -> Result<BenchmarkResult> {
    let n = inst.n() as f64;
    let a = inst.alpha();
    let gamma = inst.gamma();
    let beta = inst.beta();
    let rad = radii(gamma);
    let slack = geometry::BOUNDARY_SLACK * rad.outer.max(1.0);

    let (regime, q, profile) = if rad.inner <= 1.0 + slack && rad.outer >= 1.0 - slack {
        let p = construct_profile(gamma, beta, mirror)?;
        (Regime::Differentiation, gamma.to_vec(), p)
    } else if rad.outer < 1.0 {
        let shift = a * (1.0 - rad.outer) / (1.0 + n * a);
        let q = gamma.iter().map(|g| g + shift).collect();
        (Regime::Concentration, q, CharProfile::concentrated(beta, inst.n())?)
    } else {
        let top = dominant_firm(gamma);
        let shift = a * (rad.inner - 1.0) / (1.0 + n * a);
        let mut q: Vec<f64> = gamma.iter().map(|g| g + shift).collect();
        q[top] = gamma[top] - shift;
        let sigma: Vec<i8> = (0..inst.n()).map(|i| if i == top { 1 } else { -1 }).collect();
        (Regime::DominantFirmPolarization, q, CharProfile::signed(beta, &sigma)?)
    };

    let rho = conditional_rho(&q, Objective::Planner)?;
    let allocation = Allocation::new(profile, q.clone())?;
    let welfare = total_surplus(inst, &allocation)?;
    Ok(BenchmarkResult {
        objective: Objective::Planner,
        regime,
        q,
        rho,
        allocation,
        welfare,
    })
}

pub fn monopoly_optimum(inst: &MarketInstance) -> Result<BenchmarkResult> {
    monopoly_optimum_with(inst, false)
}

/// The planner's profile with every output halved.
pub fn monopoly_optimum_with(inst: &MarketInstance, mirror: bool) -> Result<BenchmarkResult> {
    let planner = planner_optimum_with(inst, mirror)?;
    let q = linalg::scale(&planner.q, 0.5);
    let rho = conditional_rho(&q, Objective::Monopolist)?;
    let allocation = Allocation::new(planner.allocation.profile().clone(), q.clone())?;
    let welfare = total_surplus(inst, &allocation)?;
    Ok(BenchmarkResult {
        objective: Objective::Monopolist,
        regime: planner.regime,
        q,
        rho,
        allocation,
        welfare,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{classify_profile, CLASSIFY_TOL};
    use crate::model::surplus_from_aggregates;

    const S3: f64 = 1.732_050_807_568_877_2;

    fn inst(gamma: Vec<f64>) -> MarketInstance {
        MarketInstance::new(1.0, vec![0.0, 1.0], gamma).unwrap()
    }

    /// Planner welfare as a function of q alone, with x = rho(q) beta.
    fn reduced_welfare(inst: &MarketInstance, q: &[f64]) -> f64 {
        let rho = conditional_rho(q, Objective::Planner).unwrap();
        surplus_from_aggregates(inst, &linalg::scale(inst.beta(), rho), q)
    }

    /// Coordinate-wise grid refinement of the reduced welfare over q >= 0.
    fn numeric_planner(inst: &MarketInstance) -> Vec<f64> {
        let mut q = inst.gamma().to_vec();
        let mut step = 1.0;
        while step > 1e-10 {
            let mut improved = true;
            while improved {
                improved = false;
                for i in 0..q.len() {
                    for dir in [-1.0, 1.0] {
                        let mut cand = q.clone();
                        cand[i] = (cand[i] + dir * step).max(0.0);
                        if reduced_welfare(inst, &cand) > reduced_welfare(inst, &q) + 1e-15 {
                            q = cand;
                            improved = true;
                        }
                    }
                }
            }
            step *= 0.5;
        }
        q
    }

    #[test]
    fn rho_examples() {
        assert_eq!(conditional_rho(&[2.0, S3], Objective::Planner).unwrap(), 1.0);
        assert_eq!(conditional_rho(&[2.0, S3], Objective::Monopolist).unwrap(), 0.5);
        assert!((conditional_rho(&[0.2, 0.2], Objective::Planner).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(conditional_rho(&[5.0, 1.0, 1.0], Objective::Planner).unwrap(), 3.0);
    }

    #[test]
    fn duopoly_benchmarks() {
        let i = inst(vec![2.0, S3]);
        let p = planner_optimum(&i).unwrap();
        assert_eq!(p.regime, Regime::Differentiation);
        assert_eq!(p.q, vec![2.0, S3]);
        assert!(linalg::max_abs_diff(p.allocation.x(), &[0.0, 1.0]) < 1e-12);
        assert!((p.welfare - 4.0).abs() < 1e-12);
        let m = monopoly_optimum(&i).unwrap();
        assert_eq!(m.q, vec![1.0, S3 / 2.0]);
        assert_eq!(m.allocation.profile(), p.allocation.profile());
        assert!((m.welfare - 3.0).abs() < 1e-12);
        assert_eq!(m.rho, 0.5);
    }

    #[test]
    fn concentration_regime() {
        let i = inst(vec![0.3, 0.3]);
        let p = planner_optimum(&i).unwrap();
        assert_eq!(p.regime, Regime::Concentration);
        // 0.3 + (1 - 0.6) / 3
        for q in &p.q {
            assert!((q - (0.3 + 0.4 / 3.0)).abs() < 1e-15);
        }
        assert!((p.rho - 2.6 / 3.0).abs() < 1e-15);
        assert!(linalg::max_abs_diff(p.allocation.x(), &[0.0, p.rho]) < 1e-12);
        let num = numeric_planner(&i);
        assert!(linalg::max_abs_diff(&num, &p.q) < 1e-7);
        let m = monopoly_optimum(&i).unwrap();
        assert_eq!(m.q, linalg::scale(&p.q, 0.5));
    }

    #[test]
    fn polarization_regime() {
        let i = inst(vec![4.0, 1.0]);
        let p = planner_optimum(&i).unwrap();
        assert_eq!(p.regime, Regime::DominantFirmPolarization);
        assert!((p.q[0] - 10.0 / 3.0).abs() < 1e-14);
        assert!((p.q[1] - 5.0 / 3.0).abs() < 1e-14);
        assert_eq!(p.allocation.profile().columns(), &[vec![0.0, 1.0], vec![-0.0, -1.0]]);
        let num = numeric_planner(&i);
        assert!(linalg::max_abs_diff(&num, &p.q) < 1e-7);
        assert_eq!(
            classify_profile(p.allocation.profile(), CLASSIFY_TOL).name(),
            "polarization"
        );
    }

    #[test]
    fn aggregate_output_in_concentration_regime() {
        let i = MarketInstance::new(0.7, vec![1.0, 0.0, 0.0], vec![0.1, 0.25, 0.2]).unwrap();
        let p = planner_optimum(&i).unwrap();
        let n = 3.0;
        let want = (n * 0.7 + 0.55) / (n * 0.7 + 1.0);
        assert!((linalg::norm1(&p.q) - want).abs() < 1e-12);
    }
}
