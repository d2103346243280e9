//! Network effects among idiosyncratic characteristics.
//!
//! With a symmetric network `W` the consumer's quadratic term on `y` becomes
//! `y' (I - W) y`, and every output profile is a weighted Bonacich centrality
//! `b(delta, z) = (I - delta W)^{-1} z`.

use serde::{Deserialize, Serialize};

use crate::equilibrium::BestResponse;
use crate::error::{Error, Result};
use crate::geometry::{construct_profile, radii, BOUNDARY_SLACK};
use crate::linalg::{self, dot, norm2, Matrix};
use crate::model::{surplus_from_aggregates, Allocation, MarketInstance};

/// Number of terms kept by the default Neumann cross-check.
pub const NEUMANN_TERMS: usize = 60;

/// Fixed-point tolerance for the network best responses at the equilibrium.
pub const FIXED_POINT_TOL: f64 = 1e-8;

fn network(inst: &MarketInstance) -> Result<&Matrix> {
    inst.network().ok_or(Error::NoNetwork)
}

/// `rho(W)`, the largest absolute eigenvalue of the network.
pub fn spectral_radius(inst: &MarketInstance) -> Result<f64> {
    linalg::symmetric_spectral_radius(network(inst)?)
}

fn check_decay(w: &Matrix, delta: f64) -> Result<f64> {
    if !delta.is_finite() {
        return Err(Error::invalid("delta", "must be finite"));
    }
    let rho = linalg::symmetric_spectral_radius(w)?;
    if delta.abs() * rho >= 1.0 {
        return Err(Error::SpectralCondition { delta, rho });
    }
    Ok(rho)
}

fn check_seed(w: &Matrix, z: &[f64]) -> Result<()> {
    if z.len() != w.rows() {
        return Err(Error::Dimension {
            what: "z",
            expected: w.rows(),
            got: z.len(),
        });
    }
    Ok(())
}

/// `(I - delta W)^{-1} z` by a dense solve.
pub fn bonacich_with(w: &Matrix, delta: f64, z: &[f64]) -> Result<Vec<f64>> {
    check_seed(w, z)?;
    check_decay(w, delta)?;
    let system = Matrix::identity(w.rows()).add(&w.scaled(-delta));
    linalg::solve(&system, z)
}

/// Weighted Bonacich centralities of the instance's network.
pub fn bonacich(inst: &MarketInstance, delta: f64, z: &[f64]) -> Result<Vec<f64>> {
    bonacich_with(network(inst)?, delta, z)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeumannCheck {
    pub terms: usize,
    pub solve: Vec<f64>,
    /// `sum_{t <= terms} (delta W)^t z`
    pub series: Vec<f64>,
    pub gap: f64,
    /// `|delta rho|^{T+1} / (1 - |delta rho|) * ||z||`
    pub tail_bound: f64,
    pub within: bool,
}

/// Compares the dense solve with the truncated Neumann series.
///
/// The comparison allows `1e-12 * n * (1 + ||b||)` on top of the tail bound for rounding.
pub fn neumann_check(inst: &MarketInstance, delta: f64, z: &[f64], terms: usize) -> Result<NeumannCheck> {
    let w = network(inst)?;
    check_seed(w, z)?;
    let rho = check_decay(w, delta)? * delta.abs();
    let solve = bonacich_with(w, delta, z)?;
    let dw = w.scaled(delta);
    let mut term = z.to_vec();
    let mut series = z.to_vec();
    for _ in 0..terms {
        term = dw.mul_vec(&term);
        linalg::axpy(&mut series, 1.0, &term);
    }
    let gap = norm2(&linalg::sub(&solve, &series));
    let tail_bound = rho.powi(terms as i32 + 1) / (1.0 - rho) * norm2(z);
    let rounding = 1e-12 * z.len() as f64 * (1.0 + norm2(&solve));
    Ok(NeumannCheck {
        terms,
        within: gap <= tail_bound + rounding,
        solve,
        series,
        gap,
        tail_bound,
    })
}

/// Best response of firm `i` when its output also earns `sum_j w_ij q_j` per unit.
pub fn network_best_response(inst: &MarketInstance, alloc: &Allocation, i: usize) -> Result<BestResponse> {
    let w = network(inst)?;
    let base = crate::equilibrium::best_response(inst, alloc, i)?;
    let spill: f64 = (0..inst.n())
        .filter(|j| *j != i)
        .map(|j| w[(i, j)] * alloc.q()[j])
        .sum();
    let a = inst.alpha();
    Ok(BestResponse {
        output: (a * base.delta + inst.gamma()[i] + spill) / (2.0 * (1.0 + a)),
        ..base
    })
}

/// `alpha (beta'x - x'x/2) + gamma'y - y'(I - W)y/2`
pub fn network_surplus(inst: &MarketInstance, x: &[f64], q: &[f64]) -> Result<f64> {
    let w = network(inst)?;
    let base = surplus_from_aggregates(inst, x, q);
    Ok(base + 0.5 * dot(q, &w.mul_vec(q)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkBenchmark {
    pub q: Vec<f64>,
    /// `x = rho * beta`
    pub rho: f64,
    /// `q >= 0` and `r(q) <= rho <= R(q)`.
    pub exists: bool,
    pub allocation: Option<Allocation>,
    pub welfare: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkOutputs {
    pub spectral_radius: f64,
    pub planner: NetworkBenchmark,
    pub monopoly: NetworkBenchmark,
    pub equilibrium: NetworkBenchmark,
    /// `q_monopoly >> q_equilibrium` componentwise.
    pub monopoly_dominates: bool,
    /// Largest gap between `q^d` and the network best-response outputs at `q^d`.
    pub fixed_point_residual: Option<f64>,
}

fn benchmark(inst: &MarketInstance, q: Vec<f64>, rho: f64, mirror: bool) -> Result<NetworkBenchmark> {
    let rad = radii(&q);
    let slack = BOUNDARY_SLACK * rad.outer.max(1.0);
    let exists = q.iter().all(|v| *v >= 0.0) && rad.inner <= rho + slack && rad.outer >= rho - slack;
    let (allocation, welfare) = if exists {
        let x = linalg::scale(inst.beta(), rho);
        let profile = construct_profile(&q, &x, mirror)?;
        let alloc = Allocation::new(profile, q.clone())?;
        let welfare = network_surplus(inst, alloc.x(), alloc.q())?;
        (Some(alloc), Some(welfare))
    } else {
        (None, None)
    };
    Ok(NetworkBenchmark {
        q,
        rho,
        exists,
        allocation,
        welfare,
    })
}

/// The monopolist keeps the planner's profile and halves every output.
fn halved(inst: &MarketInstance, planner: &NetworkBenchmark, q: Vec<f64>) -> Result<NetworkBenchmark> {
    let (allocation, welfare) = match &planner.allocation {
        Some(p) => {
            let alloc = Allocation::new(p.profile().clone(), q.clone())?;
            let welfare = network_surplus(inst, alloc.x(), alloc.q())?;
            (Some(alloc), Some(welfare))
        }
        None => (None, None),
    };
    Ok(NetworkBenchmark {
        q,
        rho: 0.5 * planner.rho,
        exists: planner.exists,
        allocation,
        welfare,
    })
}

/// Planner, monopoly, and differentiation-equilibrium outputs under network effects.
pub fn network_outputs(inst: &MarketInstance) -> Result<NetworkOutputs> {
    network_outputs_with(inst, false)
}

pub fn network_outputs_with(inst: &MarketInstance, mirror: bool) -> Result<NetworkOutputs> {
    let w = network(inst)?;
    let k = 2.0 + inst.alpha();
    let gamma = inst.gamma();
    let q_planner = bonacich_with(w, 1.0, gamma)?;
    // b(1, gamma / 2) = b(1, gamma) / 2 exactly, since halving commutes with the solve.
    let q_monopoly = linalg::scale(&q_planner, 0.5);
    let q_eq = bonacich_with(w, 1.0 / k, &linalg::scale(gamma, 1.0 / k))?;
    let monopoly_dominates = q_monopoly.iter().zip(&q_eq).all(|(m, d)| m > d);

    let planner = benchmark(inst, q_planner, 1.0, mirror)?;
    let monopoly = halved(inst, &planner, q_monopoly)?;
    let equilibrium = if inst.m() < 2 {
        NetworkBenchmark {
            q: q_eq,
            rho: 1.0,
            exists: false,
            allocation: None,
            welfare: None,
        }
    } else {
        benchmark(inst, q_eq, 1.0, mirror)?
    };
    let fixed_point_residual = match &equilibrium.allocation {
        Some(alloc) => {
            let mut worst: f64 = 0.0;
            for i in 0..inst.n() {
                let br = network_best_response(inst, alloc, i)?;
                worst = worst.max((br.output - alloc.q()[i]).abs());
            }
            Some(worst)
        }
        None => None,
    };
    Ok(NetworkOutputs {
        spectral_radius: linalg::symmetric_spectral_radius(w)?,
        planner,
        monopoly,
        equilibrium,
        monopoly_dominates,
        fixed_point_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::{monopoly_optimum, planner_optimum};
    use crate::equilibrium::differentiation_equilibrium;

    const S3: f64 = 1.732_050_807_568_877_2;

    fn pair(w: f64) -> Matrix {
        Matrix::from_rows(&[vec![0.0, w], vec![w, 0.0]]).unwrap()
    }

    fn duopoly(w: f64) -> MarketInstance {
        MarketInstance::new(1.0, vec![0.0, 1.0], vec![2.0, S3])
            .unwrap()
            .with_network(pair(w))
            .unwrap()
    }

    #[test]
    fn bonacich_identities() {
        let i = duopoly(0.0);
        assert_eq!(bonacich(&i, 0.7, &[1.5, 2.5]).unwrap(), vec![1.5, 2.5]);
        let i = duopoly(0.3);
        assert_eq!(bonacich(&i, 0.0, &[1.5, 2.5]).unwrap(), vec![1.5, 2.5]);
        let b = bonacich(&i, 1.0, &[1.0, 1.0]).unwrap();
        assert!((b[0] - 1.0 / 0.7).abs() < 1e-14 && (b[1] - 1.0 / 0.7).abs() < 1e-14);
    }

    #[test]
    fn bonacich_errors() {
        let plain = MarketInstance::new(1.0, vec![1.0], vec![1.0, 1.0]).unwrap();
        assert!(matches!(bonacich(&plain, 1.0, &[1.0, 1.0]), Err(Error::NoNetwork)));
        let i = duopoly(0.5);
        assert!(matches!(
            bonacich(&i, 2.5, &[1.0, 1.0]),
            Err(Error::SpectralCondition { .. })
        ));
        assert!(matches!(bonacich(&i, 1.0, &[1.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn neumann_matches_solve() {
        let i = duopoly(0.9);
        let c = neumann_check(&i, 1.0, &[1.0, -2.0], NEUMANN_TERMS).unwrap();
        assert!(c.within, "{c:?}");
        assert!(c.tail_bound > 0.0);
        let c = neumann_check(&i, 1.0, &[1.0, -2.0], 5).unwrap();
        assert!(c.within && c.gap > 1e-3);
    }

    #[test]
    fn outputs_for_positive_network() {
        let i = duopoly(0.2);
        let o = network_outputs(&i).unwrap();
        // (I - W)^{-1} gamma for a 2x2 network by Cramer's rule
        let det = 1.0 - 0.04;
        let want = [(2.0 + 0.2 * S3) / det, (S3 + 0.2 * 2.0) / det];
        assert!(linalg::max_abs_diff(&o.planner.q, &want) < 1e-14);
        let det3 = 1.0 - 0.04 / 9.0;
        let want_d = [(2.0 + 0.2 / 3.0 * S3) / det3 / 3.0, (S3 + 0.2 / 3.0 * 2.0) / det3 / 3.0];
        assert!(linalg::max_abs_diff(&o.equilibrium.q, &want_d) < 1e-14);
        assert!(linalg::max_abs_diff(&o.monopoly.q, &linalg::scale(&o.planner.q, 0.5)) < 1e-15);
        assert!(o.monopoly_dominates);
        assert!(o.equilibrium.exists && o.planner.exists && o.monopoly.exists);
        assert!(o.fixed_point_residual.unwrap() <= FIXED_POINT_TOL);
        let x = o.equilibrium.allocation.as_ref().unwrap().x().to_vec();
        assert!(linalg::max_abs_diff(&x, &[0.0, 1.0]) < 1e-12);
    }

    #[test]
    fn negative_network_still_computes() {
        let i = duopoly(-0.2);
        let o = network_outputs(&i).unwrap();
        assert!(o.equilibrium.exists);
        assert!(o.fixed_point_residual.unwrap() <= FIXED_POINT_TOL);
    }

    #[test]
    fn empty_network_nests_baseline() {
        let i = duopoly(0.0);
        let base = i.without_extensions();
        let o = network_outputs(&i).unwrap();
        let d = differentiation_equilibrium(&base).unwrap().unwrap();
        assert_eq!(o.equilibrium.q, d.q());
        assert_eq!(o.equilibrium.allocation.as_ref().unwrap(), &d.allocation);
        let p = planner_optimum(&base).unwrap();
        assert_eq!(o.planner.q, p.q);
        assert_eq!(o.planner.allocation.as_ref().unwrap(), &p.allocation);
        assert_eq!(o.planner.welfare.unwrap(), p.welfare);
        let m = monopoly_optimum(&base).unwrap();
        assert_eq!(o.monopoly.q, m.q);
        assert_eq!(o.monopoly.welfare.unwrap(), m.welfare);
    }

    #[test]
    fn planner_maximizes_network_surplus() {
        let i = duopoly(0.3);
        let o = network_outputs(&i).unwrap();
        let best = o.planner.welfare.unwrap();
        for dq in [[0.01, 0.0], [-0.01, 0.0], [0.0, 0.01], [0.0, -0.01]] {
            let q = linalg::add(&o.planner.q, &dq);
            assert!(network_surplus(&i, &[0.0, 1.0], &q).unwrap() < best);
        }
    }

    #[test]
    fn best_response_adds_spillover() {
        let i = duopoly(0.25);
        let alloc = Allocation::new(
            crate::CharProfile::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap(),
            vec![1.0, 2.0],
        )
        .unwrap();
        let plain = crate::equilibrium::best_response(&i, &alloc, 0).unwrap();
        let br = network_best_response(&i, &alloc, 0).unwrap();
        assert!((br.output - plain.output - 0.25 * 2.0 / 4.0).abs() < 1e-15);
        assert_eq!(br.direction, plain.direction);
    }
}
