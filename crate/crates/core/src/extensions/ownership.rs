//! Common ownership.
//!
//! Firm `i` maximizes `Pi_i + sum_{j != i} kappa_ij Pi_j`. Rivals' columns then
//! weigh `(1 + kappa_ij) q_j` in firm `i`'s residual demand, which pushes firms
//! apart in characteristics and raises outputs.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::equilibrium::BestResponse;
use crate::error::{Error, Result};
use crate::geometry::{construct_profile, radii, BOUNDARY_SLACK};
use crate::linalg::{self, dot, norm2, Matrix};
use crate::model::{total_surplus, Allocation, CharProfile, MarketInstance, INVARIANT_TOL};
use crate::welfare::closed_form_cosine;

/// Step of the central difference in [`ownership_welfare_slope`].
pub const SLOPE_STEP: f64 = 1e-5;

/// Residual floor a first-best witness must clear.
pub const FIRST_BEST_FLOOR: f64 = 1e-6;

/// `(1 - kappa) I + kappa J`
pub fn common_ownership(n: usize, kappa: f64) -> Matrix {
    let mut rows = vec![vec![kappa; n]; n];
    for (i, row) in rows.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    Matrix::from_rows(&rows).expect("square rows")
}

/// `2 + alpha (1 - kappa)`
fn denominator(alpha: f64, kappa: f64) -> f64 {
    2.0 + alpha * (1.0 - kappa)
}

fn check_kappa(alpha: f64, kappa: f64) -> Result<()> {
    if !(kappa.is_finite() && kappa >= 0.0) {
        return Err(Error::invalid(
            "kappa",
            format!("must be finite and nonnegative, got {kappa}"),
        ));
    }
    if denominator(alpha, kappa) <= 0.0 {
        return Err(Error::invalid(
            "kappa",
            format!("2 + alpha (1 - kappa) must be positive, got kappa {kappa}"),
        ));
    }
    Ok(())
}

/// The common off-diagonal weight of the instance's ownership matrix, if it has one.
pub fn common_kappa(inst: &MarketInstance) -> Result<Option<f64>> {
    let Some(k) = inst.ownership() else {
        return Ok(None);
    };
    let n = inst.n();
    let mut first = None;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let v = k[(i, j)];
            match first {
                None => first = Some(v),
                Some(f) if (v - f).abs() > INVARIANT_TOL => {
                    return Err(Error::AsymmetricOwnership(format!(
                        "entry ({i}, {j}) is {v}, expected {f}"
                    )))
                }
                _ => {}
            }
        }
    }
    Ok(Some(first.unwrap_or(0.0)))
}

/// `sqrt(kappa (2 + alpha (1 - kappa)) / ((1 + kappa)(1 + alpha (1 - kappa))))`
pub fn discount_factor(alpha: f64, kappa: f64) -> f64 {
    let d = denominator(alpha, kappa);
    (kappa * d / ((1.0 + kappa) * (d - 1.0))).sqrt()
}

/// Welfare of the symmetric-ownership differentiation equilibrium.
pub fn ownership_welfare(alpha: f64, kappa: f64, gamma: &[f64]) -> f64 {
    let d = denominator(alpha, kappa);
    let g2 = dot(gamma, gamma);
    alpha * (1.0 + 2.0 * kappa) / (2.0 * (1.0 + kappa).powi(2))
        + g2 * (3.0 + 2.0 * alpha * (1.0 - kappa)) / (2.0 * d * d)
}

/// Derivative of [`ownership_welfare`] in `kappa`.
pub fn ownership_welfare_derivative(alpha: f64, kappa: f64, gamma: &[f64]) -> f64 {
    let d = denominator(alpha, kappa);
    alpha * ((d - 1.0) / d.powi(3) * dot(gamma, gamma) - kappa / (1.0 + kappa).powi(3))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OwnershipEquilibrium {
    pub kappa: f64,
    pub allocation: Allocation,
    /// `beta / (1 + kappa)`
    pub target: Vec<f64>,
    /// Closed-form weighted cosine; `None` for a single firm.
    pub cosine: Option<f64>,
    /// Closed-form welfare.
    pub welfare: f64,
    /// Welfare evaluated directly at the constructed allocation.
    pub welfare_direct: f64,
    /// The existence condition holds with equality.
    pub boundary: bool,
    /// `kappa > 1`, where the ownership matrix is no longer positive semidefinite.
    pub outside_unit_interval: bool,
}

impl OwnershipEquilibrium {
    pub fn q(&self) -> &[f64] {
        self.allocation.q()
    }
}

/// The differentiation equilibrium under symmetric common ownership `kappa`.
///
/// Present iff `r(gamma) <= (2 + alpha (1 - kappa)) / (1 + kappa) <= R(gamma)`
/// and `m >= 2`. A stored ownership matrix must equal `common_ownership(n, kappa)`.
pub fn ownership_equilibrium(inst: &MarketInstance, kappa: f64) -> Result<Option<OwnershipEquilibrium>> {
    ownership_equilibrium_with(inst, kappa, false)
}

pub fn ownership_equilibrium_with(
    inst: &MarketInstance,
    kappa: f64,
    mirror: bool,
) -> Result<Option<OwnershipEquilibrium>> {
    let a = inst.alpha();
    check_kappa(a, kappa)?;
    if let Some(stored) = common_kappa(inst)? {
        if (stored - kappa).abs() > INVARIANT_TOL {
            return Err(Error::AsymmetricOwnership(format!(
                "stored weight {stored} differs from requested {kappa}"
            )));
        }
    }
    if inst.m() < 2 {
        return Ok(None);
    }
    let d = denominator(a, kappa);
    let level = d / (1.0 + kappa);
    let rad = radii(inst.gamma());
    let scale = rad.outer.max(1.0);
    let slack = BOUNDARY_SLACK * scale;
    if rad.inner > level + slack || rad.outer < level - slack {
        return Ok(None);
    }
    let q = linalg::scale(inst.gamma(), 1.0 / d);
    let target = linalg::scale(inst.beta(), 1.0 / (1.0 + kappa));
    let profile = construct_profile(&q, &target, mirror)?;
    let allocation = Allocation::new(profile, q)?;
    let cosine = if inst.n() >= 2 {
        Some(closed_form_cosine(1.0 / (1.0 + kappa), 1.0 / d, inst.gamma())?)
    } else {
        None
    };
    let near = |v: f64| (v - level).abs() <= 1e-9 * scale;
    Ok(Some(OwnershipEquilibrium {
        kappa,
        target,
        cosine,
        welfare: ownership_welfare(a, kappa, inst.gamma()),
        welfare_direct: total_surplus(&inst.without_extensions(), &allocation)?,
        boundary: near(rad.inner) || near(rad.outer),
        outside_unit_interval: kappa > 1.0,
        allocation,
    }))
}

fn check_square(k: &Matrix, n: usize) -> Result<()> {
    if k.rows() != n || k.cols() != n {
        return Err(Error::Dimension {
            what: "ownership",
            expected: n,
            got: k.rows().max(k.cols()),
        });
    }
    Ok(())
}

/// Firm `i`'s best response when it weighs rival `j`'s profit by `k[(i, j)]`.
pub fn ownership_best_response(
    inst: &MarketInstance,
    k: &Matrix,
    alloc: &Allocation,
    i: usize,
) -> Result<BestResponse> {
    check_square(k, inst.n())?;
    inst.check_allocation(alloc)?;
    inst.check_index(i)?;
    let mut resid = inst.beta().to_vec();
    for j in (0..inst.n()).filter(|j| *j != i) {
        let w = (1.0 + k[(i, j)]) * alloc.q()[j];
        linalg::axpy(&mut resid, -w, alloc.profile().column(j));
    }
    let delta = norm2(&resid);
    let a = inst.alpha();
    Ok(BestResponse {
        delta,
        direction: (delta > 1e-14).then(|| linalg::scale(&resid, 1.0 / delta)),
        output: (a * delta + inst.gamma()[i]) / (2.0 * (1.0 + a)),
    })
}

/// Largest violation of the equilibrium conditions under ownership `k` at the
/// first-best allocation `(A, gamma)` with `A gamma = beta`:
/// `max_i ||gamma_i a_i + alpha sum_j k_ij gamma_j a_j||`.
pub fn first_best_residual(inst: &MarketInstance, k: &Matrix, profile: &CharProfile) -> Result<f64> {
    let n = inst.n();
    check_square(k, n)?;
    let g = inst.gamma();
    let a = inst.alpha();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let mut v = linalg::scale(profile.column(i), g[i]);
        for j in 0..n {
            linalg::axpy(&mut v, a * k[(i, j)] * g[j], profile.column(j));
        }
        worst = worst.max(norm2(&v));
    }
    Ok(worst)
}

/// A random admissible ownership matrix: nonnegative, unit diagonal, positive
/// semidefinite symmetric part, and generally asymmetric.
#[allow(clippy::needless_range_loop)]
pub fn random_ownership<R: Rng>(n: usize, rng: &mut R) -> Matrix {
    let b: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen::<f64>()).collect()).collect();
    let mut s = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            s[i][j] = (0..n).map(|t| b[t][i] * b[t][j]).sum();
        }
    }
    let d: Vec<f64> = (0..n).map(|i| s[i][i].sqrt()).collect();
    let mut k: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { 1.0 } else { s[i][j] / (d[i] * d[j]) })
                .collect()
        })
        .collect();
    // antisymmetric tilt that keeps entries nonnegative and the symmetric part unchanged
    for i in 0..n {
        for j in (i + 1)..n {
            let t = rng.gen_range(-1.0..=1.0) * k[i][j];
            k[i][j] += t;
            k[j][i] -= t;
        }
    }
    Matrix::from_rows(&k).expect("square rows")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstBestReport {
    pub trials: usize,
    /// Smallest residual per trial, over both profile branches.
    pub residuals: Vec<f64>,
    pub min_residual: f64,
    /// `||gamma||_2^2 / ||gamma||_1`, a lower bound for every residual.
    pub lower_bound: f64,
    /// Every residual clears [`FIRST_BEST_FLOOR`].
    pub confirmed: bool,
}

/// Evaluates the first-best residual for each ownership matrix in `ks`.
///
/// Fails with [`Error::Infeasible`] when no profile delivers `A gamma = beta`.
pub fn first_best_infeasibility_check(inst: &MarketInstance, ks: &[Matrix]) -> Result<FirstBestReport> {
    let profiles = [
        construct_profile(inst.gamma(), inst.beta(), false)?,
        construct_profile(inst.gamma(), inst.beta(), true)?,
    ];
    let mut residuals = Vec::with_capacity(ks.len());
    for k in ks {
        let mut best = f64::INFINITY;
        for p in &profiles {
            best = best.min(first_best_residual(inst, k, p)?);
        }
        residuals.push(best);
    }
    let min_residual = residuals.iter().copied().fold(f64::INFINITY, f64::min);
    let g = inst.gamma();
    Ok(FirstBestReport {
        trials: ks.len(),
        confirmed: residuals.iter().all(|r| *r > FIRST_BEST_FLOOR),
        residuals,
        min_residual,
        lower_bound: dot(g, g) / linalg::norm1(g),
    })
}

/// [`first_best_infeasibility_check`] over `trials` matrices from [`random_ownership`].
pub fn first_best_random_trials(inst: &MarketInstance, trials: usize, seed: u64) -> Result<FirstBestReport> {
    let mut rng = StdRng::seed_from_u64(seed);
    let ks: Vec<Matrix> = (0..trials).map(|_| random_ownership(inst.n(), &mut rng)).collect();
    first_best_infeasibility_check(inst, &ks)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelfareSlope {
    pub kappa: f64,
    /// `||gamma||_2 > f(alpha, kappa) (2 + alpha (1 - kappa)) / (1 + kappa)`
    pub condition: bool,
    pub threshold: f64,
    pub analytic: f64,
    /// Central difference of the closed-form welfare.
    pub numeric: f64,
    /// The sign of `numeric` matches `condition`, or `numeric` is within `1e-9` of zero.
    pub agrees: bool,
}

/// Compares the welfare-increase condition with a finite-difference slope.
pub fn ownership_welfare_slope(inst: &MarketInstance, kappa: f64) -> Result<WelfareSlope> {
    let a = inst.alpha();
    let lo = kappa - SLOPE_STEP;
    let hi = kappa + SLOPE_STEP;
    check_kappa(a, kappa)?;
    let base = inst.without_extensions();
    for k in [lo.max(0.0), kappa, hi] {
        if ownership_equilibrium(&base, k)?.is_none() {
            return Err(Error::Absent("ownership equilibrium"));
        }
    }
    let g = inst.gamma();
    let threshold = discount_factor(a, kappa) * denominator(a, kappa) / (1.0 + kappa);
    let condition = norm2(g) > threshold;
    let numeric = (ownership_welfare(a, hi, g) - ownership_welfare(a, lo, g)) / (2.0 * SLOPE_STEP);
    Ok(WelfareSlope {
        kappa,
        condition,
        threshold,
        analytic: ownership_welfare_derivative(a, kappa, g),
        numeric,
        agrees: numeric.abs() <= 1e-9 || (numeric > 0.0) == condition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{best_response, differentiation_equilibrium};
    use crate::welfare::weighted_cosine;

    const S3: f64 = 1.732_050_807_568_877_2;

    fn duopoly() -> MarketInstance {
        MarketInstance::new(1.0, vec![0.0, 1.0], vec![2.0, S3]).unwrap()
    }

    #[test]
    fn duopoly_at_two_thirds() {
        let e = ownership_equilibrium(&duopoly(), 2.0 / 3.0).unwrap().unwrap();
        assert!((e.q()[0] - 6.0 / 7.0).abs() < 1e-12);
        assert!((e.q()[1] - 3.0 * S3 / 7.0).abs() < 1e-12);
        assert!(linalg::max_abs_diff(e.allocation.x(), &[0.0, 0.6]) < 1e-10);
        assert!((e.welfare - e.welfare_direct).abs() < 1e-12);
    }

    #[test]
    fn duopoly_cosine_over_kappa() {
        for t in 0..=20 {
            let k = t as f64 / 20.0;
            let e = ownership_equilibrium(&duopoly(), k).unwrap().unwrap();
            assert!((e.q()[0] - 2.0 / (3.0 - k)).abs() < 1e-12);
            assert!((e.q()[1] - S3 / (3.0 - k)).abs() < 1e-12);
            let cos = (1.0 - 10.0 * k - 3.0 * k * k) / (2.0 * S3 * (1.0 + k).powi(2));
            assert!((e.allocation.profile().cosine(0, 1) - cos).abs() < 1e-10, "kappa {k}");
            let measured = weighted_cosine(duopoly().gamma(), e.allocation.profile()).unwrap();
            assert!((e.cosine.unwrap() - measured).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_kappa_nests_baseline() {
        let i = duopoly();
        let e = ownership_equilibrium(&i, 0.0).unwrap().unwrap();
        let d = differentiation_equilibrium(&i).unwrap().unwrap();
        assert_eq!(e.allocation, d.allocation);
        let k = common_ownership(2, 0.0);
        for j in 0..2 {
            assert_eq!(
                ownership_best_response(&i, &k, &d.allocation, j).unwrap(),
                best_response(&i, &d.allocation, j).unwrap()
            );
        }
    }

    #[test]
    fn fixed_point_of_best_responses() {
        let i = MarketInstance::new(0.8, vec![0.6, 0.0, 0.8], vec![1.5, 1.2, 0.9]).unwrap();
        for kappa in [0.0, 0.3, 0.7, 1.0] {
            let Some(e) = ownership_equilibrium(&i, kappa).unwrap() else {
                continue;
            };
            let k = common_ownership(3, kappa);
            for j in 0..3 {
                let br = ownership_best_response(&i, &k, &e.allocation, j).unwrap();
                assert!((br.output - e.q()[j]).abs() < 1e-9, "kappa {kappa}");
                let dir = br.direction.unwrap();
                assert!(linalg::max_abs_diff(&dir, e.allocation.profile().column(j)) < 1e-9);
            }
        }
    }

    #[test]
    fn full_ownership_hand_case() {
        let i = MarketInstance::new(1.0, vec![1.0, 0.0], vec![1.0, 1.0]).unwrap();
        let p = CharProfile::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let alloc = Allocation::new(p, vec![0.3, 0.5]).unwrap();
        let br = ownership_best_response(&i, &common_ownership(2, 1.0), &alloc, 0).unwrap();
        assert!(br.delta.abs() < 1e-15);
        assert!(br.direction.is_none());
        assert_eq!(br.output, 0.25);
    }

    #[test]
    fn rejects_unequal_weights() {
        let k = Matrix::from_rows(&[vec![1.0, 0.2, 0.3], vec![0.2, 1.0, 0.2], vec![0.3, 0.2, 1.0]]).unwrap();
        let i = MarketInstance::new(1.0, vec![1.0, 0.0], vec![1.0, 1.0, 1.0])
            .unwrap()
            .with_ownership(k)
            .unwrap();
        assert!(matches!(
            ownership_equilibrium(&i, 0.2),
            Err(Error::AsymmetricOwnership(_))
        ));
        let j = i.without_extensions().with_ownership(common_ownership(3, 0.2)).unwrap();
        assert!(ownership_equilibrium(&j, 0.2).unwrap().is_some());
        assert!(matches!(
            ownership_equilibrium(&j, 0.5),
            Err(Error::AsymmetricOwnership(_))
        ));
    }

    #[test]
    fn existence_condition() {
        // (3 - kappa) / (1 + kappa) <= R = 1.4 needs kappa >= 1.6 / 2.4
        let i = MarketInstance::new(1.0, vec![0.0, 1.0], vec![0.7, 0.7]).unwrap();
        assert!(ownership_equilibrium(&i, 0.6).unwrap().is_none());
        let e = ownership_equilibrium(&i, 0.7).unwrap().unwrap();
        assert!(!e.outside_unit_interval);
        let e = ownership_equilibrium(&i, 1.5).unwrap().unwrap();
        assert!(e.outside_unit_interval);
        assert!(ownership_equilibrium(&i, -0.1).is_err());
        assert!(ownership_equilibrium(&i, 4.0).is_err());
    }

    #[test]
    fn welfare_closed_form_matches_direct() {
        let i = duopoly();
        for t in 0..=10 {
            let e = ownership_equilibrium(&i, t as f64 / 10.0).unwrap().unwrap();
            assert!((e.welfare - e.welfare_direct).abs() < 1e-9);
        }
    }

    #[test]
    fn discount_factor_in_unit_interval() {
        for ai in 1..=100 {
            for ki in 0..=20 {
                let f = discount_factor(ai as f64 / 10.0, ki as f64 / 20.0);
                assert!((0.0..=1.0 + 1e-15).contains(&f));
            }
        }
        assert_eq!(discount_factor(1.0, 0.0), 0.0);
    }

    #[test]
    fn slope_signs() {
        let s = ownership_welfare_slope(&duopoly(), 0.0).unwrap();
        assert!(s.condition && s.numeric > 0.0 && s.agrees);
        let s = ownership_welfare_slope(&duopoly(), 0.5).unwrap();
        assert!(s.agrees);
        assert!((s.numeric - s.analytic).abs() < 1e-8);
    }

    #[test]
    fn slope_can_be_negative() {
        // existence needs kappa >= 0.9; ||gamma||^2 = 0.605 sits below the threshold there
        let i = MarketInstance::new(1.0, vec![0.0, 1.0], vec![0.55, 0.55]).unwrap();
        let s = ownership_welfare_slope(&i, 0.95).unwrap();
        assert!(!s.condition && s.numeric < 0.0 && s.agrees);
    }

    #[test]
    fn first_best_never_an_equilibrium() {
        let i = duopoly();
        let ks: Vec<Matrix> = (0..=10).map(|t| common_ownership(2, t as f64 / 10.0)).collect();
        let r = first_best_infeasibility_check(&i, &ks).unwrap();
        assert!(r.confirmed);
        assert!(r.residuals.iter().all(|v| *v >= r.lower_bound - 1e-12));
        // kappa = 0: each column contributes (1 + alpha) gamma_i
        assert!((r.residuals[0] - 2.0 * 2.0).abs() < 1e-12);

        let i = MarketInstance::new(0.7, vec![0.0, 0.6, 0.8], vec![0.5, 0.4, 0.3]).unwrap();
        let r = first_best_random_trials(&i, 200, 7).unwrap();
        assert!(r.confirmed && r.min_residual >= r.lower_bound - 1e-12);
    }

    #[test]
    fn random_ownership_is_admissible() {
        let mut rng = StdRng::seed_from_u64(3);
        for n in 1..6 {
            let k = random_ownership(n, &mut rng);
            let i = MarketInstance::new(1.0, vec![1.0], vec![1.0; n]).unwrap();
            assert!(i.with_ownership(k).is_ok());
        }
    }
}
