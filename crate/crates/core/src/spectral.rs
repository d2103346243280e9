//! Monopoly against oligopoly for a fixed demand system.
//!
//! With characteristics held fixed, welfare is `psi'q - q' Sigma q / 2`. The
//! planner, monopolist, and Cournot outputs are `Sigma^{-1} psi`, half of it,
//! and `(Sigma + lbar I)^{-1} psi`, where `lbar` is the common diagonal of
//! `Sigma`. Their welfare gap decomposes along the eigenvectors of `Sigma`:
//! `Omega* - Omega_m = (1/8) sum_i w_i (psi'u_i)^2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, dot, Matrix};
use crate::model::INVARIANT_TOL;
use crate::welfare::{concentration_inequality, ConcentrationInequality};

/// Relative tolerance under which the two sides of the ranking tie.
pub const RANKING_TOL: f64 = 1e-9;

/// Eigenvalues within this relative distance of `lbar` join the minor block.
const SNAP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpectral")]
pub struct SpectralInstance {
    psi: Vec<f64>,
    sigma: Matrix,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpectral {
    psi: Vec<f64>,
    sigma: Matrix,
}

impl TryFrom<RawSpectral> for SpectralInstance {
    type Error = Error;
    fn try_from(raw: RawSpectral) -> Result<Self> {
        SpectralInstance::new(raw.psi, raw.sigma)
    }
}

impl SpectralInstance {
    /// Requires `psi >> 0` and a symmetric positive-definite `sigma` whose
    /// diagonal is a common constant above one.
    pub fn new(psi: Vec<f64>, sigma: Matrix) -> Result<Self> {
        let n = psi.len();
        if n == 0 {
            return Err(Error::invalid("psi", "must have at least one entry"));
        }
        if sigma.rows() != n || sigma.cols() != n {
            return Err(Error::Dimension {
                what: "sigma",
                expected: n,
                got: sigma.rows().max(sigma.cols()),
            });
        }
        if psi
            .iter()
            .chain(sigma.to_rows().concat().iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::invalid("psi, sigma", "entries must be finite"));
        }
        if let Some(p) = psi.iter().find(|p| **p <= 0.0) {
            return Err(Error::invalid("psi", format!("entries must be positive, got {p}")));
        }
        if sigma.asymmetry() > INVARIANT_TOL {
            return Err(Error::invalid("sigma", "must be symmetric"));
        }
        let diag = sigma.diagonal();
        let lbar = diag[0];
        if diag.iter().any(|d| (d - lbar).abs() > INVARIANT_TOL) {
            return Err(Error::invalid("sigma", "diagonal entries must be equal"));
        }
        if lbar <= 1.0 {
            return Err(Error::invalid("sigma", format!("diagonal must exceed 1, got {lbar}")));
        }
        let eig = linalg::symmetric_eigen(&sigma)?;
        let min = eig.values.last().copied().unwrap_or(0.0);
        if min <= 0.0 {
            return Err(Error::invalid(
                "sigma",
                format!("must be positive definite, min eigenvalue {min}"),
            ));
        }
        Ok(SpectralInstance { psi, sigma })
    }

    /// `Sigma = alpha J + I` and `psi = alpha 1 + gamma`: every firm concentrated on `beta`.
    pub fn concentration(alpha: f64, gamma: &[f64]) -> Result<Self> {
        let n = gamma.len();
        let mut sigma = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                sigma[(i, j)] = alpha + if i == j { 1.0 } else { 0.0 };
            }
        }
        SpectralInstance::new(gamma.iter().map(|g| alpha + g).collect(), sigma)
    }

    pub fn n(&self) -> usize {
        self.psi.len()
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    pub fn sigma(&self) -> &Matrix {
        &self.sigma
    }

    /// The common diagonal entry, which is also the mean eigenvalue.
    pub fn lambda_bar(&self) -> f64 {
        self.sigma[(0, 0)]
    }

    /// `psi'q - q' Sigma q / 2`
    pub fn welfare(&self, q: &[f64]) -> f64 {
        dot(&self.psi, q) - 0.5 * self.sigma.quadratic_form(q)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralOutputs {
    pub planner: Vec<f64>,
    pub monopoly: Vec<f64>,
    pub oligopoly: Vec<f64>,
}

pub fn spectral_outputs(si: &SpectralInstance) -> Result<SpectralOutputs> {
    let n = si.n();
    let planner = linalg::solve(&si.sigma, &si.psi)?;
    let shifted = si.sigma.add(&Matrix::identity(n).scaled(si.lambda_bar()));
    let oligopoly = linalg::solve(&shifted, &si.psi)?;
    Ok(SpectralOutputs {
        monopoly: linalg::scale(&planner, 0.5),
        planner,
        oligopoly,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralWelfares {
    pub planner: f64,
    pub monopoly: f64,
    pub oligopoly: f64,
}

pub fn spectral_welfares(si: &SpectralInstance) -> Result<SpectralWelfares> {
    let q = spectral_outputs(si)?;
    Ok(SpectralWelfares {
        planner: si.welfare(&q.planner),
        monopoly: si.welfare(&q.monopoly),
        oligopoly: si.welfare(&q.oligopoly),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralVerdict {
    OligopolyBetter,
    MonopolyBetter,
    Tie,
}

impl SpectralVerdict {
    fn from_gap(gap: f64, scale: f64) -> Self {
        let tol = RANKING_TOL * scale.max(1.0);
        if gap > tol {
            SpectralVerdict::OligopolyBetter
        } else if gap < -tol {
            SpectralVerdict::MonopolyBetter
        } else {
            SpectralVerdict::Tie
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub lambda_bar: f64,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
    /// Number of eigenvalues strictly above `lambda_bar`.
    pub major_count: usize,
    /// `(l + 3 lbar)(l - lbar) / (l (l + lbar)^2)`, zero for eigenvalues snapped to `lbar`.
    pub weights: Vec<f64>,
    /// `(psi'u_i)^2`
    pub projections: Vec<f64>,
    /// `sum_{i <= k} |w_i| (psi'u_i)^2`
    pub major_mass: f64,
    /// `sum_{i > k} |w_i| (psi'u_i)^2`
    pub minor_mass: f64,
    pub outputs: SpectralOutputs,
    pub welfares: SpectralWelfares,
    /// `Omega* - Omega_m - (major - minor) / 8`
    pub identity_gap: f64,
    /// Verdict of the eigen-condition.
    pub verdict: SpectralVerdict,
    /// Verdict of the direct welfare difference.
    pub direct_verdict: SpectralVerdict,
}

impl SpectralReport {
    /// The two verdicts agree, counting a tie on either side as agreement.
    pub fn consistent(&self) -> bool {
        self.verdict == self.direct_verdict
            || self.verdict == SpectralVerdict::Tie
            || self.direct_verdict == SpectralVerdict::Tie
    }
}

/// `(l + 3 lbar)(l - lbar) / (l (l + lbar)^2)`
pub fn ranking_weight(lambda: f64, lambda_bar: f64) -> f64 {
    (lambda + 3.0 * lambda_bar) * (lambda - lambda_bar) / (lambda * (lambda + lambda_bar).powi(2))
}

/// Eigen-decomposes `Sigma` and ranks oligopoly against monopoly.
pub fn ranking_condition(si: &SpectralInstance) -> Result<SpectralReport> {
    let lbar = si.lambda_bar();
    let eig = linalg::symmetric_eigen(&si.sigma)?;
    let mut weights = Vec::with_capacity(si.n());
    let mut major_count = 0;
    for l in &eig.values {
        if (l - lbar).abs() <= SNAP_TOL * lbar {
            weights.push(0.0);
        } else {
            if *l > lbar {
                major_count += 1;
            }
            weights.push(ranking_weight(*l, lbar));
        }
    }
    let projections: Vec<f64> = eig.vectors.iter().map(|u| dot(&si.psi, u).powi(2)).collect();
    let mass = |range: std::ops::Range<usize>| -> f64 { range.map(|i| weights[i].abs() * projections[i]).sum() };
    let major_mass = mass(0..major_count);
    let minor_mass = mass(major_count..si.n());
    let outputs = spectral_outputs(si)?;
    let welfares = SpectralWelfares {
        planner: si.welfare(&outputs.planner),
        monopoly: si.welfare(&outputs.monopoly),
        oligopoly: si.welfare(&outputs.oligopoly),
    };
    let direct = welfares.oligopoly - welfares.monopoly;
    let scale = welfares.planner.abs();
    Ok(SpectralReport {
        lambda_bar: lbar,
        major_count,
        identity_gap: direct - (major_mass - minor_mass) / 8.0,
        verdict: SpectralVerdict::from_gap((major_mass - minor_mass) / 8.0, scale),
        direct_verdict: SpectralVerdict::from_gap(direct, scale),
        eigenvalues: eig.values,
        eigenvectors: eig.vectors,
        weights,
        projections,
        major_mass,
        minor_mass,
        outputs,
        welfares,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationSpecialization {
    pub inequality: ConcentrationInequality,
    pub report: SpectralReport,
    /// `sum_{i >= 2} (psi'u_i)^2`, which equals `n Var[gamma]`.
    pub minor_projection: f64,
    /// The inequality and the generic eigen-condition reach the same verdict.
    pub agrees: bool,
}

/// The concentration case `Sigma = alpha J + I`, `psi = alpha 1 + gamma`.
pub fn concentration_specialization(alpha: f64, gamma: &[f64]) -> Result<ConcentrationSpecialization> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid("alpha", "must be positive and finite"));
    }
    let si = SpectralInstance::concentration(alpha, gamma)?;
    let report = ranking_condition(&si)?;
    let inequality = concentration_inequality(alpha, gamma);
    let minor_projection = report.projections.iter().skip(report.major_count).sum();
    let agrees = match report.verdict {
        SpectralVerdict::OligopolyBetter => inequality.oligopoly_better,
        SpectralVerdict::MonopolyBetter => !inequality.oligopoly_better,
        SpectralVerdict::Tie => true,
    };
    Ok(ConcentrationSpecialization {
        inequality,
        report,
        minor_projection,
        agrees,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::welfare::gamma_variance;

    fn diag(n: usize, l: f64) -> Matrix {
        Matrix::identity(n).scaled(l)
    }

    #[test]
    fn validation() {
        assert!(SpectralInstance::new(vec![1.0, 1.0], diag(2, 2.0)).is_ok());
        assert!(SpectralInstance::new(vec![1.0, 0.0], diag(2, 2.0)).is_err());
        assert!(SpectralInstance::new(vec![1.0, 1.0], diag(2, 1.0)).is_err());
        let uneven = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 3.0]]).unwrap();
        assert!(SpectralInstance::new(vec![1.0, 1.0], uneven).is_err());
        let indefinite = Matrix::from_rows(&[vec![2.0, 3.0], vec![3.0, 2.0]]).unwrap();
        assert!(SpectralInstance::new(vec![1.0, 1.0], indefinite).is_err());
        let json = r#"{"psi": [1.0, 1.0], "sigma": [[2.0, 0.5], [0.5, 2.0]]}"#;
        let si: SpectralInstance = serde_json::from_str(json).unwrap();
        assert_eq!(si.lambda_bar(), 2.0);
        let back: SpectralInstance = serde_json::from_str(&serde_json::to_string(&si).unwrap()).unwrap();
        assert_eq!(back, si);
    }

    #[test]
    fn scalar_sigma_ties() {
        let si = SpectralInstance::new(vec![1.0, 1.0], diag(2, 2.0)).unwrap();
        let q = spectral_outputs(&si).unwrap();
        assert_eq!(q.planner, vec![0.5, 0.5]);
        assert_eq!(q.oligopoly, q.monopoly);
        let w = spectral_welfares(&si).unwrap();
        assert!((w.planner - 0.5).abs() < 1e-15);
        assert!((w.monopoly - 0.375).abs() < 1e-15);
        let r = ranking_condition(&si).unwrap();
        assert_eq!(r.major_count, 0);
        assert_eq!(r.verdict, SpectralVerdict::Tie);
        assert_eq!(r.direct_verdict, SpectralVerdict::Tie);
    }

    #[test]
    fn concentration_outputs_match_closed_form() {
        let si = SpectralInstance::concentration(1.0, &[0.3, 0.3]).unwrap();
        let q = spectral_outputs(&si).unwrap();
        for v in &q.oligopoly {
            assert!((v - 0.26).abs() < 1e-14);
        }
    }

    #[test]
    fn major_span_favours_oligopoly() {
        let si = SpectralInstance::concentration(1.0, &[0.3, 0.3, 0.3]).unwrap();
        let r = ranking_condition(&si).unwrap();
        assert_eq!(r.major_count, 1);
        assert!(r.minor_mass < 1e-20);
        assert_eq!(r.verdict, SpectralVerdict::OligopolyBetter);
        assert_eq!(r.direct_verdict, SpectralVerdict::OligopolyBetter);
    }

    #[test]
    fn example_concentration_eigenstructure() {
        let (a, gamma) = (0.8, [0.1, 0.5, 0.2, 0.05]);
        let s = concentration_specialization(a, &gamma).unwrap();
        let r = &s.report;
        let n = 4.0;
        assert!((r.eigenvalues[0] - (1.0 + n * a)).abs() < 1e-12);
        for l in &r.eigenvalues[1..] {
            assert!((l - 1.0).abs() < 1e-12);
        }
        assert_eq!(r.major_count, 1);
        assert!((s.minor_projection - n * gamma_variance(&gamma)).abs() < 1e-12);
        let w1 = a * (n - 1.0) * (4.0 + (n + 3.0) * a) / ((1.0 + n * a) * (2.0 + (n + 1.0) * a).powi(2));
        let w2 = -a * (4.0 + 3.0 * a) / (2.0 + a).powi(2);
        assert!((r.weights[0] - w1).abs() < 1e-12);
        for w in &r.weights[1..] {
            assert!((w - w2).abs() < 1e-12);
        }
        assert!(s.agrees);
    }

    #[test]
    fn uneven_duopoly_cross_check() {
        let s = concentration_specialization(1.0, &[0.9, 0.05]).unwrap();
        assert!(s.agrees);
        assert!(s.report.consistent());
        assert!(s.inequality.lhs > 0.0 && s.inequality.rhs > 0.0);
    }

    #[test]
    fn identity_and_invariants() {
        let sigma = Matrix::from_rows(&[vec![2.0, 0.7, -0.3], vec![0.7, 2.0, 0.4], vec![-0.3, 0.4, 2.0]]).unwrap();
        let si = SpectralInstance::new(vec![0.4, 1.1, 0.6], sigma.clone()).unwrap();
        let r = ranking_condition(&si).unwrap();
        assert!(r.identity_gap.abs() < 1e-12);
        assert!((r.welfares.monopoly / r.welfares.planner - 0.75).abs() < 1e-12);
        assert!(r.welfares.oligopoly <= r.welfares.planner);
        let parseval: f64 = r.projections.iter().sum();
        assert!((parseval - dot(si.psi(), si.psi())).abs() < 1e-12);
        let trace: f64 = r.eigenvalues.iter().sum();
        assert!((trace - 3.0 * r.lambda_bar).abs() < 1e-12);
        for (i, (l, u)) in r.eigenvalues.iter().zip(&r.eigenvectors).enumerate() {
            let res = linalg::sub(&sigma.mul_vec(u), &linalg::scale(u, *l));
            assert!(linalg::norm2(&res) < 1e-8);
            assert_eq!(r.weights[i] >= 0.0, i < r.major_count);
        }
        assert!(r.consistent());
    }

    #[test]
    fn polynomial_sufficiency_for_large_alpha() {
        let s = concentration_specialization(100.0, &[0.3, 0.6]).unwrap();
        assert!(s.inequality.polynomial_sufficient);
        assert!(s.inequality.oligopoly_better);
    }
}
