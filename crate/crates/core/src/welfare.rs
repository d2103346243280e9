//! Welfare levels and rankings across market structures and equilibria.

use serde::{Deserialize, Serialize};

use crate::benchmark::{monopoly_optimum, planner_optimum, Regime};
use crate::equilibrium::{differentiation_equilibrium, sign_vector_equilibrium};
use crate::error::{Error, Result};
use crate::geometry::{radii, BOUNDARY_SLACK};
use crate::linalg::{self, dot};
use crate::model::{surplus_formula, total_surplus, CharProfile, MarketInstance};

/// Absolute tolerance under which two welfare levels count as equal.
pub const WELFARE_TOL: f64 = 1e-9;

/// `(||gamma||^2 - R(gamma)^2 / n) / n`
pub fn gamma_variance(gamma: &[f64]) -> f64 {
    let n = gamma.len() as f64;
    let r = linalg::norm1(gamma);
    ((dot(gamma, gamma) - r * r / n) / n).max(0.0)
}

/// `gamma`-weighted mean cosine over unordered firm pairs.
pub fn weighted_cosine(gamma: &[f64], profile: &CharProfile) -> Result<f64> {
    let n = profile.n();
    if n < 2 {
        return Err(Error::invalid("profile", "needs at least two firms"));
    }
    if gamma.len() != n {
        return Err(Error::Dimension {
            what: "gamma",
            expected: n,
            got: gamma.len(),
        });
    }
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            s += gamma[i] * gamma[j] * profile.cosine(i, j);
        }
    }
    Ok(2.0 * s / (n * (n - 1)) as f64)
}

/// Weighted cosine of any profile with `A q = c beta` and `q = d gamma`.
pub fn closed_form_cosine(c: f64, d: f64, gamma: &[f64]) -> Result<f64> {
    let n = gamma.len();
    if n < 2 {
        return Err(Error::invalid("gamma", "needs at least two firms"));
    }
    if !(c > 0.0 && d > 0.0) {
        return Err(Error::invalid("c, d", "must be positive"));
    }
    Ok((c * c / (d * d) - dot(gamma, gamma)) / (n * (n - 1)) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    LeftBetter,
    RightBetter,
    Tie,
}

impl Verdict {
    pub fn from_difference(diff: f64, tol: f64) -> Self {
        if diff > tol {
            Verdict::LeftBetter
        } else if diff < -tol {
            Verdict::RightBetter
        } else {
            Verdict::Tie
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelfareComparison {
    pub left: String,
    pub left_welfare: f64,
    pub right: String,
    pub right_welfare: f64,
    /// What the governing result predicts; `None` where it is silent.
    pub predicted: Option<Verdict>,
    pub observed: Verdict,
    /// Largest gap between closed-form and directly evaluated welfare.
    pub closed_form_gap: Option<f64>,
}

impl WelfareComparison {
    /// A numerical tie is compatible with any prediction.
    pub fn agrees(&self) -> Option<bool> {
        self.predicted
            .map(|p| p == self.observed || self.observed == Verdict::Tie)
    }
}

fn condition_d(inst: &MarketInstance) -> Result<()> {
    let rad = radii(inst.gamma());
    let k = 2.0 + inst.alpha();
    let slack = BOUNDARY_SLACK * rad.outer.max(1.0);
    if rad.inner <= 1.0 + slack && rad.outer >= k - slack {
        Ok(())
    } else {
        Err(Error::Hypothesis(format!(
            "differentiation in all three structures needs r(gamma) <= 1 and R(gamma) >= {k}; got r = {}, R = {}",
            rad.inner, rad.outer
        )))
    }
}

/// `||gamma||` above which monopoly beats the differentiation equilibrium.
pub fn mono_diff_threshold(alpha: f64) -> f64 {
    (2.0 + alpha) / (4.0 + 3.0 * alpha).sqrt()
}

/// Monopoly (left) against the differentiation equilibrium (right).
pub fn compare_mono_vs_diff(inst: &MarketInstance) -> Result<WelfareComparison> {
    condition_d(inst)?;
    let a = inst.alpha();
    let g2 = dot(inst.gamma(), inst.gamma());
    let mono = monopoly_optimum(inst)?;
    let diff = differentiation_equilibrium(inst)?.ok_or(Error::Absent("differentiation equilibrium"))?;
    let omega_d = total_surplus(inst, &diff.allocation)?;
    let closed_d = a / 2.0 + (3.0 + 2.0 * a) * g2 / (2.0 * (2.0 + a).powi(2));
    let closed_m = 3.0 * a / 8.0 + 3.0 * g2 / 8.0;
    let gap = (closed_d - omega_d).abs().max((closed_m - mono.welfare).abs());
    let thr = mono_diff_threshold(a);
    let predicted = Verdict::from_difference(g2.sqrt() - thr, 0.0);
    Ok(WelfareComparison {
        left: "monopoly".into(),
        left_welfare: mono.welfare,
        right: "differentiation".into(),
        right_welfare: omega_d,
        predicted: Some(predicted),
        observed: Verdict::from_difference(mono.welfare - omega_d, WELFARE_TOL),
        closed_form_gap: Some(gap),
    })
}

/// Lower cutoff on `sigma^T gamma` below which differentiation wins.
pub fn diff_sigma_lower_cutoff(n: usize, alpha: f64) -> f64 {
    let n = n as f64;
    n * alpha * (2.0 + alpha) / (2.0 * (1.0 + alpha) * (2.0 + (n + 1.0) * alpha) + n * alpha)
}

/// Differentiation equilibrium (left) against the sign-vector equilibrium `sigma` (right).
pub fn compare_diff_vs_sigma(inst: &MarketInstance, sigma: &[i8]) -> Result<WelfareComparison> {
    let diff = differentiation_equilibrium(inst)?.ok_or(Error::Absent("differentiation equilibrium"))?;
    let rec = sign_vector_equilibrium(inst, sigma)?.ok_or(Error::Absent("sign-vector equilibrium"))?;
    let a = inst.alpha();
    let s: f64 = sigma.iter().zip(inst.gamma()).map(|(s, g)| f64::from(*s) * g).sum();
    let k = 2.0 + a;
    let tie_band = 1e-12 * linalg::norm1(inst.gamma()).max(1.0);
    let predicted = if s > k + tie_band || s < diff_sigma_lower_cutoff(inst.n(), a) {
        Some(Verdict::LeftBetter)
    } else if (s - k).abs() <= tie_band {
        Some(Verdict::Tie)
    } else {
        None
    };
    let left = total_surplus(inst, &diff.allocation)?;
    let right = total_surplus(inst, &rec.allocation)?;
    Ok(WelfareComparison {
        left: "differentiation".into(),
        left_welfare: left,
        right: format!("sign_vector{sigma:?}"),
        right_welfare: right,
        predicted,
        observed: Verdict::from_difference(left - right, WELFARE_TOL),
        closed_form_gap: None,
    })
}

/// Both sides of the concentration-case ranking inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationInequality {
    pub lhs: f64,
    pub rhs: f64,
    pub oligopoly_better: bool,
    /// `Var[gamma] = 0`, which makes the right side vanish.
    pub zero_variance: bool,
    /// The parameter-only sufficient condition `f > g` that covers every `gamma` with `R(gamma) <= 1`.
    pub polynomial_sufficient: bool,
}

/// Concentration equilibrium against monopoly when both concentrate on `beta`.
///
/// Left side `(n-1)(4+(n+3)a)(a+R/n)^2 / ((1+na)(2+(n+1)a)^2)`, right side
/// `(4+3a) Var[gamma] / (2+a)^2`; oligopoly wins iff left exceeds right.
pub fn concentration_inequality(alpha: f64, gamma: &[f64]) -> ConcentrationInequality {
    let a = alpha;
    let nf = gamma.len() as f64;
    let r = linalg::norm1(gamma);
    let var = gamma_variance(gamma);
    let lhs =
        (nf - 1.0) * (4.0 + (nf + 3.0) * a) * (a + r / nf).powi(2) / ((1.0 + nf * a) * (2.0 + (nf + 1.0) * a).powi(2));
    let rhs = (4.0 + 3.0 * a) * var / (2.0 + a).powi(2);
    let f = a * a * nf * nf * (2.0 + a).powi(2) * (4.0 + (nf + 3.0) * a);
    let g = (1.0 + nf * a) * (4.0 + 3.0 * a) * (2.0 + (nf + 1.0) * a).powi(2);
    ConcentrationInequality {
        lhs,
        rhs,
        oligopoly_better: lhs > rhs,
        zero_variance: var.abs() <= 1e-15 * dot(gamma, gamma).max(1.0),
        polynomial_sufficient: f > g,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonoConcComparison {
    pub comparison: WelfareComparison,
    pub inequality: ConcentrationInequality,
}

/// Concentration equilibrium (left) against monopoly (right); needs `R(gamma) <= 1`.
pub fn compare_mono_vs_conc(inst: &MarketInstance) -> Result<MonoConcComparison> {
    let r = linalg::norm1(inst.gamma());
    if r > 1.0 + BOUNDARY_SLACK {
        return Err(Error::Hypothesis(format!(
            "concentration in both structures needs R(gamma) <= 1, got {r}"
        )));
    }
    let conc = sign_vector_equilibrium(inst, &vec![1; inst.n()])?.ok_or(Error::Absent("concentration equilibrium"))?;
    let mono = monopoly_optimum(inst)?;
    let left = total_surplus(inst, &conc.allocation)?;
    let ineq = concentration_inequality(inst.alpha(), inst.gamma());
    let predicted = if ineq.oligopoly_better {
        Verdict::LeftBetter
    } else if ineq.lhs < ineq.rhs {
        Verdict::RightBetter
    } else {
        Verdict::Tie
    };
    Ok(MonoConcComparison {
        comparison: WelfareComparison {
            left: "concentration".into(),
            left_welfare: left,
            right: "monopoly".into(),
            right_welfare: mono.welfare,
            predicted: Some(predicted),
            observed: Verdict::from_difference(left - mono.welfare, WELFARE_TOL),
            closed_form_gap: None,
        },
        inequality: ineq,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CosineComparison {
    pub planner: f64,
    pub planner_closed_form: f64,
    pub differentiation: f64,
    pub differentiation_closed_form: f64,
}

/// Weighted cosines of the planner and differentiation profiles, computed
/// pairwise and from the closed form, under the same hypothesis as
/// [`compare_mono_vs_diff`].
pub fn compare_cosines(inst: &MarketInstance) -> Result<CosineComparison> {
    condition_d(inst)?;
    let gamma = inst.gamma();
    let planner = planner_optimum(inst)?;
    let diff = differentiation_equilibrium(inst)?.ok_or(Error::Absent("differentiation equilibrium"))?;
    Ok(CosineComparison {
        planner: weighted_cosine(gamma, planner.allocation.profile())?,
        planner_closed_form: closed_form_cosine(1.0, 1.0, gamma)?,
        differentiation: weighted_cosine(gamma, diff.allocation.profile())?,
        differentiation_closed_form: closed_form_cosine(1.0, 1.0 / (2.0 + inst.alpha()), gamma)?,
    })
}

/// Symmetric per-firm outputs; `None` where the allocation does not exist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricOutputs {
    pub planner: f64,
    pub monopoly: f64,
    pub differentiation: Option<f64>,
    pub concentration: Option<f64>,
    pub polarization_plus: Option<f64>,
    pub polarization_minus: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricCutoffs {
    pub planner: f64,
    pub differentiation: f64,
    pub concentration: f64,
    /// `None` for odd `n`.
    pub polarization: Option<f64>,
}

pub fn symmetric_cutoffs(n: usize, alpha: f64) -> SymmetricCutoffs {
    let nf = n as f64;
    let a = alpha;
    SymmetricCutoffs {
        planner: 1.0 / nf,
        differentiation: (2.0 + a) / nf,
        concentration: 2.0 * (1.0 + a) / (nf - 1.0),
        polarization: n
            .is_multiple_of(2)
            .then(|| 2.0 * (1.0 + a) * (2.0 + a) / (2.0 + (nf + 1.0) * a)),
    }
}

/// One row of the symmetric welfare table, `gamma_i = gamma` for every firm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricRow {
    pub n: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub planner_regime: Regime,
    pub planner: f64,
    pub monopoly: f64,
    pub differentiation: Option<f64>,
    pub concentration: Option<f64>,
    pub polarization: Option<f64>,
    pub outputs: SymmetricOutputs,
    /// Largest gap between a closed-form cell and direct surplus evaluation.
    pub max_gap: f64,
    /// Whether the closed-form existence cutoffs agree with the equilibrium engine.
    pub existence_agrees: bool,
}

fn ge(v: f64, cut: f64) -> bool {
    v >= cut - BOUNDARY_SLACK * cut.abs().max(1.0)
}

/// Closed-form welfare cells for the symmetric case, each checked against
/// direct surplus evaluation at its allocation.
///
/// Every cell is first checked at the closed-form outputs; for `gamma > 0` the
/// planner, monopoly, and equilibrium engines are also run on a two-dimensional
/// instance and their welfare compared with the cell.
pub fn symmetric_welfare_table(n: usize, alpha: f64, gamma: f64) -> Result<SymmetricRow> {
    if n < 2 {
        return Err(Error::invalid("n", "the symmetric table needs at least two firms"));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::invalid("alpha", "must be positive"));
    }
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::invalid("gamma", "must be nonnegative"));
    }
    let nf = n as f64;
    let a = alpha;
    let g = gamma;
    let cut = symmetric_cutoffs(n, a);

    let (planner_regime, q_planner, planner) = if g <= cut.planner {
        (
            Regime::Concentration,
            (g + a) / (1.0 + nf * a),
            nf * (a + g).powi(2) / (2.0 * (1.0 + nf * a)),
        )
    } else {
        (Regime::Differentiation, g, (a + nf * g * g) / 2.0)
    };
    let has_d = ge(g, cut.differentiation);
    let has_c = ge(cut.concentration, g);
    let has_p = cut.polarization.is_some_and(|c| ge(g, c));
    let pol_shift = a / (2.0 + (nf + 1.0) * a);
    let outputs = SymmetricOutputs {
        planner: q_planner,
        monopoly: q_planner / 2.0,
        differentiation: has_d.then_some(g / (2.0 + a)),
        concentration: has_c.then_some((g + a) / (2.0 + (nf + 1.0) * a)),
        polarization_plus: has_p.then_some(g / (2.0 + a) + pol_shift),
        polarization_minus: has_p.then_some(g / (2.0 + a) - pol_shift),
    };
    let differentiation = has_d.then(|| a / 2.0 + nf * g * g * (3.0 + 2.0 * a) / (2.0 * (2.0 + a).powi(2)));
    let concentration =
        has_c.then(|| nf * (a + g).powi(2) * (3.0 + (nf + 2.0) * a) / (2.0 * (2.0 + (nf + 1.0) * a).powi(2)));
    let polarization = has_p.then(|| {
        nf * g * g * (3.0 + 2.0 * a) / (2.0 * (2.0 + a).powi(2))
            + nf * a * a * (3.0 + (nf + 2.0) * a) / (2.0 * (2.0 + (nf + 1.0) * a).powi(2))
    });
    let row = SymmetricRow {
        n,
        alpha,
        gamma,
        planner_regime,
        planner,
        monopoly: 0.75 * planner,
        differentiation,
        concentration,
        polarization,
        outputs,
        max_gap: 0.0,
        existence_agrees: true,
    };
    check_symmetric_row(row)
}

fn check_symmetric_row(mut row: SymmetricRow) -> Result<SymmetricRow> {
    let n = row.n;
    let a = row.alpha;
    let beta = [1.0, 0.0];
    let gamma = vec![row.gamma; n];
    let half = n / 2;
    let sigma_p: Vec<f64> = (0..n).map(|i| if i < half { 1.0 } else { -1.0 }).collect();
    let o = row.outputs;

    // direct evaluation at the closed-form outputs; x is pinned by A q along beta
    let at = |q: Vec<f64>, along: f64| surplus_formula(a, &beta, &gamma, &[along, 0.0], &q);
    let mut gap: f64 = 0.0;
    let mut diff = |cell: Option<f64>, value: Option<f64>| {
        if let (Some(c), Some(v)) = (cell, value) {
            gap = gap.max((c - v).abs());
        }
    };
    let rho_p = if row.planner_regime == Regime::Concentration {
        n as f64 * o.planner
    } else {
        1.0
    };
    diff(Some(row.planner), Some(at(vec![o.planner; n], rho_p)));
    diff(Some(row.monopoly), Some(at(vec![o.monopoly; n], rho_p / 2.0)));
    diff(row.differentiation, o.differentiation.map(|q| at(vec![q; n], 1.0)));
    diff(row.concentration, o.concentration.map(|q| at(vec![q; n], n as f64 * q)));
    if let (Some(qp), Some(qm)) = (o.polarization_plus, o.polarization_minus) {
        let q: Vec<f64> = sigma_p.iter().map(|s| if *s > 0.0 { qp } else { qm }).collect();
        let along = half as f64 * (qp - qm);
        diff(row.polarization, Some(at(q, along)));
    }

    if row.gamma > 0.0 {
        let inst = MarketInstance::new(a, beta.to_vec(), gamma.clone())?;
        diff(Some(row.planner), Some(planner_optimum(&inst)?.welfare));
        diff(Some(row.monopoly), Some(monopoly_optimum(&inst)?.welfare));
        let eng_d = differentiation_equilibrium(&inst)?;
        let eng_c = sign_vector_equilibrium(&inst, &vec![1; n])?;
        let eng_p = if n.is_multiple_of(2) {
            let s: Vec<i8> = sigma_p.iter().map(|s| *s as i8).collect();
            sign_vector_equilibrium(&inst, &s)?
        } else {
            None
        };
        let agree = eng_d.is_some() == row.differentiation.is_some()
            && eng_c.is_some() == row.concentration.is_some()
            && eng_p.is_some() == row.polarization.is_some();
        for (cell, rec) in [
            (row.differentiation, &eng_d),
            (row.concentration, &eng_c),
            (row.polarization, &eng_p),
        ] {
            if let Some(r) = rec {
                diff(cell, Some(total_surplus(&inst, &r.allocation)?));
            }
        }
        row.existence_agrees = agree;
    }
    row.max_gap = gap;
    Ok(row)
}
