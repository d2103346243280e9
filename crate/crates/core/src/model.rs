//! Model primitives: market instances, characteristics profiles, allocations,
//! and the demand, markup, profit, and surplus evaluators built on them.
//!
//! Marginal cost and gross standalone value never appear separately; only
//! their difference `gamma` does.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, dot, norm2, Matrix};

/// Absolute tolerance used when validating stored invariants.
pub const INVARIANT_TOL: f64 = 1e-10;

/// Model primitives for one market.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct MarketInstance {
    alpha: f64,
    beta: Vec<f64>,
    gamma: Vec<f64>,
    network: Option<Matrix>,
    ownership: Option<Matrix>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    n: usize,
    m: usize,
    alpha: f64,
    beta: Vec<f64>,
    gamma: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    network: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ownership: Option<Matrix>,
}

impl TryFrom<RawInstance> for MarketInstance {
    type Error = Error;
    fn try_from(raw: RawInstance) -> Result<Self> {
        if raw.beta.len() != raw.m {
            return Err(Error::Dimension {
                what: "beta",
                expected: raw.m,
                got: raw.beta.len(),
            });
        }
        if raw.gamma.len() != raw.n {
            return Err(Error::Dimension {
                what: "gamma",
                expected: raw.n,
                got: raw.gamma.len(),
            });
        }
        let mut inst = MarketInstance::new(raw.alpha, raw.beta, raw.gamma)?;
        if let Some(w) = raw.network {
            inst = inst.with_network(w)?;
        }
        if let Some(k) = raw.ownership {
            inst = inst.with_ownership(k)?;
        }
        Ok(inst)
    }
}

impl From<MarketInstance> for RawInstance {
    fn from(inst: MarketInstance) -> Self {
        RawInstance {
            n: inst.n(),
            m: inst.m(),
            alpha: inst.alpha,
            beta: inst.beta,
            gamma: inst.gamma,
            network: inst.network,
            ownership: inst.ownership,
        }
    }
}

fn check_finite(field: &'static str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(field, "contains a non-finite entry"))
    }
}

impl MarketInstance {
    /// Validates `alpha > 0`, `||beta|| = 1`, and `gamma >> 0`.
    pub fn new(alpha: f64, beta: Vec<f64>, gamma: Vec<f64>) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::invalid("alpha", format!("must be positive, got {alpha}")));
        }
        if beta.is_empty() {
            return Err(Error::invalid("beta", "must have at least one entry"));
        }
        if gamma.is_empty() {
            return Err(Error::invalid("gamma", "must have at least one entry"));
        }
        check_finite("beta", &beta)?;
        check_finite("gamma", &gamma)?;
        let nb = norm2(&beta);
        if (nb - 1.0).abs() > INVARIANT_TOL {
            return Err(Error::invalid("beta", format!("must have unit norm, got {nb}")));
        }
        if let Some(g) = gamma.iter().find(|g| **g <= 0.0) {
            return Err(Error::invalid("gamma", format!("entries must be positive, got {g}")));
        }
        Ok(MarketInstance {
            alpha,
            beta,
            gamma,
            network: None,
            ownership: None,
        })
    }

    /// Attaches a symmetric, zero-diagonal network matrix with spectral radius below one.
    pub fn with_network(mut self, w: Matrix) -> Result<Self> {
        let n = self.n();
        if w.rows() != n || w.cols() != n {
            return Err(Error::Dimension {
                what: "network",
                expected: n,
                got: w.rows().max(w.cols()),
            });
        }
        check_finite("network", &w.to_rows().concat())?;
        if w.asymmetry() > INVARIANT_TOL {
            return Err(Error::invalid("network", "must be symmetric"));
        }
        if w.diagonal().iter().any(|d| d.abs() > INVARIANT_TOL) {
            return Err(Error::invalid("network", "must have a zero diagonal"));
        }
        let rho = linalg::symmetric_spectral_radius(&w)?;
        if rho >= 1.0 {
            return Err(Error::invalid(
                "network",
                format!("spectral radius must be below 1, got {rho}"),
            ));
        }
        self.network = Some(w);
        Ok(self)
    }

    /// Attaches a nonnegative ownership matrix with unit diagonal and PSD symmetric part.
    pub fn with_ownership(mut self, k: Matrix) -> Result<Self> {
        let n = self.n();
        if k.rows() != n || k.cols() != n {
            return Err(Error::Dimension {
                what: "ownership",
                expected: n,
                got: k.rows().max(k.cols()),
            });
        }
        let entries = k.to_rows().concat();
        check_finite("ownership", &entries)?;
        if entries.iter().any(|v| *v < 0.0) {
            return Err(Error::invalid("ownership", "entries must be nonnegative"));
        }
        if k.diagonal().iter().any(|d| (d - 1.0).abs() > INVARIANT_TOL) {
            return Err(Error::invalid("ownership", "diagonal must be one"));
        }
        let sym = k.add(&k.transpose()).scaled(0.5);
        let eig = linalg::symmetric_eigen(&sym)?;
        let min = eig.values.last().copied().unwrap_or(0.0);
        if min < -INVARIANT_TOL {
            return Err(Error::invalid(
                "ownership",
                format!("symmetric part must be positive semidefinite, min eigenvalue {min}"),
            ));
        }
        self.ownership = Some(k);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.gamma.len()
    }

    pub fn m(&self) -> usize {
        self.beta.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn network(&self) -> Option<&Matrix> {
        self.network.as_ref()
    }

    pub fn ownership(&self) -> Option<&Matrix> {
        self.ownership.as_ref()
    }

    /// Same primitives with a different standalone-value vector.
    pub fn with_gamma(&self, gamma: Vec<f64>) -> Result<Self> {
        let mut inst = MarketInstance::new(self.alpha, self.beta.clone(), gamma)?;
        if let Some(w) = &self.network {
            inst = inst.with_network(w.clone())?;
        }
        if let Some(k) = &self.ownership {
            inst = inst.with_ownership(k.clone())?;
        }
        Ok(inst)
    }

    pub fn without_extensions(&self) -> Self {
        MarketInstance {
            network: None,
            ownership: None,
            ..self.clone()
        }
    }

    pub(crate) fn check_index(&self, i: usize) -> Result<()> {
        if i < self.n() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: i, n: self.n() })
        }
    }

    pub(crate) fn check_allocation(&self, alloc: &Allocation) -> Result<()> {
        if alloc.n() != self.n() {
            return Err(Error::Dimension {
                what: "allocation firms",
                expected: self.n(),
                got: alloc.n(),
            });
        }
        if alloc.m() != self.m() {
            return Err(Error::Dimension {
                what: "allocation characteristics",
                expected: self.m(),
                got: alloc.m(),
            });
        }
        Ok(())
    }
}

/// An m-by-n matrix with unit-norm columns, one column per firm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Matrix", into = "Matrix")]
pub struct CharProfile {
    m: usize,
    columns: Vec<Vec<f64>>,
}

impl CharProfile {
    pub fn new(columns: Vec<Vec<f64>>) -> Result<Self> {
        let m = columns.first().map_or(0, Vec::len);
        if columns.is_empty() || m == 0 {
            return Err(Error::invalid("profile", "needs at least one nonempty column"));
        }
        for (i, c) in columns.iter().enumerate() {
            if c.len() != m {
                return Err(Error::Dimension {
                    what: "profile column",
                    expected: m,
                    got: c.len(),
                });
            }
            check_finite("profile", c)?;
            let nc = norm2(c);
            if (nc - 1.0).abs() > INVARIANT_TOL {
                return Err(Error::invalid(
                    "profile",
                    format!("column {i} has norm {nc}, expected 1"),
                ));
            }
        }
        Ok(CharProfile { m, columns })
    }

    /// Every firm on the same direction `u`.
    pub fn concentrated(u: &[f64], n: usize) -> Result<Self> {
        CharProfile::new(vec![u.to_vec(); n])
    }

    /// Firm `i` on `sigma[i] * u`.
    pub fn signed(u: &[f64], sigma: &[i8]) -> Result<Self> {
        CharProfile::new(sigma.iter().map(|s| linalg::scale(u, f64::from(*s))).collect())
    }

    pub fn n(&self) -> usize {
        self.columns.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.columns[i]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    /// `A q`.
    pub fn apply(&self, q: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.m];
        for (c, qi) in self.columns.iter().zip(q) {
            linalg::axpy(&mut x, *qi, c);
        }
        x
    }

    /// `a_i^T a_j`.
    pub fn cosine(&self, i: usize, j: usize) -> f64 {
        dot(&self.columns[i], &self.columns[j])
    }

    /// `A^T A`.
    pub fn gram(&self) -> Matrix {
        let n = self.n();
        let mut g = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.cosine(i, j);
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_columns(&self.columns).expect("columns share a length")
    }

    /// Applies the linear map `rot` (m-by-m) to every column.
    pub fn transformed(&self, rot: &Matrix) -> Result<Self> {
        CharProfile::new(self.columns.iter().map(|c| rot.mul_vec(c)).collect())
    }
}

impl TryFrom<Matrix> for CharProfile {
    type Error = Error;
    fn try_from(m: Matrix) -> Result<Self> {
        CharProfile::new((0..m.cols()).map(|j| m.column(j)).collect())
    }
}

impl From<CharProfile> for Matrix {
    fn from(p: CharProfile) -> Self {
        p.to_matrix()
    }
}

/// A profile paired with outputs, plus the aggregate `x = A q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAllocation")]
pub struct Allocation {
    profile: CharProfile,
    q: Vec<f64>,
    x: Vec<f64>,
}

#[derive(Deserialize)]
struct RawAllocation {
    profile: CharProfile,
    q: Vec<f64>,
    x: Option<Vec<f64>>,
}

impl TryFrom<RawAllocation> for Allocation {
    type Error = Error;
    fn try_from(raw: RawAllocation) -> Result<Self> {
        let alloc = Allocation::new(raw.profile, raw.q)?;
        if let Some(x) = raw.x {
            if x.len() != alloc.x.len() || linalg::max_abs_diff(&x, &alloc.x) > INVARIANT_TOL {
                return Err(Error::invalid("x", "does not match A q"));
            }
        }
        Ok(alloc)
    }
}

impl Allocation {
    pub fn new(profile: CharProfile, q: Vec<f64>) -> Result<Self> {
        if q.len() != profile.n() {
            return Err(Error::Dimension {
                what: "output vector",
                expected: profile.n(),
                got: q.len(),
            });
        }
        check_finite("q", &q)?;
        if let Some(v) = q.iter().find(|v| **v < 0.0) {
            return Err(Error::invalid("q", format!("outputs must be nonnegative, got {v}")));
        }
        let x = profile.apply(&q);
        Ok(Allocation { profile, q, x })
    }

    pub fn profile(&self) -> &CharProfile {
        &self.profile
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    /// Idiosyncratic aggregate; identical to `q`.
    pub fn y(&self) -> &[f64] {
        &self.q
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn m(&self) -> usize {
        self.profile.m()
    }

    /// `sum_{j != i} q_j a_j`
    pub fn others_aggregate(&self, i: usize) -> Vec<f64> {
        let mut s = self.x.clone();
        linalg::axpy(&mut s, -self.q[i], self.profile.column(i));
        s
    }
}

/// Intercept and slope of the inverse demand system `p - c = intercept - sigma q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandSystem {
    pub intercept: Vec<f64>,
    pub sigma: Matrix,
}

/// Markups, profits, and surplus at one allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceReport {
    pub markups: Vec<f64>,
    pub profits: Vec<f64>,
    pub total_surplus: f64,
    pub aggregate_profit: f64,
    pub consumer_surplus: f64,
}

fn markup_unchecked(inst: &MarketInstance, alloc: &Allocation, i: usize) -> f64 {
    let a = inst.alpha;
    let resid = linalg::sub(&inst.beta, &alloc.others_aggregate(i));
    a * dot(alloc.profile.column(i), &resid) - (1.0 + a) * alloc.q[i] + inst.gamma[i]
}

/// Price net of marginal cost for firm `i`.
pub fn markup(inst: &MarketInstance, alloc: &Allocation, i: usize) -> Result<f64> {
    inst.check_allocation(alloc)?;
    inst.check_index(i)?;
    Ok(markup_unchecked(inst, alloc, i))
}

pub fn firm_profit(inst: &MarketInstance, alloc: &Allocation, i: usize) -> Result<f64> {
    Ok(markup(inst, alloc, i)? * alloc.q[i])
}

/// Total surplus from the aggregates `(x, q)` alone.
pub fn surplus_from_aggregates(inst: &MarketInstance, x: &[f64], q: &[f64]) -> f64 {
    surplus_formula(inst.alpha, &inst.beta, &inst.gamma, x, q)
}

/// `alpha (x^T beta - x^T x / 2) + q^T gamma - q^T q / 2` on raw primitives.
pub fn surplus_formula(alpha: f64, beta: &[f64], gamma: &[f64], x: &[f64], q: &[f64]) -> f64 {
    alpha * (dot(x, beta) - 0.5 * dot(x, x)) + dot(q, gamma) - 0.5 * dot(q, q)
}

pub fn total_surplus(inst: &MarketInstance, alloc: &Allocation) -> Result<f64> {
    inst.check_allocation(alloc)?;
    Ok(surplus_from_aggregates(inst, &alloc.x, &alloc.q))
}

/// `q^T intercept - q^T Sigma_A q`.
pub fn aggregate_profit(inst: &MarketInstance, alloc: &Allocation) -> Result<f64> {
    let ds = demand_system(inst, &alloc.profile)?;
    Ok(dot(&alloc.q, &ds.intercept) - ds.sigma.quadratic_form(&alloc.q))
}

pub fn demand_system(inst: &MarketInstance, profile: &CharProfile) -> Result<DemandSystem> {
    if profile.n() != inst.n() || profile.m() != inst.m() {
        return Err(Error::Dimension {
            what: "profile",
            expected: inst.n(),
            got: profile.n(),
        });
    }
    let a = inst.alpha;
    let sigma = profile.gram().scaled(a).add(&Matrix::identity(inst.n()));
    let intercept = profile
        .columns()
        .iter()
        .zip(&inst.gamma)
        .map(|(c, g)| a * dot(c, &inst.beta) + g)
        .collect();
    Ok(DemandSystem { intercept, sigma })
}

pub fn price_report(inst: &MarketInstance, alloc: &Allocation) -> Result<PriceReport> {
    inst.check_allocation(alloc)?;
    let markups: Vec<f64> = (0..inst.n()).map(|i| markup_unchecked(inst, alloc, i)).collect();
    let profits: Vec<f64> = markups.iter().zip(&alloc.q).map(|(m, q)| m * q).collect();
    let total = surplus_from_aggregates(inst, &alloc.x, &alloc.q);
    let aggregate: f64 = profits.iter().sum();
    Ok(PriceReport {
        markups,
        profits,
        total_surplus: total,
        aggregate_profit: aggregate,
        consumer_surplus: total - aggregate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn duopoly() -> MarketInstance {
        MarketInstance::new(1.0, vec![0.0, 1.0], vec![2.0, 3f64.sqrt()]).unwrap()
    }

    fn at_angle(theta: f64) -> Vec<f64> {
        vec![theta.cos(), theta.sin()]
    }

    #[test]
    fn rejects_bad_primitives() {
        assert!(MarketInstance::new(0.0, vec![1.0], vec![1.0]).is_err());
        assert!(MarketInstance::new(1.0, vec![0.5, 0.5], vec![1.0]).is_err());
        assert!(MarketInstance::new(1.0, vec![1.0], vec![1.0, 0.0]).is_err());
        let w = Matrix::from_rows(&[vec![0.0, 1.2], vec![1.2, 0.0]]).unwrap();
        let inst = MarketInstance::new(1.0, vec![1.0], vec![1.0, 1.0]).unwrap();
        assert!(inst.with_network(w).is_err());
    }

    #[test]
    fn markup_hand_case() {
        let inst = duopoly();
        let p = CharProfile::concentrated(inst.beta(), 2).unwrap();
        let alloc = Allocation::new(p, vec![0.5, 0.5]).unwrap();
        // 1 * (1 - 0.5) - 2 * 0.5 + 2
        assert!((markup(&inst, &alloc, 0).unwrap() - 1.5).abs() < 1e-12);
        assert!((firm_profit(&inst, &alloc, 0).unwrap() - 0.75).abs() < 1e-12);

        // same number from the demand system intercept - Sigma q
        let ds = demand_system(&inst, alloc.profile()).unwrap();
        let p0 = ds.intercept[0] - dot(ds.sigma.row(0), alloc.q());
        assert!((p0 - 1.5).abs() < 1e-12);
    }

    #[test]
    fn zero_output_markup_is_intercept() {
        let inst = duopoly();
        let p = CharProfile::new(vec![at_angle(0.3), at_angle(2.0)]).unwrap();
        let alloc = Allocation::new(p.clone(), vec![0.0, 0.0]).unwrap();
        for i in 0..2 {
            let want = dot(p.column(i), inst.beta()) + inst.gamma()[i];
            assert!((markup(&inst, &alloc, i).unwrap() - want).abs() < 1e-14);
            assert_eq!(firm_profit(&inst, &alloc, i).unwrap(), 0.0);
        }
        assert_eq!(total_surplus(&inst, &alloc).unwrap(), 0.0);
    }

    #[test]
    fn duopoly_differentiation_markup() {
        let inst = duopoly();
        let c = 1.0 / (2.0 * 3f64.sqrt());
        // a1 at angle t1, a2 at angle t1 - acos(c): build from q^d with A q = beta
        let q = vec![2.0 / 3.0, 1.0 / 3f64.sqrt()];
        let a1 = {
            // law of cosines on the triangle (q1 a1, q2 a2, beta)
            let cos1 = (1.0 + q[0] * q[0] - q[1] * q[1]) / (2.0 * q[0]);
            let s = (1.0 - cos1 * cos1).sqrt();
            vec![-s, cos1]
        };
        let a2: Vec<f64> = linalg::scale(&linalg::sub(inst.beta(), &linalg::scale(&a1, q[0])), 1.0 / q[1]);
        let p = CharProfile::new(vec![a1, a2]).unwrap();
        assert!((p.cosine(0, 1) - c).abs() < 1e-12);
        let alloc = Allocation::new(p, q).unwrap();
        assert!((markup(&inst, &alloc, 0).unwrap() - 4.0 / 3.0).abs() < 1e-12);
        assert!((firm_profit(&inst, &alloc, 0).unwrap() - 8.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn planner_and_monopoly_surplus() {
        let inst = duopoly();
        let p = CharProfile::new(vec![
            at_angle(std::f64::consts::FRAC_PI_6),
            at_angle(std::f64::consts::PI),
        ])
        .unwrap();
        let alloc = Allocation::new(p.clone(), inst.gamma().to_vec()).unwrap();
        assert!(linalg::max_abs_diff(alloc.x(), &[0.0, 1.0]) < 1e-12);
        assert!((total_surplus(&inst, &alloc).unwrap() - 4.0).abs() < 1e-12);
        let mono = Allocation::new(p, linalg::scale(inst.gamma(), 0.5)).unwrap();
        assert!((total_surplus(&inst, &mono).unwrap() - 3.0).abs() < 1e-12);
        let ds = demand_system(&inst, mono.profile()).unwrap();
        assert!((ds.sigma[(0, 1)] + 3f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn sigma_for_concentrated_pair() {
        let inst = duopoly();
        let p = CharProfile::concentrated(inst.beta(), 2).unwrap();
        let ds = demand_system(&inst, &p).unwrap();
        assert_eq!(ds.sigma.to_rows(), vec![vec![2.0, 1.0], vec![1.0, 2.0]]);
    }

    #[test]
    fn price_report_decomposes_surplus() {
        let inst = duopoly();
        let p = CharProfile::new(vec![at_angle(0.4), at_angle(1.9)]).unwrap();
        let alloc = Allocation::new(p, vec![0.7, 1.1]).unwrap();
        let r = price_report(&inst, &alloc).unwrap();
        let ds = demand_system(&inst, alloc.profile()).unwrap();
        let half_quad = 0.5 * ds.sigma.quadratic_form(alloc.q());
        assert!((r.consumer_surplus - half_quad).abs() < 1e-12);
        assert!((r.aggregate_profit - aggregate_profit(&inst, &alloc).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn instance_json_round_trip() {
        let w = Matrix::from_rows(&[vec![0.0, 0.2], vec![0.2, 0.0]]).unwrap();
        let inst = duopoly().with_network(w).unwrap();
        let s = serde_json::to_string(&inst).unwrap();
        let back: MarketInstance = serde_json::from_str(&s).unwrap();
        assert_eq!(back, inst);
        let bad = r#"{"n":2,"m":2,"alpha":1,"beta":[0,2],"gamma":[1,1]}"#;
        let err = serde_json::from_str::<MarketInstance>(bad).unwrap_err();
        assert!(err.to_string().contains("beta"));
    }

    #[test]
    fn allocation_rejects_inconsistent_x() {
        let json = r#"{"profile":[[1.0,1.0],[0.0,0.0]],"q":[1.0,2.0],"x":[3.0,0.0]}"#;
        assert!(serde_json::from_str::<Allocation>(json).is_ok());
        let json = r#"{"profile":[[1.0,1.0],[0.0,0.0]],"q":[1.0,2.0],"x":[2.0,0.0]}"#;
        assert!(serde_json::from_str::<Allocation>(json).is_err());
    }
}
