//! Cournot-Nash equilibria in characteristics and outputs.
//!
//! A firm facing rivals' aggregate `s_i = sum_{j != i} q_j a_j` points its
//! column at the residual `beta - s_i` and produces
//! `(alpha * ||beta - s_i|| + gamma_i) / (2 (1 + alpha))`. Equilibria are either
//! the differentiation equilibrium (`q = gamma / (2 + alpha)`, `A q = beta`) or
//! a sign-vector equilibrium with every column `+-beta`.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, construct_profile, plane_basis, radii};
use crate::linalg::{self, dot, norm2};
use crate::model::{self, Allocation, CharProfile, MarketInstance};

/// Largest `n` accepted by [`enumerate_equilibria`].
pub const ENUMERATION_CAP: usize = 16;

/// Acceptance threshold of [`verify_equilibrium`].
pub const VERIFY_TOL: f64 = 1e-6;

const BOUNDARY_FLAG_TOL: f64 = 1e-9;
const PARALLEL_FROM: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponse {
    /// Norm of the residual demand `beta - s_i`.
    pub delta: f64,
    /// Optimal column; `None` when `delta = 0` and every direction is optimal.
    pub direction: Option<Vec<f64>>,
    pub output: f64,
}

/// Best response to the rivals' aggregate `others`.
pub fn respond(inst: &MarketInstance, i: usize, others: &[f64]) -> BestResponse {
    let a = inst.alpha();
    let resid = linalg::sub(inst.beta(), others);
    let delta = norm2(&resid);
    let direction = (delta > 1e-14).then(|| linalg::scale(&resid, 1.0 / delta));
    BestResponse {
        delta,
        direction,
        output: (a * delta + inst.gamma()[i]) / (2.0 * (1.0 + a)),
    }
}

/// Firm `i`'s best response to the other firms in `alloc`; its own entries are ignored.
pub fn best_response(inst: &MarketInstance, alloc: &Allocation, i: usize) -> Result<BestResponse> {
    inst.check_allocation(alloc)?;
    inst.check_index(i)?;
    Ok(respond(inst, i, &alloc.others_aggregate(i)))
}

/// Profit of firm `i` choosing `(a, q)` against the rivals' aggregate `others`.
pub fn deviation_profit(inst: &MarketInstance, i: usize, others: &[f64], a: &[f64], q: f64) -> f64 {
    let al = inst.alpha();
    let resid = linalg::sub(inst.beta(), others);
    q * (al * dot(a, &resid) - (1.0 + al) * q + inst.gamma()[i])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionResiduals {
    /// `max_i (gamma_i - 2(1+alpha) q_i)^+`
    pub output_floor: f64,
    /// `max_i ||((2+alpha) q_i - gamma_i) a_i - alpha (beta - A q)||`
    pub alignment: f64,
}

/// Residuals of the two conditions that characterize an equilibrium.
pub fn condition_residuals(inst: &MarketInstance, alloc: &Allocation) -> Result<ConditionResiduals> {
    inst.check_allocation(alloc)?;
    let a = inst.alpha();
    let resid = linalg::scale(&linalg::sub(inst.beta(), alloc.x()), a);
    let mut floor: f64 = 0.0;
    let mut align: f64 = 0.0;
    for (i, (q, g)) in alloc.q().iter().zip(inst.gamma()).enumerate() {
        floor = floor.max(g - 2.0 * (1.0 + a) * q);
        let lhs = linalg::scale(alloc.profile().column(i), (2.0 + a) * q - g);
        align = align.max(norm2(&linalg::sub(&lhs, &resid)));
    }
    Ok(ConditionResiduals {
        output_floor: floor,
        alignment: align,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EquilibriumKind {
    Differentiation,
    SignVector { sigma: Vec<i8> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordPattern {
    Differentiation,
    Concentration,
    DominantFirmPolarization,
    Polarization,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumRecord {
    pub kind: EquilibriumKind,
    pub allocation: Allocation,
    pub markups: Vec<f64>,
    pub profits: Vec<f64>,
    /// Output shift of a sign-vector equilibrium relative to `gamma / (2 + alpha)`.
    pub phi: Option<f64>,
    pub diagnostics: ConditionResiduals,
    /// Existence condition holds with equality.
    pub boundary: bool,
}

impl EquilibriumRecord {
    pub fn q(&self) -> &[f64] {
        self.allocation.q()
    }

    pub fn sigma(&self) -> Option<&[i8]> {
        match &self.kind {
            EquilibriumKind::SignVector { sigma } => Some(sigma),
            EquilibriumKind::Differentiation => None,
        }
    }

    pub fn pattern(&self, gamma: &[f64]) -> RecordPattern {
        let Some(sigma) = self.sigma() else {
            return RecordPattern::Differentiation;
        };
        let plus: Vec<usize> = (0..sigma.len()).filter(|&i| sigma[i] > 0).collect();
        if plus.len() == sigma.len() {
            RecordPattern::Concentration
        } else if plus.len() == 1 && gamma[plus[0]] >= linalg::norm_inf(gamma) {
            RecordPattern::DominantFirmPolarization
        } else {
            RecordPattern::Polarization
        }
    }

    fn build(
        inst: &MarketInstance,
        kind: EquilibriumKind,
        allocation: Allocation,
        phi: Option<f64>,
        boundary: bool,
    ) -> Result<Self> {
        let report = model::price_report(inst, &allocation)?;
        let diagnostics = condition_residuals(inst, &allocation)?;
        Ok(EquilibriumRecord {
            kind,
            allocation,
            markups: report.markups,
            profits: report.profits,
            phi,
            diagnostics,
            boundary,
        })
    }
}

fn near(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= BOUNDARY_FLAG_TOL * scale
}

/// The equilibrium with `q = gamma / (2 + alpha)` and `A q = beta`; present iff
/// `r(gamma) <= 2 + alpha <= R(gamma)` and `m >= 2`.
pub fn differentiation_equilibrium(inst: &MarketInstance) -> Result<Option<EquilibriumRecord>> {
    differentiation_equilibrium_with(inst, false)
}

pub fn differentiation_equilibrium_with(inst: &MarketInstance, mirror: bool) -> Result<Option<EquilibriumRecord>> {
    if inst.m() < 2 {
        return Ok(None);
    }
    let k = 2.0 + inst.alpha();
    let rad = radii(inst.gamma());
    let scale = rad.outer.max(1.0);
    let slack = geometry::BOUNDARY_SLACK * scale;
    if rad.inner > k + slack || rad.outer < k - slack {
        return Ok(None);
    }
    let q = linalg::scale(inst.gamma(), 1.0 / k);
    let profile = construct_profile(&q, inst.beta(), mirror)?;
    let boundary = near(rad.inner, k, scale) || near(rad.outer, k, scale);
    let alloc = Allocation::new(profile, q)?;
    EquilibriumRecord::build(inst, EquilibriumKind::Differentiation, alloc, None, boundary).map(Some)
}

fn check_sigma(inst: &MarketInstance, sigma: &[i8]) -> Result<()> {
    if sigma.len() != inst.n() {
        return Err(Error::Dimension {
            what: "sigma",
            expected: inst.n(),
            got: sigma.len(),
        });
    }
    if sigma.iter().any(|s| *s != 1 && *s != -1) {
        return Err(Error::invalid("sigma", "entries must be +1 or -1"));
    }
    Ok(())
}

/// `phi(sigma)`, the common output shift of a sign-vector equilibrium.
pub fn phi(inst: &MarketInstance, sigma: &[i8]) -> f64 {
    let a = inst.alpha();
    let n = inst.n() as f64;
    let s: f64 = sigma.iter().zip(inst.gamma()).map(|(s, g)| f64::from(*s) * g).sum();
    a * (s - (2.0 + a)) / ((2.0 + a) * (2.0 + (n + 1.0) * a))
}

/// The equilibrium with `a_i = sigma_i beta`, if it exists.
pub fn sign_vector_equilibrium(inst: &MarketInstance, sigma: &[i8]) -> Result<Option<EquilibriumRecord>> {
    check_sigma(inst, sigma)?;
    if sigma.iter().all(|s| *s < 0) {
        return Ok(None);
    }
    let a = inst.alpha();
    let n = inst.n() as f64;
    let gamma = inst.gamma();
    let k = (2.0 + (n + 1.0) * a) / (2.0 * (1.0 + a));
    let min_over = |sign: i8| {
        sigma
            .iter()
            .zip(gamma)
            .filter(|(s, _)| **s == sign)
            .map(|(_, g)| *g)
            .fold(f64::INFINITY, f64::min)
    };
    let s: f64 = sigma.iter().zip(gamma).map(|(s, g)| f64::from(*s) * g).sum();
    let lower = (2.0 + a) - k * min_over(-1);
    let upper = (2.0 + a) + k * min_over(1);
    let scale = linalg::norm1(gamma).max(1.0);
    let slack = geometry::BOUNDARY_SLACK * scale;
    if s < lower - slack || s > upper + slack {
        return Ok(None);
    }
    let boundary = near(s, lower, scale) || near(s, upper, scale);
    let f = phi(inst, sigma);
    let q: Vec<f64> = gamma
        .iter()
        .zip(sigma)
        .map(|(g, sg)| (g / (2.0 + a) - f * f64::from(*sg)).max(0.0))
        .collect();
    let profile = CharProfile::signed(inst.beta(), sigma)?;
    let alloc = Allocation::new(profile, q)?;
    let kind = EquilibriumKind::SignVector { sigma: sigma.to_vec() };
    EquilibriumRecord::build(inst, kind, alloc, Some(f), boundary).map(Some)
}

/// Sign vector for enumeration index `mask`: bit `i` set means `sigma_i = -1`.
pub fn sigma_from_mask(mask: u32, n: usize) -> Vec<i8> {
    (0..n).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect()
}

/// Every equilibrium: the differentiation record first (if present), then the
/// sign-vector records in mask order.
pub fn enumerate_equilibria(inst: &MarketInstance) -> Result<Vec<EquilibriumRecord>> {
    let n = inst.n();
    if n > ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            n,
            cap: ENUMERATION_CAP,
        });
    }
    let last = (1u32 << n) - 1;
    let eval = |mask: u32| sign_vector_equilibrium(inst, &sigma_from_mask(mask, n)).transpose();
    let signed: Vec<Result<EquilibriumRecord>> = if n >= PARALLEL_FROM {
        (0..last).into_par_iter().filter_map(eval).collect()
    } else {
        (0..last).filter_map(eval).collect()
    };
    let mut out = Vec::with_capacity(signed.len() + 1);
    if let Some(d) = differentiation_equilibrium(inst)? {
        out.push(d);
    }
    for r in signed {
        out.push(r?);
    }
    Ok(out)
}

/// Labels an arbitrary allocation as a sign-vector or differentiation record.
///
/// Columns all within `1e-8` of `+-beta` give a sign-vector record; anything
/// else is labelled differentiation. The existence conditions are not checked.
pub fn record_from_allocation(inst: &MarketInstance, alloc: &Allocation) -> Result<EquilibriumRecord> {
    inst.check_allocation(alloc)?;
    let cos: Vec<f64> = alloc.profile().columns().iter().map(|c| dot(c, inst.beta())).collect();
    if cos.iter().all(|c| c.abs() >= 1.0 - geometry::CLASSIFY_TOL) {
        let sigma: Vec<i8> = cos.iter().map(|c| if *c > 0.0 { 1 } else { -1 }).collect();
        let f = phi(inst, &sigma);
        let kind = EquilibriumKind::SignVector { sigma };
        EquilibriumRecord::build(inst, kind, alloc.clone(), Some(f), false)
    } else {
        EquilibriumRecord::build(inst, EquilibriumKind::Differentiation, alloc.clone(), None, false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    /// Random deviations tried per firm, on top of the exact best response.
    pub samples: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { samples: 256, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub conditions: ConditionResiduals,
    /// Largest profit gain found over unilateral deviations (negative if none helps).
    pub deviation_gain: f64,
    pub accepted: bool,
}

pub fn verify_equilibrium(inst: &MarketInstance, alloc: &Allocation) -> Result<Verification> {
    verify_equilibrium_with(inst, alloc, VerifyOptions::default())
}

/// Checks the equilibrium conditions and searches for profitable deviations.
///
/// Half the sampled directions are uniform angles in the plane of `beta` and
/// its construction complement, the other half uniform on the unit sphere;
/// sampled outputs are uniform on `[0, 2 q_br + 1]`.
pub fn verify_equilibrium_with(inst: &MarketInstance, alloc: &Allocation, opts: VerifyOptions) -> Result<Verification> {
    let conditions = condition_residuals(inst, alloc)?;
    let m = inst.m();
    let (e1, e2) = plane_basis(inst.beta(), false);
    let mut rng = StdRng::seed_from_u64(opts.seed);
    let mut gain = f64::NEG_INFINITY;
    for i in 0..inst.n() {
        let others = alloc.others_aggregate(i);
        let current = deviation_profit(inst, i, &others, alloc.profile().column(i), alloc.q()[i]);
        let br = respond(inst, i, &others);
        let br_dir = br.direction.clone().unwrap_or_else(|| e1.clone());
        gain = gain.max(deviation_profit(inst, i, &others, &br_dir, br.output) - current);
        let q_hi = 2.0 * br.output + 1.0;
        for k in 0..opts.samples {
            let dir = if k % 2 == 0 {
                let t = rng.gen_range(0.0..std::f64::consts::TAU);
                let mut v = linalg::scale(&e1, t.cos());
                linalg::axpy(&mut v, t.sin(), &e2);
                v
            } else {
                let v: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
                let nv = norm2(&v);
                if nv == 0.0 {
                    continue;
                }
                linalg::scale(&v, 1.0 / nv)
            };
            let q = rng.gen_range(0.0..q_hi);
            gain = gain.max(deviation_profit(inst, i, &others, &dir, q) - current);
        }
    }
    let accepted = conditions.output_floor <= VERIFY_TOL && conditions.alignment <= VERIFY_TOL && gain <= VERIFY_TOL;
    Ok(Verification {
        conditions,
        deviation_gain: gain,
        accepted,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicsOptions {
    pub max_iter: usize,
    /// Weight kept on the previous output; 0 is a pure best response.
    pub damping: f64,
    pub tol: f64,
}

impl Default for DynamicsOptions {
    fn default() -> Self {
        DynamicsOptions {
            max_iter: 10_000,
            damping: 0.0,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsResult {
    /// Outputs after each full sweep, starting with the initial outputs.
    pub trajectory: Vec<Vec<f64>>,
    pub converged: bool,
    pub sweeps: usize,
    pub allocation: Allocation,
    pub verification: Option<Verification>,
    /// Present when the limit point converged and passed verification.
    pub record: Option<EquilibriumRecord>,
}

/// Firm-by-firm best responses in index order until no column or output
/// moves by more than `tol` in a sweep.
pub fn best_response_dynamics(
    inst: &MarketInstance,
    init: &Allocation,
    opts: DynamicsOptions,
) -> Result<DynamicsResult> {
    inst.check_allocation(init)?;
    if !(0.0..1.0).contains(&opts.damping) {
        return Err(Error::invalid("damping", "must lie in [0, 1)"));
    }
    let n = inst.n();
    let mut cols: Vec<Vec<f64>> = init.profile().columns().to_vec();
    let mut q = init.q().to_vec();
    let mut x = init.x().to_vec();
    let mut trajectory = vec![q.clone()];
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < opts.max_iter {
        sweeps += 1;
        let mut change: f64 = 0.0;
        for i in 0..n {
            let mut others = x.clone();
            linalg::axpy(&mut others, -q[i], &cols[i]);
            let br = respond(inst, i, &others);
            let dir = br.direction.unwrap_or_else(|| cols[i].clone());
            let qi = opts.damping * q[i] + (1.0 - opts.damping) * br.output;
            change = change.max((qi - q[i]).abs()).max(linalg::max_abs_diff(&dir, &cols[i]));
            cols[i] = dir;
            q[i] = qi;
            x = others;
            linalg::axpy(&mut x, qi, &cols[i]);
        }
        trajectory.push(q.clone());
        if change < opts.tol {
            converged = true;
            break;
        }
    }
    let allocation = Allocation::new(CharProfile::new(cols)?, q)?;
    let (verification, record) = if converged {
        let v = verify_equilibrium(inst, &allocation)?;
        let r = if v.accepted {
            Some(record_from_allocation(inst, &allocation)?)
        } else {
            None
        };
        (Some(v), r)
    } else {
        (None, None)
    };
    Ok(DynamicsResult {
        trajectory,
        converged,
        sweeps,
        allocation,
        verification,
        record,
    })
}
