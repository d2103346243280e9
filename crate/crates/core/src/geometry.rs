//! Which aggregates `x = A q` a unit-column profile can reach, how to build one
//! that does, and how to name the pattern a profile exhibits.
//!
//! The reachable set for fixed outputs `q` is the annulus
//! `r(q) <= ||x|| <= R(q)` with `R(q) = ||q||_1` and `r(q) = 2||q||_inf - ||q||_1`.
//! [`construct_profile`] realizes any point in it by laying the columns down as
//! the edges of a closed polygon in a 2-plane.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, dot, norm1, norm2, norm_inf};
use crate::model::CharProfile;

/// Inclusive slack on annulus membership, relative to `max(1, R)`.
pub const BOUNDARY_SLACK: f64 = 1e-12;

/// Default relative tolerance for [`classify_profile`].
pub const CLASSIFY_TOL: f64 = 1e-8;

const SIGN_SEARCH_CAP: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DonutRadii {
    /// `2||q||_inf - ||q||_1`; negative when no firm dominates.
    pub inner: f64,
    /// `||q||_1`
    pub outer: f64,
}

impl DonutRadii {
    pub fn contains(&self, norm: f64) -> bool {
        let slack = BOUNDARY_SLACK * self.outer.max(1.0);
        norm >= self.inner - slack && norm <= self.outer + slack
    }
}

fn check_outputs(q: &[f64]) -> Result<()> {
    match q.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        Some(v) => Err(Error::invalid("q", format!("outputs must be nonnegative, got {v}"))),
        None => Ok(()),
    }
}

/// Radii without input validation; callers guarantee `q >= 0`.
pub(crate) fn radii(q: &[f64]) -> DonutRadii {
    let outer = norm1(q);
    DonutRadii {
        inner: 2.0 * norm_inf(q) - outer,
        outer,
    }
}

pub fn donut_radii(q: &[f64]) -> Result<DonutRadii> {
    check_outputs(q)?;
    Ok(radii(q))
}

pub fn is_feasible(q: &[f64], x: &[f64]) -> Result<bool> {
    check_outputs(q)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("x", "contains a non-finite entry"));
    }
    Ok(radii(q).contains(norm2(x)))
}

/// Orthonormal pair spanning the construction plane for target `x` in R^m.
///
/// `e1` is `x / ||x||`, or the first standard basis vector when `x = 0`. For
/// `m = 2`, `e2` is `e1` turned a quarter counter-clockwise; otherwise it is the
/// standard basis vector least aligned with `e1`, orthogonalized. `mirror` flips `e2`.
pub fn plane_basis(x: &[f64], mirror: bool) -> (Vec<f64>, Vec<f64>) {
    let m = x.len();
    let nx = norm2(x);
    let e1 = if nx > 0.0 {
        linalg::scale(x, 1.0 / nx)
    } else {
        linalg::unit_basis(m, 0)
    };
    let mut e2 = if m == 1 {
        vec![0.0]
    } else if m == 2 {
        vec![-e1[1], e1[0]]
    } else {
        let k = (0..m).min_by(|&i, &j| e1[i].abs().total_cmp(&e1[j].abs())).unwrap_or(0);
        let mut v = linalg::unit_basis(m, k);
        linalg::axpy(&mut v, -e1[k], &e1);
        let nv = norm2(&v);
        linalg::scale(&v, 1.0 / nv)
    };
    if mirror {
        e2.iter_mut().for_each(|v| *v = -*v);
    }
    (e1, e2)
}

/// Builds a unit-column profile with `A q = x`.
///
/// Firms are placed in index order. Each column is chosen so the residual
/// target left for the remaining firms has norm at the midpoint of what they
/// can still reach, which keeps the chain feasible to the end. Of the two
/// columns at the required angle, the one leaning toward `+e2` is taken
/// (`-e2` when `mirror` is set).
///
/// With `m = 1` the only unit columns are `+1` and `-1`, so a sign vector with
/// `sigma^T q = x` is searched instead.
pub fn construct_profile(q: &[f64], x: &[f64], mirror: bool) -> Result<CharProfile> {
    check_outputs(q)?;
    if q.is_empty() {
        return Err(Error::invalid("q", "needs at least one firm"));
    }
    let m = x.len();
    if m == 0 {
        return Err(Error::invalid("x", "needs at least one characteristic"));
    }
    let rad = radii(q);
    let nx = norm2(x);
    if !rad.contains(nx) {
        return Err(Error::Infeasible {
            norm: nx,
            inner: rad.inner,
            outer: rad.outer,
        });
    }
    if m == 1 {
        return sign_profile(q, x[0]);
    }

    let n = q.len();
    let scale = rad.outer.max(1.0);
    let snap = BOUNDARY_SLACK * scale;
    let tiny = f64::EPSILON * scale;

    // suffix sums and suffix maxima for the radii of q[i+1..]
    let mut suf_sum = vec![0.0; n + 1];
    let mut suf_max = vec![0.0f64; n + 1];
    for i in (0..n).rev() {
        suf_sum[i] = suf_sum[i + 1] + q[i];
        suf_max[i] = suf_max[i + 1].max(q[i]);
    }

    // planar coordinates relative to (e1, e2)
    let mut t = [nx, 0.0];
    let mut planar = Vec::with_capacity(n);
    for i in 0..n {
        let qi = q[i];
        let tn = (t[0] * t[0] + t[1] * t[1]).sqrt();
        let dir = if qi <= tiny {
            if tn > tiny {
                [t[0] / tn, t[1] / tn]
            } else {
                [1.0, 0.0]
            }
        } else if tn <= tiny {
            [1.0, 0.0]
        } else {
            let s_out = suf_sum[i + 1];
            let s_in = 2.0 * suf_max[i + 1] - s_out;
            let lo = (tn - qi).abs().max(s_in);
            let hi = (tn + qi).min(s_out);
            let d = 0.5 * (lo + hi);
            let c = if (d - (tn + qi)).abs() <= snap {
                -1.0
            } else if (d - (tn - qi).abs()).abs() <= snap {
                1.0
            } else {
                ((tn * tn + qi * qi - d * d) / (2.0 * qi * tn)).clamp(-1.0, 1.0)
            };
            let s = (1.0 - c * c).max(0.0).sqrt();
            let u = [t[0] / tn, t[1] / tn];
            let perp = [-u[1], u[0]];
            let plus = [c * u[0] + s * perp[0], c * u[1] + s * perp[1]];
            let minus = [c * u[0] - s * perp[0], c * u[1] - s * perp[1]];
            if minus[1] > plus[1] {
                minus
            } else {
                plus
            }
        };
        t[0] -= qi * dir[0];
        t[1] -= qi * dir[1];
        planar.push(dir);
    }

    let (e1, e2) = plane_basis(x, mirror);
    let columns = planar
        .into_iter()
        .map(|[u, v]| {
            let mut a = linalg::scale(&e1, u);
            linalg::axpy(&mut a, v, &e2);
            let na = norm2(&a);
            linalg::scale(&a, 1.0 / na)
        })
        .collect();
    CharProfile::new(columns)
}

fn sign_profile(q: &[f64], target: f64) -> Result<CharProfile> {
    let n = q.len();
    if n > SIGN_SEARCH_CAP {
        return Err(Error::EnumerationCap {
            n,
            cap: SIGN_SEARCH_CAP,
        });
    }
    let tol = 1e-8 * target.abs().max(1.0);
    for mask in 0u32..(1u32 << n) {
        let sigma: Vec<i8> = (0..n).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect();
        let s: f64 = sigma.iter().zip(q).map(|(s, v)| f64::from(*s) * v).sum();
        if (s - target).abs() <= tol {
            return CharProfile::signed(&[1.0], &sigma);
        }
    }
    Err(Error::NoSignSolution { target })
}

/// Shape of a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum ProfilePattern {
    Concentration {
        axis: Vec<f64>,
        rank: usize,
    },
    /// Every column is `sigma_i * axis` with both signs present.
    Polarization {
        sigma: Vec<i8>,
        axis: Vec<f64>,
        rank: usize,
    },
    Differentiation {
        rank: usize,
    },
}

impl ProfilePattern {
    pub fn rank(&self) -> usize {
        match self {
            ProfilePattern::Concentration { rank, .. }
            | ProfilePattern::Polarization { rank, .. }
            | ProfilePattern::Differentiation { rank } => *rank,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ProfilePattern::Concentration { .. } => "concentration",
            ProfilePattern::Polarization { .. } => "polarization",
            ProfilePattern::Differentiation { .. } => "differentiation",
        }
    }
}

/// Numerical rank of the profile matrix at relative tolerance `tol`.
pub fn profile_rank(profile: &CharProfile, tol: f64) -> usize {
    let sv = linalg::singular_values(profile.columns());
    let top = sv.first().copied().unwrap_or(0.0);
    sv.iter().filter(|s| **s > tol * top).count()
}

/// Concentration when every pair of columns has cosine at least `1 - tol`,
/// polarization when every pair is within `tol` of `+-1` and some pair is
/// opposed, differentiation otherwise. The axis is the first column.
pub fn classify_profile(profile: &CharProfile, tol: f64) -> ProfilePattern {
    let n = profile.n();
    let rank = profile_rank(profile, tol);
    let mut aligned = true;
    let mut collinear = true;
    for i in 0..n {
        for j in (i + 1)..n {
            let c = profile.cosine(i, j);
            if c < 1.0 - tol {
                aligned = false;
            }
            if c.abs() < 1.0 - tol {
                collinear = false;
            }
        }
    }
    let axis = profile.column(0).to_vec();
    if aligned {
        ProfilePattern::Concentration { axis, rank }
    } else if collinear {
        let sigma = profile
            .columns()
            .iter()
            .map(|c| if dot(c, &axis) >= 0.0 { 1 } else { -1 })
            .collect();
        ProfilePattern::Polarization { sigma, axis, rank }
    } else {
        ProfilePattern::Differentiation { rank }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const S3: f64 = 1.732_050_807_568_877_2;

    fn residual(p: &CharProfile, q: &[f64], x: &[f64]) -> f64 {
        norm2(&linalg::sub(&p.apply(q), x))
    }

    #[test]
    fn radii_examples() {
        let r = donut_radii(&[2.0, S3]).unwrap();
        assert!((r.outer - (2.0 + S3)).abs() < 1e-15);
        assert!((r.inner - (2.0 - S3)).abs() < 1e-15);
        assert_eq!(donut_radii(&[1.0, 1.0]).unwrap(), DonutRadii { inner: 0.0, outer: 2.0 });
        // 2 * 5 - 7 = 3
        assert_eq!(
            donut_radii(&[5.0, 1.0, 1.0]).unwrap(),
            DonutRadii { inner: 3.0, outer: 7.0 }
        );
        assert!(donut_radii(&[1.0, -0.1]).is_err());
    }

    #[test]
    fn feasibility_examples() {
        assert!(is_feasible(&[2.0, S3], &[0.0, 1.0]).unwrap());
        assert!(is_feasible(&[1.0, 1.0], &[0.0, 0.0]).unwrap());
        assert!(!is_feasible(&[5.0, 1.0, 1.0], &[0.0, 2.0]).unwrap());
        assert!(is_feasible(&[5.0, 1.0, 1.0], &[0.0, 3.0]).unwrap());
        assert!(is_feasible(&[5.0, 1.0, 1.0], &[7.0, 0.0]).unwrap());
        assert!(!is_feasible(&[5.0, 1.0, 1.0], &[7.0 + 1e-9, 0.0]).unwrap());
    }

    #[test]
    fn duopoly_planner_profile() {
        let q = [2.0, S3];
        let x = [0.0, 1.0];
        for mirror in [false, true] {
            let p = construct_profile(&q, &x, mirror).unwrap();
            assert!(residual(&p, &q, &x) < 1e-12);
            // the triangle (2, sqrt 3, 1) fixes the angle between the columns
            assert!((p.cosine(0, 1) + S3 / 2.0).abs() < 1e-12);
        }
        let a = construct_profile(&q, &x, false).unwrap();
        let b = construct_profile(&q, &x, true).unwrap();
        // mirror images across the x axis
        assert!((a.column(0)[0] + b.column(0)[0]).abs() < 1e-12);
        assert!((a.column(0)[1] - b.column(0)[1]).abs() < 1e-12);
    }

    #[test]
    fn single_firm_and_closed_triangle() {
        let beta = [0.6, 0.8];
        let p = construct_profile(&[1.0], &beta, false).unwrap();
        assert!(linalg::max_abs_diff(p.column(0), &beta) < 1e-15);

        let q = [1.0, 1.0, 1.0];
        let p = construct_profile(&q, &[0.0, 0.0], false).unwrap();
        assert!(residual(&p, &q, &[0.0, 0.0]) < 1e-12);
        for (i, j) in [(0, 1), (1, 2), (0, 2)] {
            assert!((p.cosine(i, j) + 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_output() {
        let q = [0.3, 1.2, 0.7, 0.4];
        let x = [0.1, -0.9, 0.4];
        let a = construct_profile(&q, &x, false).unwrap();
        let b = construct_profile(&q, &x, false).unwrap();
        assert_eq!(a, b);
        assert!(residual(&a, &q, &x) < 1e-12);
    }

    #[test]
    fn boundary_profiles_are_rank_one() {
        let q = [1.0, 5.0, 1.0];
        let x = [0.0, 0.0, 3.0];
        let p = construct_profile(&q, &x, false).unwrap();
        assert_eq!(p.column(1), &[0.0, 0.0, 1.0]);
        assert_eq!(p.column(0), &[0.0, 0.0, -1.0]);
        match classify_profile(&p, CLASSIFY_TOL) {
            ProfilePattern::Polarization { sigma, rank, .. } => {
                assert_eq!(sigma, vec![1, -1, 1]);
                assert_eq!(rank, 1);
            }
            other => panic!("expected polarization, got {other:?}"),
        }

        let x = [0.0, 7.0, 0.0];
        let p = construct_profile(&q, &x, false).unwrap();
        assert!(p.columns().iter().all(|c| c == &[0.0, 1.0, 0.0]));
        assert!(matches!(
            classify_profile(&p, CLASSIFY_TOL),
            ProfilePattern::Concentration { rank: 1, .. }
        ));
    }

    #[test]
    fn infeasible_targets_are_rejected() {
        assert!(matches!(
            construct_profile(&[5.0, 1.0, 1.0], &[2.0, 0.0], false),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn one_dimensional_targets() {
        let p = construct_profile(&[2.0, 1.0], &[1.0], false).unwrap();
        assert_eq!(p.columns(), &[vec![1.0], vec![-1.0]]);
        assert!(matches!(
            construct_profile(&[2.0, 1.0], &[2.0], false),
            Err(Error::NoSignSolution { .. })
        ));
    }

    #[test]
    fn classification_examples() {
        let beta = vec![0.0, 1.0];
        let same = CharProfile::concentrated(&beta, 3).unwrap();
        assert_eq!(classify_profile(&same, CLASSIFY_TOL).name(), "concentration");

        let opposed = CharProfile::signed(&beta, &[1, -1]).unwrap();
        match classify_profile(&opposed, CLASSIFY_TOL) {
            ProfilePattern::Polarization { sigma, .. } => assert_eq!(sigma, vec![1, -1]),
            other => panic!("expected polarization, got {other:?}"),
        }

        let q = [2.0 / 3.0, 1.0 / S3];
        let p = construct_profile(&q, &beta, false).unwrap();
        assert!((p.cosine(0, 1) - 1.0 / (2.0 * S3)).abs() < 1e-12);
        assert!(matches!(
            classify_profile(&p, CLASSIFY_TOL),
            ProfilePattern::Differentiation { rank: 2 }
        ));
    }
}
