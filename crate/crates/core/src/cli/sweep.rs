//! Grids, CSV formatting, and the figure and table sweeps.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;

use crate::benchmark::planner_optimum;
use crate::error::{Error, Result};
use crate::extensions::ownership::{ownership_equilibrium, ownership_welfare_slope};
use crate::welfare::symmetric_welfare_table;
use crate::MarketInstance;

/// `lo:hi:steps`, `steps` evenly spaced points from `lo` to `hi` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl FromStr for Grid {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::invalid("grid", format!("expected lo:hi:steps, got {s:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let steps: usize = parts[2].trim().parse().map_err(|_| bad())?;
        Grid::new(lo, hi, steps)
    }
}

impl Grid {
    pub fn new(lo: f64, hi: f64, steps: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid("grid", "needs finite lo < hi"));
        }
        if steps < 2 {
            return Err(Error::invalid("grid", "needs at least two points"));
        }
        Ok(Grid { lo, hi, steps })
    }

    pub fn points(&self) -> Vec<f64> {
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / last)
            .collect()
    }
}

/// Twelve significant digits in plain decimal notation.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{v:.11e}").parse().unwrap_or(v);
    format!("{rounded}")
}

/// A CSV cell; `None` renders as an empty field.
pub fn cell(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_default()
}

pub fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.into()
}

pub fn render_csv(header: &[String], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{}", r.join(","));
    }
    out
}

fn symmetric_rows(n: usize, alpha: f64, grid: &Grid) -> Result<Vec<crate::welfare::SymmetricRow>> {
    grid.points()
        .par_iter()
        .map(|g| symmetric_welfare_table(n, alpha, *g))
        .collect()
}

/// Per-firm outputs against `gamma`.
pub fn fig4(n: usize, alpha: f64, grid: &Grid) -> Result<String> {
    let header: Vec<String> = [
        "gamma",
        "q_monopoly",
        "q_differentiation",
        "q_concentration",
        "q_polarization_plus",
        "q_polarization_minus",
    ]
    .map(String::from)
    .to_vec();
    let rows = symmetric_rows(n, alpha, grid)?
        .into_iter()
        .map(|r| {
            let o = r.outputs;
            vec![
                format_number(r.gamma),
                format_number(o.monopoly),
                cell(o.differentiation),
                cell(o.concentration),
                cell(o.polarization_plus),
                cell(o.polarization_minus),
            ]
        })
        .collect::<Vec<_>>();
    Ok(render_csv(&header, &rows))
}

/// Welfare relative to the planner against `gamma`.
pub fn fig6(n: usize, alpha: f64, grid: &Grid) -> Result<String> {
    let header: Vec<String> = [
        "gamma",
        "monopoly_ratio",
        "differentiation_ratio",
        "concentration_ratio",
        "polarization_ratio",
    ]
    .map(String::from)
    .to_vec();
    let rows = symmetric_rows(n, alpha, grid)?
        .into_iter()
        .map(|r| {
            let ratio = |v: Option<f64>| cell(v.map(|v| v / r.planner));
            vec![
                format_number(r.gamma),
                ratio(Some(r.monopoly)),
                ratio(r.differentiation),
                ratio(r.concentration),
                ratio(r.polarization),
            ]
        })
        .collect::<Vec<_>>();
    Ok(render_csv(&header, &rows))
}

/// Regime-annotated welfare cells against `gamma`.
pub fn table1(n: usize, alpha: f64, grid: &Grid) -> Result<String> {
    let header: Vec<String> = [
        "gamma",
        "planner_regime",
        "planner",
        "monopoly",
        "differentiation",
        "concentration",
        "polarization",
        "max_gap",
    ]
    .map(String::from)
    .to_vec();
    let rows = symmetric_rows(n, alpha, grid)?
        .into_iter()
        .map(|r| {
            let regime = serde_json::to_value(r.planner_regime)
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default();
            vec![
                format_number(r.gamma),
                regime,
                format_number(r.planner),
                format_number(r.monopoly),
                cell(r.differentiation),
                cell(r.concentration),
                cell(r.polarization),
                format_number(r.max_gap),
            ]
        })
        .collect::<Vec<_>>();
    Ok(render_csv(&header, &rows))
}

fn symmetric_instance(n: usize, alpha: f64, gamma: f64) -> Result<MarketInstance> {
    MarketInstance::new(alpha, vec![1.0, 0.0], vec![gamma; n])
}

/// Differentiation-equilibrium welfare under ownership `kappa`, relative to the
/// planner, one column per symmetric `gamma`.
pub fn fig8(n: usize, alpha: f64, gammas: &[f64], grid: &Grid) -> Result<String> {
    if gammas.is_empty() {
        return Err(Error::invalid("gammas", "needs at least one value"));
    }
    let mut header = vec!["kappa".to_string()];
    header.extend(gammas.iter().map(|g| format!("ratio_gamma_{}", format_number(*g))));
    let insts: Vec<(MarketInstance, f64)> = gammas
        .iter()
        .map(|g| {
            let inst = symmetric_instance(n, alpha, *g)?;
            let planner = planner_optimum(&inst)?.welfare;
            Ok((inst, planner))
        })
        .collect::<Result<_>>()?;
    let rows: Vec<Vec<String>> = grid
        .points()
        .par_iter()
        .map(|k| {
            let mut row = vec![format_number(*k)];
            for (inst, planner) in &insts {
                let eq = ownership_equilibrium(inst, *k)?;
                row.push(cell(eq.map(|e| e.welfare / planner)));
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    Ok(render_csv(&header, &rows))
}

/// Ownership sweep on one instance: outputs, cosine, welfare, and condition flags.
pub fn ownership_sweep(inst: &MarketInstance, grid: &Grid) -> Result<String> {
    let n = inst.n();
    let mut header = vec!["kappa".to_string()];
    header.extend((1..=n).map(|i| format!("q{i}")));
    header.extend(["cosine", "welfare", "exists", "welfare_condition", "slope"].map(String::from));
    let base = inst.without_extensions();
    let rows: Vec<Vec<String>> = grid
        .points()
        .par_iter()
        .map(|k| {
            let eq = ownership_equilibrium(&base, *k)?;
            let mut row = vec![format_number(*k)];
            match &eq {
                Some(e) => row.extend(e.q().iter().map(|v| format_number(*v))),
                None => row.extend((0..n).map(|_| String::new())),
            }
            row.push(cell(eq.as_ref().and_then(|e| e.cosine)));
            row.push(cell(eq.as_ref().map(|e| e.welfare)));
            row.push(flag(eq.is_some()));
            match ownership_welfare_slope(&base, *k) {
                Ok(s) => {
                    row.push(flag(s.condition));
                    row.push(format_number(s.numeric));
                }
                Err(_) => {
                    row.push(String::new());
                    row.push(String::new());
                }
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    Ok(render_csv(&header, &rows))
}
