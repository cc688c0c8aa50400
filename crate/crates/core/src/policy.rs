//! Threshold enumeration and bed-split search.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixed;
use crate::metrics::{self, Evaluation};
use crate::params::{CapacityMode, ModelParams};

#[derive(Debug, Clone, Serialize)]
pub struct ThetaRow {
    pub theta: u32,
    pub evaluation: Evaluation,
}

/// Objective over the full threshold grid `0..k`.
#[derive(Debug, Clone, Serialize)]
pub struct ThetaCurve {
    pub rows: Vec<ThetaRow>,
    pub theta_star: u32,
    pub z_star: f64,
}

impl ThetaCurve {
    pub fn z(&self, theta: u32) -> Option<f64> {
        self.rows.get(theta as usize).map(|r| r.evaluation.objective.z)
    }

    pub fn best(&self) -> &Evaluation {
        &self.rows[self.theta_star as usize].evaluation
    }
}

/// Nested-model enumeration.
pub fn optimize_theta(params: &ModelParams) -> Result<ThetaCurve> {
    params.check_stability(CapacityMode::Nested)?.into_result()?;
    optimize_theta_with(params, metrics::evaluate)
}

/// Enumerates `theta = 0..k` with any evaluator. Ties go to the smallest threshold.
pub fn optimize_theta_with<F>(params: &ModelParams, evaluate: F) -> Result<ThetaCurve>
where
    F: Fn(&ModelParams) -> Result<Evaluation> + Sync,
{
    params.validate()?;
    let rows: Vec<ThetaRow> = (0..params.k)
        .into_par_iter()
        .map(|theta| {
            evaluate(&params.with_theta(theta))
                .map(|evaluation| ThetaRow { theta, evaluation })
                .map_err(|e| Error::AtTheta { theta, source: Box::new(e) })
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (idx, row) in rows.iter().enumerate() {
        if row.evaluation.objective.z > rows[best].evaluation.objective.z {
            best = idx;
        }
    }
    let z_star = rows[best].evaluation.objective.z;
    if !z_star.is_finite() {
        return Err(Error::Numerical(format!("objective is not finite at theta = {best}")));
    }
    Ok(ThetaCurve { theta_star: best as u32, z_star, rows })
}

#[derive(Debug, Clone, Serialize)]
pub struct CapacityRow {
    pub c_u: u32,
    pub c_n: u32,
    pub intensity: f64,
    pub stable: bool,
    pub theta_star: Option<u32>,
    pub z_star: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CapacityScan {
    pub mode: CapacityMode,
    pub c_total: u32,
    pub rows: Vec<CapacityRow>,
    /// Index into `rows`; `None` when no split is stable.
    pub best: Option<usize>,
}

impl CapacityScan {
    pub fn best_row(&self) -> Option<&CapacityRow> {
        self.best.map(|i| &self.rows[i])
    }
}

/// Tries every split `c_u = 1 ..= c_total - 1`. Unstable splits are kept with their verdict.
pub fn optimize_capacity(params: &ModelParams, c_total: u32, mode: CapacityMode) -> Result<CapacityScan> {
    if c_total < 2 {
        return Err(Error::invalid("c_u", format!("capacity scan needs c_total >= 2, got {c_total}")));
    }
    let rows: Vec<CapacityRow> = (1..c_total)
        .into_par_iter()
        .map(|c_u| {
            let p = ModelParams { c_u, c_n: c_total - c_u, ..params.clone() };
            let verdict = p.check_stability(mode)?;
            let mut row = CapacityRow {
                c_u,
                c_n: c_total - c_u,
                intensity: verdict.intensity,
                stable: verdict.stable,
                theta_star: None,
                z_star: None,
            };
            if verdict.stable {
                let curve = match mode {
                    CapacityMode::Nested => optimize_theta(&p)?,
                    CapacityMode::Fixed => optimize_theta_with(&p, fixed::evaluate_fixed)?,
                };
                row.theta_star = Some(curve.theta_star);
                row.z_star = Some(curve.z_star);
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let mut best: Option<usize> = None;
    for (idx, row) in rows.iter().enumerate() {
        if let Some(z) = row.z_star {
            if best.is_none_or(|b| z > rows[b].z_star.unwrap_or(f64::NEG_INFINITY)) {
                best = Some(idx);
            }
        }
    }
    Ok(CapacityScan { mode, c_total, rows, best })
}
