//! One-at-a-time ratio sensitivity: tornado reports, shifted-scenario grids, and
//! proportional sweeps with re-optimized thresholds.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics;
use crate::params::{round_half_up, CapacityMode, ModelParams};
use crate::policy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Ratio {
    Bed,
    Service,
    Revenue,
    Waiting,
    AltRevenue,
    Balking,
    Threshold,
}

impl Ratio {
    pub const ALL: [Ratio; 7] = [
        Ratio::Bed,
        Ratio::Service,
        Ratio::Revenue,
        Ratio::Waiting,
        Ratio::AltRevenue,
        Ratio::Balking,
        Ratio::Threshold,
    ];

    /// The ratios that still mean something once redirection is switched off.
    pub const DISABLED: [Ratio; 5] = [Ratio::Bed, Ratio::Service, Ratio::Revenue, Ratio::Waiting, Ratio::Balking];

    pub fn name(self) -> &'static str {
        match self {
            Ratio::Bed => "bed_ratio",
            Ratio::Service => "service_ratio",
            Ratio::Revenue => "revenue_ratio",
            Ratio::Waiting => "waiting_ratio",
            Ratio::AltRevenue => "alt_revenue_ratio",
            Ratio::Balking => "balking_ratio",
            Ratio::Threshold => "threshold_ratio",
        }
    }

    pub fn value(self, p: &ModelParams) -> f64 {
        match self {
            Ratio::Bed => f64::from(p.c_u) / f64::from(p.c_total()),
            Ratio::Service => p.mu_u / p.mu_n,
            Ratio::Revenue => p.r_u_ed / p.r_n_ed,
            Ratio::Waiting => p.cw_u / p.cw_n,
            Ratio::AltRevenue => p.r_alt / p.r_n_ed,
            Ratio::Balking => p.c_b / p.r_n_ed,
            Ratio::Threshold => f64::from(p.theta) / f64::from(p.k),
        }
    }

    /// Perturbation anchor. Same as [`Ratio::value`] except that a bed split produced by
    /// the nominal urgent share is anchored at that share.
    pub fn anchor(self, p: &ModelParams) -> f64 {
        let nominal = ModelParams::DEFAULT_BED_RATIO;
        if self == Ratio::Bed && round_half_up(nominal * f64::from(p.c_total())) == i64::from(p.c_u) {
            nominal
        } else {
            self.value(p)
        }
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Ratio {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ratio::ALL
            .into_iter()
            .find(|r| r.name() == s || r.name().trim_end_matches("_ratio") == s)
            .ok_or_else(|| Error::Config(format!("unknown ratio `{s}`")))
    }
}

/// Sets `ratio` to `value`. Money ratios move their numerator; the service ratio moves
/// `mu_n` so the urgent queue stays put. Bed and threshold ratios snap to the nearest
/// integer split; read the realized value back with [`Ratio::value`].
pub fn apply_ratio(params: &ModelParams, ratio: Ratio, value: f64) -> Result<ModelParams> {
    let infeasible = |reason: String| Error::InfeasibleRatio { ratio: ratio.name().into(), value, reason };
    if !(value.is_finite() && value >= 0.0) {
        return Err(infeasible("must be finite and >= 0".into()));
    }
    let mut p = params.clone();
    match ratio {
        Ratio::Bed => {
            let c = p.c_total();
            let c_u = round_half_up(value * f64::from(c));
            if c_u < 1 || c_u >= i64::from(c) {
                let lo = 1.0 / f64::from(c);
                let hi = f64::from(c.saturating_sub(1)) / f64::from(c);
                return Err(infeasible(format!(
                    "gives c_u = {c_u} of {c} beds; nearest feasible ratio is {}",
                    if c_u < 1 { lo } else { hi }
                )));
            }
            p.c_u = c_u as u32;
            p.c_n = c - p.c_u;
        }
        Ratio::Service => {
            if value == 0.0 {
                return Err(infeasible("ratio must be > 0".into()));
            }
            p.mu_n = p.mu_u / value;
        }
        Ratio::Revenue => p.r_u_ed = value * p.r_n_ed,
        Ratio::Waiting => p.cw_u = value * p.cw_n,
        Ratio::AltRevenue => p.r_alt = value * p.r_n_ed,
        Ratio::Balking => p.c_b = value * p.r_n_ed,
        Ratio::Threshold => {
            let theta = round_half_up(value * f64::from(p.k));
            if theta >= i64::from(p.k) {
                let top = f64::from(p.k - 1) / f64::from(p.k);
                return Err(infeasible(format!("gives theta = {theta} >= k; nearest feasible ratio is {top}")));
            }
            p.theta = theta as u32;
        }
    }
    p.validate()?;
    Ok(p)
}

#[derive(Debug, Clone, Serialize)]
pub struct TornadoRow {
    pub ratio: Ratio,
    pub base: f64,
    pub low: f64,
    pub high: f64,
    pub delta_low: f64,
    pub delta_high: f64,
    pub impact: f64,
    pub rel_impact_pct: f64,
    pub rank: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TornadoReport {
    pub z0: f64,
    pub theta: u32,
    pub variation: f64,
    /// Ranked by impact, descending; ties by ratio name; failed rows last.
    pub rows: Vec<TornadoRow>,
}

impl TornadoReport {
    pub fn top(&self) -> Option<&TornadoRow> {
        self.rows.first().filter(|r| r.error.is_none())
    }

    pub fn row(&self, ratio: Ratio) -> Option<&TornadoRow> {
        self.rows.iter().find(|r| r.ratio == ratio)
    }
}

/// Perturbs each ratio by `±variation` around `params` with the threshold held at
/// `params.theta`.
pub fn tornado(params: &ModelParams, ratios: &[Ratio], variation: f64) -> Result<TornadoReport> {
    let z0 = metrics::evaluate(params)?.objective.z;
    let mut rows: Vec<TornadoRow> = ratios
        .par_iter()
        .map(|&ratio| {
            let base = ratio.anchor(params);
            let (low, high) = (base * (1.0 - variation), base * (1.0 + variation));
            let z_at = |v: f64| -> Result<f64> { Ok(metrics::evaluate(&apply_ratio(params, ratio, v)?)?.objective.z) };
            match (z_at(low), z_at(high)) {
                (Ok(zl), Ok(zh)) => {
                    let impact = (zh - zl).abs();
                    TornadoRow {
                        ratio,
                        base,
                        low,
                        high,
                        delta_low: zl - z0,
                        delta_high: zh - z0,
                        impact,
                        rel_impact_pct: 100.0 * impact / z0.abs(),
                        rank: 0,
                        error: None,
                    }
                }
                (a, b) => TornadoRow {
                    ratio,
                    base,
                    low,
                    high,
                    delta_low: f64::NAN,
                    delta_high: f64::NAN,
                    impact: f64::NAN,
                    rel_impact_pct: f64::NAN,
                    rank: 0,
                    error: Some(a.err().or(b.err()).map(|e| e.to_string()).unwrap_or_default()),
                },
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        a.error
            .is_some()
            .cmp(&b.error.is_some())
            .then(b.impact.total_cmp(&a.impact))
            .then(a.ratio.name().cmp(b.ratio.name()))
    });
    for (i, row) in rows.iter_mut().enumerate() {
        row.rank = i + 1;
    }
    Ok(TornadoReport { z0, theta: params.theta, variation, rows })
}

/// Tornado of the redirection model at its optimal threshold.
pub fn tornado_enabled(params: &ModelParams, variation: f64) -> Result<TornadoReport> {
    let curve = policy::optimize_theta(params)?;
    tornado(&params.with_theta(curve.theta_star), &Ratio::ALL, variation)
}

/// Tornado of the model with redirection switched off.
pub fn tornado_disabled(params: &ModelParams, variation: f64) -> Result<TornadoReport> {
    tornado(&params.alternative_care_disabled(), &Ratio::DISABLED, variation)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Shifted {
    Lambda,
    PU,
    MuU,
    Capacity,
    PA,
    K,
    Theta,
}

/// One named single-parameter shift.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioCase {
    pub name: &'static str,
    pub description: &'static str,
    pub shift: Option<(Shifted, f64)>,
}

const fn case(name: &'static str, description: &'static str, shift: Option<(Shifted, f64)>) -> ScenarioCase {
    ScenarioCase { name, description, shift }
}

/// The fifteen redirection-model cases.
pub fn enabled_cases() -> Vec<ScenarioCase> {
    let mut cases = disabled_cases();
    cases.extend([
        case("High Acceptance Rate", "p_a +20%", Some((Shifted::PA, 0.2))),
        case("Low Acceptance Rate", "p_a -20%", Some((Shifted::PA, -0.2))),
        case("High Theta", "theta +20%", Some((Shifted::Theta, 0.2))),
        case("Low Theta", "theta -20%", Some((Shifted::Theta, -0.2))),
    ]);
    cases
}

/// The eleven cases that also apply without redirection.
pub fn disabled_cases() -> Vec<ScenarioCase> {
    vec![
        case("Baseline", "Original parameters", None),
        case("High Arrival Rate", "lambda +20%", Some((Shifted::Lambda, 0.2))),
        case("Low Arrival Rate", "lambda -20%", Some((Shifted::Lambda, -0.2))),
        case("High Urgent Proportion", "p_u +20%", Some((Shifted::PU, 0.2))),
        case("Low Urgent Proportion", "p_u -20%", Some((Shifted::PU, -0.2))),
        case("High Urgent Service Rate", "mu_u +20%", Some((Shifted::MuU, 0.2))),
        case("Low Urgent Service Rate", "mu_u -20%", Some((Shifted::MuU, -0.2))),
        case("High Capacity", "c +20%", Some((Shifted::Capacity, 0.2))),
        case("Low Capacity", "c -20%", Some((Shifted::Capacity, -0.2))),
        case("High Balking Threshold", "k +20%", Some((Shifted::K, 0.2))),
        case("Low Balking Threshold", "k -20%", Some((Shifted::K, -0.2))),
    ]
}

/// Applies a case. Probabilities are capped at 1; integer quantities round half up,
/// and capacity is re-split at the original bed ratio. A shift that makes the nested
/// model unstable falls back to the baseline value and is reported as capped.
pub fn apply_case(params: &ModelParams, case: &ScenarioCase) -> Result<(ModelParams, bool)> {
    let Some((what, rel)) = case.shift else {
        return Ok((params.clone(), false));
    };
    let f = 1.0 + rel;
    let scale_int = |x: u32| round_half_up(f64::from(x) * f).max(0) as u32;
    let mut p = params.clone();
    let mut capped = false;
    match what {
        Shifted::Lambda => p.lambda *= f,
        Shifted::PU => {
            p.p_u *= f;
            if p.p_u > 1.0 {
                p.p_u = 1.0;
                capped = true;
            }
        }
        Shifted::MuU => p.mu_u *= f,
        Shifted::Capacity => {
            let c = scale_int(params.c_total()).max(2);
            let c_u = round_half_up(Ratio::Bed.value(params) * f64::from(c)).clamp(1, i64::from(c) - 1) as u32;
            p.c_u = c_u;
            p.c_n = c - c_u;
        }
        Shifted::PA => {
            p.p_a *= f;
            if p.p_a > 1.0 {
                p.p_a = 1.0;
                capped = true;
            }
        }
        Shifted::K => {
            p.k = scale_int(params.k).max(1);
            p.theta = p.theta.min(p.k - 1);
        }
        Shifted::Theta => p.theta = scale_int(params.theta).min(params.k - 1),
    }
    p.validate()?;
    if !p.check_stability(CapacityMode::Nested)?.stable {
        p = params.clone();
        capped = true;
    }
    Ok((p, capped))
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioRow {
    pub case: &'static str,
    pub description: &'static str,
    pub capped: bool,
    pub baseline_obj: f64,
    pub theta_star: u32,
    pub theta_over_k: f64,
    pub top_ratio: Option<Ratio>,
    pub rel_impact_pct: f64,
    pub enabled_z: f64,
    pub enabled_rel_impact_pct: f64,
    pub disabled_z: Option<f64>,
    pub disabled_rel_impact_pct: Option<f64>,
    pub benefit: Option<f64>,
    pub gain_pct: Option<f64>,
    pub error: Option<String>,
}

impl ScenarioRow {
    fn failed(case: &ScenarioCase, err: Error) -> Self {
        ScenarioRow {
            case: case.name,
            description: case.description,
            capped: false,
            baseline_obj: f64::NAN,
            theta_star: 0,
            theta_over_k: f64::NAN,
            top_ratio: None,
            rel_impact_pct: f64::NAN,
            enabled_z: f64::NAN,
            enabled_rel_impact_pct: f64::NAN,
            disabled_z: None,
            disabled_rel_impact_pct: None,
            benefit: None,
            gain_pct: None,
            error: Some(err.to_string()),
        }
    }
}

/// Which model a scenario grid describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridModel {
    Enabled,
    Disabled,
}

/// Runs every case: the grid model's own optimum and tornado, plus the matched
/// enabled-versus-disabled benefit where the case exists in both models. Gain is the
/// benefit relative to `|Z_disabled|`.
pub fn scenario_grid(params: &ModelParams, cases: &[ScenarioCase], model: GridModel, variation: f64) -> Vec<ScenarioRow> {
    cases
        .par_iter()
        .map(|case| scenario_row(params, case, model, variation).unwrap_or_else(|e| ScenarioRow::failed(case, e)))
        .collect()
}

fn scenario_row(params: &ModelParams, case: &ScenarioCase, model: GridModel, variation: f64) -> Result<ScenarioRow> {
    let (p, capped) = apply_case(params, case)?;
    let curve = policy::optimize_theta(&p)?;
    let enabled_at = p.with_theta(curve.theta_star);
    let enabled = tornado(&enabled_at, &Ratio::ALL, variation)?;
    let with_disabled = matches!(case.shift, None | Some((Shifted::Lambda | Shifted::PU | Shifted::MuU | Shifted::Capacity | Shifted::K, _)));
    let disabled = if with_disabled || model == GridModel::Disabled {
        Some(tornado_disabled(&p, variation)?)
    } else {
        None
    };
    let own = match model {
        GridModel::Enabled => &enabled,
        GridModel::Disabled => disabled.as_ref().expect("disabled grid always solves the disabled model"),
    };
    let top = own.top();
    let disabled_z = disabled.as_ref().map(|d| d.z0);
    let benefit = disabled_z.map(|dz| curve.z_star - dz);
    Ok(ScenarioRow {
        case: case.name,
        description: case.description,
        capped,
        baseline_obj: own.z0,
        theta_star: curve.theta_star,
        theta_over_k: f64::from(curve.theta_star) / f64::from(p.k),
        top_ratio: top.map(|r| r.ratio),
        rel_impact_pct: top.map_or(f64::NAN, |r| r.rel_impact_pct),
        enabled_z: curve.z_star,
        enabled_rel_impact_pct: enabled.top().map_or(f64::NAN, |r| r.rel_impact_pct),
        disabled_z,
        disabled_rel_impact_pct: disabled.as_ref().and_then(|d| d.top()).map(|r| r.rel_impact_pct),
        benefit,
        gain_pct: benefit.zip(disabled_z).map(|(b, dz)| 100.0 * b / dz.abs()),
        error: None,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub requested: f64,
    pub ratio_value: f64,
    pub theta_star: Option<u32>,
    pub z: Option<f64>,
    pub error: Option<String>,
}

/// Evenly spaced grid over `[lo, hi]`. Each point re-optimizes the threshold, except a
/// threshold sweep, where the threshold is the swept quantity itself.
pub fn proportional_sweep(params: &ModelParams, ratio: Ratio, lo: f64, hi: f64, steps: usize) -> Result<Vec<SweepPoint>> {
    if steps == 0 || !(lo <= hi) {
        return Err(Error::Config(format!("sweep needs lo <= hi and steps >= 1, got [{lo}, {hi}] x {steps}")));
    }
    let grid: Vec<f64> = if steps == 1 {
        vec![lo]
    } else {
        (0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect()
    };
    Ok(grid
        .into_par_iter()
        .map(|requested| {
            let point = apply_ratio(params, ratio, requested).and_then(|p| {
                let (theta, z) = if ratio == Ratio::Threshold {
                    (p.theta, metrics::evaluate(&p)?.objective.z)
                } else {
                    let curve = policy::optimize_theta(&p)?;
                    (curve.theta_star, curve.z_star)
                };
                Ok((ratio.value(&p), theta, z))
            });
            match point {
                Ok((ratio_value, theta, z)) => {
                    SweepPoint { requested, ratio_value, theta_star: Some(theta), z: Some(z), error: None }
                }
                Err(e) => SweepPoint { requested, ratio_value: f64::NAN, theta_star: None, z: None, error: Some(e.to_string()) },
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rural_base_ratios() {
        let p = ModelParams::rural();
        assert!((Ratio::Waiting.value(&p) - 103.958).abs() < 5e-4);
        assert!((Ratio::Revenue.value(&p) - 3.288).abs() < 5e-4);
        assert!((Ratio::Threshold.value(&p) - 0.135).abs() < 5e-4);
        assert!((Ratio::Bed.value(&p) - 4.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn waiting_ratio_moves_numerator() {
        let p = ModelParams::rural();
        let q = apply_ratio(&p, Ratio::Waiting, Ratio::Waiting.value(&p) * 1.05).unwrap();
        assert!((q.cw_u - 5808.19).abs() < 0.01);
        assert_eq!(q.cw_n, p.cw_n);
    }

    #[test]
    fn threshold_and_bed_rounding() {
        let p = ModelParams::rural();
        assert_eq!(apply_ratio(&p, Ratio::Threshold, 0.135 * 1.05).unwrap().theta, 5);
        let q = apply_ratio(&p, Ratio::Bed, 0.4).unwrap();
        assert_eq!((q.c_u, q.c_n), (4, 5));
        let err = apply_ratio(&p, Ratio::Bed, 0.01).unwrap_err();
        assert!(matches!(err, Error::InfeasibleRatio { .. }));
        assert!(err.to_string().contains("nearest feasible"));
    }

    #[test]
    fn service_ratio_moves_nonurgent_rate() {
        let p = ModelParams::rural();
        let q = apply_ratio(&p, Ratio::Service, Ratio::Service.value(&p) * 1.05).unwrap();
        assert_eq!(q.mu_u, p.mu_u);
        assert!((q.mu_n - p.mu_n / 1.05).abs() < 1e-15);
    }

    #[test]
    fn bed_anchor_is_nominal_share() {
        assert_eq!(Ratio::Bed.anchor(&ModelParams::rural()), 0.4);
        let odd = ModelParams { c_u: 6, c_n: 3, ..ModelParams::rural() };
        assert_eq!(Ratio::Bed.anchor(&odd), 6.0 / 9.0);
    }

    #[test]
    fn zero_variation_is_flat() {
        let report = tornado(&ModelParams::rural(), &Ratio::ALL, 0.0).unwrap();
        assert!(report.rows.iter().all(|r| r.impact == 0.0));
        let names: Vec<&str> = report.rows.iter().map(|r| r.ratio.name()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
    }

    #[test]
    fn threshold_rounding_gives_zero_impact() {
        let report = tornado(&ModelParams::rural(), &Ratio::ALL, 0.05).unwrap();
        assert_eq!(report.row(Ratio::Threshold).unwrap().impact, 0.0);
    }

    #[test]
    fn alt_revenue_leaves_urgent_terms_alone() {
        let p = ModelParams::rural();
        let base = metrics::evaluate(&p).unwrap().objective;
        let moved = metrics::evaluate(&apply_ratio(&p, Ratio::AltRevenue, 1.1).unwrap()).unwrap().objective;
        assert_eq!(base.r_u, moved.r_u);
        assert_eq!(base.w_u_cost, moved.w_u_cost);
        assert_eq!(base.r_n_ed, moved.r_n_ed);
        assert_ne!(base.r_alt_rev, moved.r_alt_rev);
    }

    #[test]
    fn rural_tornado_top_ratio() {
        let report = tornado_enabled(&ModelParams::rural(), 0.05).unwrap();
        let top = report.top().unwrap();
        assert_eq!(top.ratio, Ratio::Waiting);
        assert!((top.rel_impact_pct - 10.81).abs() < 0.2, "{}", top.rel_impact_pct);
    }

    #[test]
    fn unstable_case_falls_back() {
        let urban = ModelParams::urban();
        let high = &disabled_cases()[1];
        let (p, capped) = apply_case(&urban, high).unwrap();
        assert!(capped);
        assert_eq!(p.lambda, urban.lambda);
        let (p, capped) = apply_case(&urban, &disabled_cases()[3]).unwrap();
        assert!(capped);
        assert_eq!(p.p_u, 1.0);
    }

    #[test]
    fn case_lists() {
        assert_eq!(enabled_cases().len(), 15);
        assert_eq!(disabled_cases().len(), 11);
    }

    #[test]
    fn identity_case_reproduces_base_tornado() {
        let p = ModelParams::rural();
        let rows = scenario_grid(&p, &disabled_cases()[..1], GridModel::Enabled, 0.05);
        let base = tornado_enabled(&p, 0.05).unwrap();
        assert_eq!(rows[0].baseline_obj, base.z0);
        assert_eq!(rows[0].rel_impact_pct, base.top().unwrap().rel_impact_pct);
    }

    #[test]
    fn single_point_sweep_matches_optimizer() {
        let p = ModelParams::rural();
        let v = Ratio::Waiting.value(&p);
        let pts = proportional_sweep(&p, Ratio::Waiting, v, v, 1).unwrap();
        let curve = policy::optimize_theta(&p).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].theta_star, Some(curve.theta_star));
        assert!((pts[0].z.unwrap() - curve.z_star).abs() < 1e-9 * curve.z_star.abs());
    }

    #[test]
    fn sweep_records_failures() {
        let pts = proportional_sweep(&ModelParams::rural(), Ratio::Bed, 0.0, 0.5, 3).unwrap();
        assert!(pts[0].error.is_some());
        assert!(pts[2].error.is_none());
    }
}
