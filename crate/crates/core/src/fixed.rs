//! Fixed-partition baseline: an autonomous M/M/c_u urgent queue and a birth-death
//! non-urgent queue whose arrival rates average the admission rule over the urgent
//! marginal. Also the nested-versus-fixed comparison tables.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::{compute_objective, Evaluation, PerformanceMetrics};
use crate::params::{CapacityMode, ModelParams, StabilityVerdict};
use crate::policy::{self, ThetaCurve};

/// Stationary M/M/c distribution: explicit probabilities for `0..=c`, geometric with
/// ratio `a / c` above.
#[derive(Debug, Clone, PartialEq)]
pub struct ErlangMarginal {
    pub offered_load: f64,
    pub servers: u32,
    pub rho: f64,
    head: Vec<f64>,
    pub delay_probability: f64,
}

/// M/M/c with offered load `a = lambda / mu`. Erlang B by the recursion
/// `B(n) = a B(n-1) / (n + a B(n-1))`, Erlang C by `C = B / (1 - rho (1 - B))`, and
/// the remaining probabilities by stepping down from `pi(c) = C (1 - rho)`.
pub fn erlang_mmc(a: f64, servers: u32) -> Result<ErlangMarginal> {
    if servers == 0 {
        return Err(Error::invalid("c_u", "an M/M/c queue needs at least one server"));
    }
    if !(a.is_finite() && a >= 0.0) {
        return Err(Error::invalid("lambda", format!("offered load must be finite and >= 0, got {a}")));
    }
    let c = servers as usize;
    let rho = a / c as f64;
    if rho >= 1.0 {
        return Err(Error::Unstable { mode: "M/M/c", intensity: rho });
    }
    let mut head = vec![0.0; c + 1];
    if a == 0.0 {
        head[0] = 1.0;
        return Ok(ErlangMarginal { offered_load: a, servers, rho, head, delay_probability: 0.0 });
    }
    let mut b = 1.0;
    for n in 1..=c {
        b = a * b / (n as f64 + a * b);
    }
    let delay = b / (1.0 - rho * (1.0 - b));
    head[c] = delay * (1.0 - rho);
    for i in (1..=c).rev() {
        head[i - 1] = head[i] * i as f64 / a;
    }
    Ok(ErlangMarginal { offered_load: a, servers, rho, head, delay_probability: delay })
}

impl ErlangMarginal {
    pub fn prob(&self, i: usize) -> f64 {
        let c = self.servers as usize;
        if i <= c {
            self.head[i]
        } else {
            self.head[c] * self.rho.powi((i - c) as i32)
        }
    }

    /// `P(N >= m)`.
    pub fn tail_from(&self, m: usize) -> f64 {
        let c = self.servers as usize;
        let geometric = 1.0 / (1.0 - self.rho);
        if m >= c {
            self.head[c] * self.rho.powi((m - c) as i32) * geometric
        } else {
            self.head[m..c].iter().sum::<f64>() + self.head[c] * geometric
        }
    }

    /// `P(N < m)`.
    pub fn below(&self, m: usize) -> f64 {
        let c = self.servers as usize;
        if m <= c + 1 {
            self.head[..m.min(c + 1)].iter().sum()
        } else {
            1.0 - self.tail_from(m)
        }
    }

    /// `L_q = pi(c) rho / (1 - rho)^2`.
    pub fn mean_queue(&self) -> f64 {
        let c = self.servers as usize;
        self.head[c] * self.rho / ((1.0 - self.rho) * (1.0 - self.rho))
    }

    pub fn mean_in_system(&self) -> f64 {
        self.mean_queue() + self.offered_load
    }

    /// Equals the offered load by flow balance.
    pub fn mean_busy(&self) -> f64 {
        let c = self.servers as usize;
        let below: f64 = self.head.iter().enumerate().take(c).map(|(i, p)| i as f64 * p).sum();
        below + c as f64 * self.tail_from(c)
    }
}

/// Birth-death chain on `0..n` in product form.
#[derive(Debug, Clone, PartialEq)]
pub struct BirthDeathDistribution {
    pub probs: Vec<f64>,
    /// `birth[j]`: rate `j -> j+1` (last entry is zero).
    pub birth: Vec<f64>,
    /// `death[j]`: rate `j -> j-1` (first entry is zero).
    pub death: Vec<f64>,
}

pub fn solve_birth_death(birth: Vec<f64>, death: Vec<f64>) -> Result<BirthDeathDistribution> {
    let n = birth.len();
    assert_eq!(n, death.len());
    let mut probs = vec![0.0; n];
    probs[0] = 1.0;
    for j in 1..n {
        if birth[j - 1] == 0.0 {
            break;
        }
        if death[j] <= 0.0 {
            return Err(Error::Numerical(format!("birth-death chain has no exit from state {j}")));
        }
        probs[j] = probs[j - 1] * birth[j - 1] / death[j];
    }
    let total: f64 = probs.iter().sum();
    if !total.is_finite() {
        return Err(Error::Numerical("birth-death product form overflowed".into()));
    }
    for p in &mut probs {
        *p /= total;
    }
    Ok(BirthDeathDistribution { probs, birth, death })
}

impl BirthDeathDistribution {
    /// Largest `|pi_j lambda_j - pi_{j+1} mu_{j+1}|`.
    pub fn detailed_balance_residual(&self) -> f64 {
        (0..self.probs.len().saturating_sub(1))
            .map(|j| (self.probs[j] * self.birth[j] - self.probs[j + 1] * self.death[j + 1]).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct FixedSolution {
    pub urgent: ErlangMarginal,
    pub nonurgent: BirthDeathDistribution,
    pub evaluation: Evaluation,
}

pub fn solve_fixed(params: &ModelParams) -> Result<FixedSolution> {
    let d = params.derive()?;
    params.check_stability(CapacityMode::Fixed)?.into_result()?;
    if params.c_n == 0 && d.lambda_n > 0.0 {
        return Err(Error::invalid("c_n", "fixed partition needs at least one non-urgent bed"));
    }
    let urgent = erlang_mmc(d.lambda_u / params.mu_u, params.c_u)?;
    let k = params.k as usize;
    let theta = params.theta as usize;

    // for non-urgent count j: P(i < theta - j), P(theta - j <= i < k - j), P(i >= k - j)
    let below_theta: Vec<f64> = (0..k).map(|j| urgent.below(theta.saturating_sub(j))).collect();
    let below_k: Vec<f64> = (0..k).map(|j| urgent.below(k - j)).collect();
    let band: Vec<f64> = (0..k).map(|j| (below_k[j] - below_theta[j]).max(0.0)).collect();
    let balk: Vec<f64> = (0..k).map(|j| urgent.tail_from(k - j)).collect();
    let admit: Vec<f64> = (0..k).map(|j| below_theta[j] + (1.0 - params.p_a) * band[j]).collect();

    let birth: Vec<f64> = (0..k).map(|j| if j + 1 < k { d.lambda_n * admit[j] } else { 0.0 }).collect();
    let death: Vec<f64> = (0..k).map(|j| params.mu_n * j.min(params.c_n as usize) as f64).collect();
    let nonurgent = solve_birth_death(birth, death)?;
    let pn = &nonurgent.probs;

    let e_nn = pn.iter().enumerate().map(|(j, p)| j as f64 * p).sum();
    let e_nn_s = pn.iter().enumerate().map(|(j, p)| j.min(params.c_n as usize) as f64 * p).sum();
    let lambda_n_eff = pn.iter().zip(&nonurgent.birth).map(|(p, b)| p * b).sum::<f64>();
    let p_band = pn.iter().zip(&band).map(|(p, b)| p * b).sum();
    let p_balk = pn.iter().zip(&balk).map(|(p, b)| p * b).sum();
    let p_cap_loss = pn[k - 1] * admit[k - 1];
    let e_nu = urgent.mean_in_system();

    let metrics = PerformanceMetrics {
        e_nn,
        e_nu,
        e_nn_s,
        e_nu_s: urgent.offered_load,
        lambda_n_eff,
        e_wn: (lambda_n_eff > 0.0).then(|| e_nn / lambda_n_eff),
        e_wu: (d.lambda_u > 0.0).then(|| e_nu / d.lambda_u),
        p_balk,
        p_band,
        p_cap_loss,
    };
    let objective = compute_objective(&metrics, params)?;
    Ok(FixedSolution { urgent, nonurgent, evaluation: Evaluation { metrics, objective } })
}

pub fn evaluate_fixed(params: &ModelParams) -> Result<Evaluation> {
    Ok(solve_fixed(params)?.evaluation)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Winner {
    Nested,
    Fixed,
    Tie,
    FixedUnstable,
}

impl Winner {
    pub fn label(self) -> &'static str {
        match self {
            Winner::Nested => "NESTED",
            Winner::Fixed => "FIXED",
            Winner::Tie => "TIE",
            Winner::FixedUnstable => "FIXED UNSTABLE",
        }
    }

    fn decide(nested: f64, fixed: f64) -> Self {
        let diff = nested - fixed;
        if diff.abs() <= 1e-9 * nested.abs().max(fixed.abs()).max(1.0) {
            Winner::Tie
        } else if diff > 0.0 {
            Winner::Nested
        } else {
            Winner::Fixed
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub theta: u32,
    pub nested_z: f64,
    pub fixed_z: Option<f64>,
    pub difference: Option<f64>,
    pub winner: Winner,
}

/// Nested and fixed objective at each threshold of `theta_grid`.
pub fn compare_nested_fixed(params: &ModelParams, theta_grid: &[u32]) -> Result<Vec<ComparisonRow>> {
    params.validate()?;
    if let Some(&bad) = theta_grid.iter().find(|&&t| t >= params.k) {
        return Err(Error::invalid("theta", format!("grid value {bad} outside [0, {}]", params.k - 1)));
    }
    let fixed_stable = params.check_stability(CapacityMode::Fixed)?.stable;
    theta_grid
        .par_iter()
        .map(|&theta| {
            let p = params.with_theta(theta);
            let wrap = |e| Error::AtTheta { theta, source: Box::new(e) };
            let nested_z = crate::metrics::evaluate(&p).map_err(wrap)?.objective.z;
            if !fixed_stable {
                return Ok(ComparisonRow { theta, nested_z, fixed_z: None, difference: None, winner: Winner::FixedUnstable });
            }
            let fixed_z = evaluate_fixed(&p).map_err(wrap)?.objective.z;
            Ok(ComparisonRow {
                theta,
                nested_z,
                fixed_z: Some(fixed_z),
                difference: Some(nested_z - fixed_z),
                winner: Winner::decide(nested_z, fixed_z),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct BedCombinationRow {
    pub c_u: u32,
    pub c_n: u32,
    pub nested_verdict_intensity: f64,
    pub fixed_verdict_intensity: f64,
    pub nested: Option<(u32, f64)>,
    pub fixed: Option<(u32, f64)>,
    pub difference: Option<f64>,
    pub winner: Winner,
}

/// Every split `c_u = 1 ..= c_total - 1`, each mode with its own optimal threshold.
pub fn bed_combination_scan(params: &ModelParams, c_total: u32) -> Result<Vec<BedCombinationRow>> {
    if c_total < 2 {
        return Err(Error::invalid("c_u", format!("a split needs c_total >= 2, got {c_total}")));
    }
    (1..c_total)
        .into_par_iter()
        .map(|c_u| {
            let p = ModelParams { c_u, c_n: c_total - c_u, ..params.clone() };
            let nested_v: StabilityVerdict = p.check_stability(CapacityMode::Nested)?;
            let fixed_v = p.check_stability(CapacityMode::Fixed)?;
            let nested = if nested_v.stable {
                let curve: ThetaCurve = policy::optimize_theta(&p)?;
                Some((curve.theta_star, curve.z_star))
            } else {
                None
            };
            let fixed = if fixed_v.stable {
                let curve = policy::optimize_theta_with(&p, evaluate_fixed)?;
                Some((curve.theta_star, curve.z_star))
            } else {
                None
            };
            let (difference, winner) = match (nested, fixed) {
                (Some((_, n)), Some((_, f))) => (Some(n - f), Winner::decide(n, f)),
                (Some(_), None) => (None, Winner::FixedUnstable),
                (None, Some(_)) => (None, Winner::Fixed),
                (None, None) => (None, Winner::FixedUnstable),
            };
            Ok(BedCombinationRow {
                c_u,
                c_n: c_total - c_u,
                nested_verdict_intensity: nested_v.intensity,
                fixed_verdict_intensity: fixed_v.intensity,
                nested,
                fixed,
                difference,
                winner,
            })
        })
        .collect()
}
