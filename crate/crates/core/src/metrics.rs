//! Steady-state performance measures and the weighted net-benefit objective.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ModelParams, WaitingCostBasis};
use crate::qbd::{self, StationaryDistribution};

/// Steady-state expectations. Rates per hour, times in hours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerformanceMetrics {
    pub e_nn: f64,
    pub e_nu: f64,
    pub e_nn_s: f64,
    pub e_nu_s: f64,
    pub lambda_n_eff: f64,
    /// `None` when no non-urgent patient is ever admitted.
    pub e_wn: Option<f64>,
    /// `None` without urgent traffic.
    pub e_wu: Option<f64>,
    /// `P(N >= k)`.
    pub p_balk: f64,
    /// `P(theta <= N < k)`.
    pub p_band: f64,
    /// Fraction of non-urgent arrivals that decline redirection while the non-urgent
    /// phase space is full (`j = k - 1`, only reachable with no urgent patient present).
    /// They leave without entering and are charged as balks.
    pub p_cap_loss: f64,
}

impl PerformanceMetrics {
    pub const FIELDS: [&'static str; 10] = [
        "e_nn", "e_nu", "e_nn_s", "e_nu_s", "lambda_n_eff", "e_wn", "e_wu", "p_balk", "p_band", "p_cap_loss",
    ];

    /// Values in `FIELDS` order; undefined delays become NaN.
    pub fn values(&self) -> [f64; 10] {
        [
            self.e_nn,
            self.e_nu,
            self.e_nn_s,
            self.e_nu_s,
            self.lambda_n_eff,
            self.e_wn.unwrap_or(f64::NAN),
            self.e_wu.unwrap_or(f64::NAN),
            self.p_balk,
            self.p_band,
            self.p_cap_loss,
        ]
    }
}

/// Revenue and cost rates (currency per hour) and the net benefit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    pub r_u: f64,
    pub r_n_ed: f64,
    pub r_alt_rev: f64,
    pub b_cost: f64,
    pub w_n_cost: f64,
    pub w_u_cost: f64,
    pub z: f64,
}

impl ObjectiveBreakdown {
    pub const FIELDS: [&'static str; 7] = ["r_u", "r_n_ed", "r_alt_rev", "b_cost", "w_n_cost", "w_u_cost", "z"];

    pub fn values(&self) -> [f64; 7] {
        [self.r_u, self.r_n_ed, self.r_alt_rev, self.b_cost, self.w_n_cost, self.w_u_cost, self.z]
    }
}

/// Metrics and objective of one solved policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub metrics: PerformanceMetrics,
    pub objective: ObjectiveBreakdown,
}

pub fn compute_metrics(dist: &StationaryDistribution, params: &ModelParams) -> Result<PerformanceMetrics> {
    let d = params.derive()?;
    if dist.k != params.k as usize || dist.h != d.h {
        return Err(Error::Numerical(format!(
            "distribution shape (h={}, k={}) does not match parameters (h={}, k={})",
            dist.h, dist.k, d.h, params.k
        )));
    }
    let k = dist.k;
    let c = d.c_total as usize;
    let theta = params.theta as usize;

    let (mut e_nn, mut e_nu, mut e_nn_s, mut e_nu_s) = (0.0, 0.0, 0.0, 0.0);
    let (mut admitted, mut p_balk, mut p_band, mut p_cap_loss) = (0.0, 0.0, 0.0, 0.0);

    for (i, row) in dist.x_rows[..dist.h].iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            let occupancy = i + j;
            e_nn += j as f64 * p;
            e_nu += i as f64 * p;
            e_nn_s += params.servers_nonurgent(i, j) as f64 * p;
            e_nu_s += i.min(c) as f64 * p;
            let alpha = params.alpha(i, j);
            if j + 1 < k {
                admitted += alpha * p;
            } else {
                p_cap_loss += alpha * p;
            }
            if occupancy >= params.k as usize {
                p_balk += p;
            } else if occupancy >= theta {
                p_band += p;
            }
        }
    }

    // levels >= h: N >= k, nobody admitted, no non-urgent service, all c beds urgent
    let tail = dist.tail_sums();
    e_nn += tail.nonurgent_moment;
    e_nu += tail.urgent_moment;
    e_nu_s += c as f64 * tail.mass;
    p_balk += tail.mass;

    let lambda_n_eff = d.lambda_n * admitted;
    Ok(PerformanceMetrics {
        e_nn,
        e_nu,
        e_nn_s,
        e_nu_s,
        lambda_n_eff,
        e_wn: (lambda_n_eff > 0.0).then(|| e_nn / lambda_n_eff),
        e_wu: (d.lambda_u > 0.0).then(|| e_nu / d.lambda_u),
        p_balk,
        p_band,
        p_cap_loss,
    })
}

pub fn compute_objective(metrics: &PerformanceMetrics, params: &ModelParams) -> Result<ObjectiveBreakdown> {
    let d = params.derive()?;
    let r_u = params.r_u_ed * params.mu_u * metrics.e_nu_s;
    let r_n_ed = params.r_n_ed * params.mu_n * metrics.e_nn_s;
    let r_alt_rev = params.r_alt * d.lambda_n * params.p_a * metrics.p_band;
    let b_cost = params.c_b * d.lambda_n * (metrics.p_balk + metrics.p_cap_loss);
    let (w_n_cost, w_u_cost) = match params.waiting_cost_basis {
        WaitingCostBasis::Headcount => (params.cw_n * metrics.e_nn, params.cw_u * metrics.e_nu),
        WaitingCostBasis::PerPatientDelay => {
            // a class with no traffic accrues no delay cost; admitted traffic with an
            // undefined delay cannot happen, but zero admission with arrivals can
            let wn = match metrics.e_wn {
                Some(w) => params.cw_n * w,
                None if d.lambda_n == 0.0 || metrics.e_nn <= 1e-12 => 0.0,
                None => return Err(Error::UndefinedDelay),
            };
            let wu = metrics.e_wu.map_or(0.0, |w| params.cw_u * w);
            (wn, wu)
        }
    };
    let z = params.w_rev * (r_u + r_n_ed + r_alt_rev) - params.w_balk * b_cost - params.w_wait * (w_n_cost + w_u_cost);
    Ok(ObjectiveBreakdown {
        r_u,
        r_n_ed,
        r_alt_rev,
        b_cost,
        w_n_cost,
        w_u_cost,
        z,
    })
}

/// Solves the nested model at `params.theta` and evaluates metrics and objective.
pub fn evaluate(params: &ModelParams) -> Result<Evaluation> {
    let (_, dist) = qbd::solve_params(params)?;
    evaluate_distribution(&dist, params)
}

pub fn evaluate_distribution(dist: &StationaryDistribution, params: &ModelParams) -> Result<Evaluation> {
    let metrics = compute_metrics(dist, params)?;
    let objective = compute_objective(&metrics, params)?;
    Ok(Evaluation { metrics, objective })
}
