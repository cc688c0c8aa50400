//! Patient-level discrete-event simulation of the nested and fixed bed models.

use std::collections::VecDeque;
use std::fs;
use std::io::{BufWriter, Write as _};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::metrics::{ObjectiveBreakdown, PerformanceMetrics};
use crate::params::{CapacityMode, ModelParams, WaitingCostBasis};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub horizon: f64,
    pub warmup: f64,
    pub replications: u32,
    pub seed: u64,
    pub mode: CapacityMode,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { horizon: 1e6, warmup: 1e4, replications: 10, seed: 20240601, mode: CapacityMode::Nested }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.warmup.is_finite() && self.warmup >= 0.0) {
            return Err(Error::Config(format!("warmup must be finite and >= 0, got {}", self.warmup)));
        }
        if !(self.horizon.is_finite() && self.horizon > self.warmup) {
            return Err(Error::Config(format!("horizon {} must exceed warmup {}", self.horizon, self.warmup)));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        Ok(())
    }
}

/// Non-urgent outcomes and service events of one or more replications.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EventCounts {
    pub urgent_arrivals: u64,
    pub nonurgent_arrivals: u64,
    pub admissions: u64,
    pub redirections_accepted: u64,
    pub redirections_declined: u64,
    /// Includes arrivals lost because the non-urgent count was at its cap.
    pub balks: u64,
    pub cap_losses: u64,
    pub preemptions: u64,
    pub urgent_completions: u64,
    pub nonurgent_completions: u64,
}

impl EventCounts {
    fn add(&mut self, o: &EventCounts) {
        self.urgent_arrivals += o.urgent_arrivals;
        self.nonurgent_arrivals += o.nonurgent_arrivals;
        self.admissions += o.admissions;
        self.redirections_accepted += o.redirections_accepted;
        self.redirections_declined += o.redirections_declined;
        self.balks += o.balks;
        self.cap_losses += o.cap_losses;
        self.preemptions += o.preemptions;
        self.urgent_completions += o.urgent_completions;
        self.nonurgent_completions += o.nonurgent_completions;
    }

    /// Every non-urgent arrival is admitted, redirected, or lost.
    pub fn conserved(&self) -> bool {
        self.admissions + self.redirections_accepted + self.balks == self.nonurgent_arrivals
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    /// 95% Student-t half-width over replications; infinite with one replication.
    pub half_width: f64,
}

impl Estimate {
    pub fn contains(&self, x: f64) -> bool {
        (x - self.mean).abs() <= self.half_width
    }

    pub fn lo(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn hi(&self) -> f64 {
        self.mean + self.half_width
    }
}

/// One replication's time averages and rates over the post-warmup window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Replication {
    pub metrics: PerformanceMetrics,
    pub objective: ObjectiveBreakdown,
    pub counts: EventCounts,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimResult {
    pub config: SimConfig,
    pub metric_names: Vec<&'static str>,
    pub metrics: Vec<Estimate>,
    pub objective_names: Vec<&'static str>,
    pub objective: Vec<Estimate>,
    pub counts: EventCounts,
    pub replications: Vec<Replication>,
}

impl SimResult {
    pub fn metric(&self, name: &str) -> Option<Estimate> {
        self.metric_names.iter().position(|n| *n == name).map(|i| self.metrics[i])
    }

    pub fn objective_term(&self, name: &str) -> Option<Estimate> {
        self.objective_names.iter().position(|n| *n == name).map(|i| self.objective[i])
    }

    pub fn z(&self) -> Estimate {
        self.objective_term("z").expect("z is always estimated")
    }
}

pub fn simulate(params: &ModelParams, config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    params.check_stability(config.mode)?.into_result()?;
    if config.mode == CapacityMode::Fixed && params.c_n == 0 && params.p_u < 1.0 {
        return Err(Error::invalid("c_n", "fixed partition needs at least one non-urgent bed"));
    }
    let reps: Vec<Replication> = (0..config.replications)
        .into_par_iter()
        .map(|r| run_replication(params, config, r, None))
        .collect::<Result<_>>()?;
    summarize(config, reps)
}

/// Runs replication 0 only and writes every event as `time,event,n_u,n_n`.
pub fn simulate_with_log(params: &ModelParams, config: &SimConfig, log: &Path) -> Result<Replication> {
    config.validate()?;
    params.check_stability(config.mode)?.into_result()?;
    let file = fs::File::create(log).map_err(|source| Error::Io { path: log.to_path_buf(), source })?;
    let mut out = BufWriter::new(file);
    writeln!(out, "time,event,n_u,n_n").map_err(|source| Error::Io { path: log.to_path_buf(), source })?;
    let rep = run_replication(params, config, 0, Some((&mut out, log.to_path_buf())))?;
    out.flush().map_err(|source| Error::Io { path: log.to_path_buf(), source })?;
    Ok(rep)
}

fn summarize(config: &SimConfig, reps: Vec<Replication>) -> Result<SimResult> {
    let n = reps.len();
    let t = if n > 1 {
        StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .map_err(|e| Error::Simulation(e.to_string()))?
            .inverse_cdf(0.975)
    } else {
        f64::INFINITY
    };
    let estimate = |values: Vec<f64>| -> Estimate {
        let finite: Vec<f64> = values.into_iter().filter(|v| v.is_finite()).collect();
        let m = finite.len();
        if m == 0 {
            return Estimate { mean: f64::NAN, half_width: f64::NAN };
        }
        let mean = finite.iter().sum::<f64>() / m as f64;
        let half_width = if m > 1 {
            let var = finite.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
            let q = if m == n { t } else { t_quantile(m) };
            q * (var / m as f64).sqrt()
        } else {
            f64::INFINITY
        };
        Estimate { mean, half_width }
    };
    let metrics = (0..PerformanceMetrics::FIELDS.len())
        .map(|f| estimate(reps.iter().map(|r| r.metrics.values()[f]).collect()))
        .collect();
    let objective = (0..ObjectiveBreakdown::FIELDS.len())
        .map(|f| estimate(reps.iter().map(|r| r.objective.values()[f]).collect()))
        .collect();
    let mut counts = EventCounts::default();
    for r in &reps {
        counts.add(&r.counts);
    }
    Ok(SimResult {
        config: config.clone(),
        metric_names: PerformanceMetrics::FIELDS.to_vec(),
        metrics,
        objective_names: ObjectiveBreakdown::FIELDS.to_vec(),
        objective,
        counts,
        replications: reps,
    })
}

fn t_quantile(m: usize) -> f64 {
    StudentsT::new(0.0, 1.0, (m - 1) as f64).map_or(f64::INFINITY, |d| d.inverse_cdf(0.975))
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Class {
    Urgent,
    NonUrgent,
}

#[derive(Clone, Copy, Debug)]
struct Bed {
    class: Class,
    arrival: f64,
    start: f64,
    finish: f64,
}

const STREAM_ARRIVAL: u64 = 0;
const STREAM_CLASS: u64 = 1;
const STREAM_ACCEPT: u64 = 2;
const STREAM_SERVICE: u64 = 3;

fn stream(seed: u64, replication: u32, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(replication) * 4 + purpose);
    rng
}

fn exp(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    let e: f64 = Exp1.sample(rng);
    e / rate
}

struct Accum {
    from: f64,
    nn: f64,
    nu: f64,
    nn_s: f64,
    nu_s: f64,
    band: f64,
    balk: f64,
    cap: f64,
    sojourn_n: (f64, u64),
    sojourn_u: (f64, u64),
}

type Log<'a> = Option<(&'a mut BufWriter<fs::File>, PathBuf)>;

fn run_replication(params: &ModelParams, config: &SimConfig, replication: u32, mut log: Log<'_>) -> Result<Replication> {
    let d = params.derive()?;
    let mut arrivals = stream(config.seed, replication, STREAM_ARRIVAL);
    let mut classify = stream(config.seed, replication, STREAM_CLASS);
    let mut accept = stream(config.seed, replication, STREAM_ACCEPT);
    let mut service = stream(config.seed, replication, STREAM_SERVICE);

    let nested = config.mode == CapacityMode::Nested;
    let c = d.c_total as usize;
    let c_u = params.c_u as usize;
    let c_n = params.c_n as usize;
    let k = params.k as usize;
    let theta = params.theta as usize;

    let mut urgent_queue: VecDeque<f64> = VecDeque::new();
    let mut nonurgent_queue: VecDeque<f64> = VecDeque::new();
    let mut beds: Vec<Bed> = Vec::with_capacity(c);
    let (mut n_u, mut n_n) = (0usize, 0usize);
    let mut counts = EventCounts::default();
    let mut acc = Accum {
        from: config.warmup,
        nn: 0.0,
        nu: 0.0,
        nn_s: 0.0,
        nu_s: 0.0,
        band: 0.0,
        balk: 0.0,
        cap: 0.0,
        sojourn_n: (0.0, 0),
        sojourn_u: (0.0, 0),
    };
    let mut post_warmup_events = 0u64;

    let mut now: f64 = 0.0;
    let mut next_arrival = exp(&mut arrivals, params.lambda);

    loop {
        let (bed_idx, bed_finish) = beds
            .iter()
            .enumerate()
            .fold((usize::MAX, f64::INFINITY), |best, (i, b)| if b.finish < best.1 { (i, b.finish) } else { best });
        let t_next = next_arrival.min(bed_finish).min(config.horizon);

        // integrate the current state over [now, t_next)
        let lo = now.max(acc.from);
        if t_next > lo {
            let dt = t_next - lo;
            let in_u = beds.iter().filter(|b| b.class == Class::Urgent).count();
            let in_n = beds.len() - in_u;
            let total = n_u + n_n;
            acc.nn += dt * n_n as f64;
            acc.nu += dt * n_u as f64;
            acc.nn_s += dt * in_n as f64;
            acc.nu_s += dt * in_u as f64;
            if total >= k {
                acc.balk += dt;
            } else if total >= theta {
                acc.band += dt;
            }
            if n_n + 1 == k {
                acc.cap += dt * params.alpha(n_u, n_n);
            }
        }
        now = t_next;
        if now >= config.horizon {
            break;
        }
        let counting = now >= config.warmup;
        if counting {
            post_warmup_events += 1;
        }

        let event: &str;
        if next_arrival <= bed_finish {
            next_arrival = now + exp(&mut arrivals, params.lambda);
            if classify.random::<f64>() < params.p_u {
                event = "urgent_arrival";
                if counting {
                    counts.urgent_arrivals += 1;
                }
                n_u += 1;
                urgent_queue.push_back(now);
            } else {
                if counting {
                    counts.nonurgent_arrivals += 1;
                }
                let total = n_u + n_n;
                let mut admit = total < theta;
                if total >= k {
                    event = "balk";
                    if counting {
                        counts.balks += 1;
                    }
                } else if total >= theta {
                    if accept.random::<f64>() < params.p_a {
                        event = "redirect_accepted";
                        if counting {
                            counts.redirections_accepted += 1;
                        }
                    } else {
                        event = "redirect_declined";
                        if counting {
                            counts.redirections_declined += 1;
                        }
                        admit = true;
                    }
                } else {
                    event = "admit";
                }
                if admit {
                    if n_n + 1 >= k {
                        if counting {
                            counts.balks += 1;
                            counts.cap_losses += 1;
                        }
                    } else {
                        if counting {
                            counts.admissions += 1;
                        }
                        n_n += 1;
                        nonurgent_queue.push_back(now);
                    }
                }
            }
        } else {
            let done = beds.swap_remove(bed_idx);
            let sojourn = now - done.arrival;
            let measured = done.arrival >= config.warmup;
            match done.class {
                Class::Urgent => {
                    event = "urgent_departure";
                    n_u -= 1;
                    if counting {
                        counts.urgent_completions += 1;
                    }
                    if measured {
                        acc.sojourn_u.0 += sojourn;
                        acc.sojourn_u.1 += 1;
                    }
                }
                Class::NonUrgent => {
                    event = "nonurgent_departure";
                    n_n -= 1;
                    if counting {
                        counts.nonurgent_completions += 1;
                    }
                    if measured {
                        acc.sojourn_n.0 += sojourn;
                        acc.sojourn_n.1 += 1;
                    }
                }
            }
        }

        // allocate beds
        let in_u = beds.iter().filter(|b| b.class == Class::Urgent).count();
        let (target_u, target_n) = if nested {
            let s_u = n_u.min(c);
            (s_u, n_n.min(c - s_u).min(c_n))
        } else {
            (n_u.min(c_u), n_n.min(c_n))
        };
        for _ in in_u..target_u {
            if nested && beds.len() >= c {
                // preempt the most recently started non-urgent patient
                let (victim, _) = beds
                    .iter()
                    .enumerate()
                    .filter(|(_, b)| b.class == Class::NonUrgent)
                    .fold((usize::MAX, f64::NEG_INFINITY), |best, (i, b)| if b.start > best.1 { (i, b.start) } else { best });
                let bumped = beds.swap_remove(victim);
                nonurgent_queue.push_front(bumped.arrival);
                if counting {
                    counts.preemptions += 1;
                }
            }
            let arrival = urgent_queue.pop_front().expect("urgent queue holds the waiting urgent patients");
            beds.push(Bed { class: Class::Urgent, arrival, start: now, finish: now + exp(&mut service, params.mu_u) });
        }
        let in_n = beds.len() - target_u;
        for _ in in_n..target_n {
            let arrival = nonurgent_queue.pop_front().expect("non-urgent queue holds the waiting patients");
            beds.push(Bed { class: Class::NonUrgent, arrival, start: now, finish: now + exp(&mut service, params.mu_n) });
        }

        if let Some((out, path)) = log.as_mut() {
            writeln!(out, "{now:?},{event},{n_u},{n_n}").map_err(|source| Error::Io { path: path.clone(), source })?;
        }
    }

    if post_warmup_events == 0 {
        return Err(Error::Simulation(format!(
            "replication {replication}: no events between warmup {} and horizon {}",
            config.warmup, config.horizon
        )));
    }

    let span = config.horizon - config.warmup;
    let lambda_n_eff = counts.admissions as f64 / span;
    let metrics = PerformanceMetrics {
        e_nn: acc.nn / span,
        e_nu: acc.nu / span,
        e_nn_s: acc.nn_s / span,
        e_nu_s: acc.nu_s / span,
        lambda_n_eff,
        e_wn: (acc.sojourn_n.1 > 0).then(|| acc.sojourn_n.0 / acc.sojourn_n.1 as f64),
        e_wu: (acc.sojourn_u.1 > 0).then(|| acc.sojourn_u.0 / acc.sojourn_u.1 as f64),
        p_balk: acc.balk / span,
        p_band: acc.band / span,
        p_cap_loss: acc.cap / span,
    };
    let (w_n_cost, w_u_cost) = match params.waiting_cost_basis {
        WaitingCostBasis::Headcount => (params.cw_n * metrics.e_nn, params.cw_u * metrics.e_nu),
        WaitingCostBasis::PerPatientDelay => (
            metrics.e_wn.map_or(0.0, |w| params.cw_n * w),
            metrics.e_wu.map_or(0.0, |w| params.cw_u * w),
        ),
    };
    let r_u = params.r_u_ed * counts.urgent_completions as f64 / span;
    let r_n_ed = params.r_n_ed * counts.nonurgent_completions as f64 / span;
    let r_alt_rev = params.r_alt * counts.redirections_accepted as f64 / span;
    let b_cost = params.c_b * counts.balks as f64 / span;
    let z = params.w_rev * (r_u + r_n_ed + r_alt_rev) - params.w_balk * b_cost - params.w_wait * (w_n_cost + w_u_cost);
    Ok(Replication {
        metrics,
        objective: ObjectiveBreakdown { r_u, r_n_ed, r_alt_rev, b_cost, w_n_cost, w_u_cost, z },
        counts,
    })
}
