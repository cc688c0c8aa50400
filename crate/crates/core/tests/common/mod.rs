#![allow(dead_code)]

use edqbd::ModelParams;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stationary law of the CTMC truncated at urgent level `cap`, solved densely from
/// the transition rules. Row `i` holds `pi(i, 0..k)`.
pub fn dense_stationary(p: &ModelParams, cap: usize) -> Vec<Vec<f64>> {
    let k = p.k as usize;
    let c = (p.c_u + p.c_n) as usize;
    let lu = p.lambda * p.p_u;
    let ln = p.lambda * (1.0 - p.p_u);
    let n = (cap + 1) * k;
    let idx = |i: usize, j: usize| i * k + j;
    let alpha = |i: usize, j: usize| {
        let occ = i + j;
        if occ < p.theta as usize {
            1.0
        } else if occ < k {
            1.0 - p.p_a
        } else {
            0.0
        }
    };
    let mut q = DMatrix::<f64>::zeros(n, n);
    for i in 0..=cap {
        for j in 0..k {
            let s = idx(i, j);
            if i < cap {
                q[(s, idx(i + 1, j))] += lu;
            }
            if i > 0 {
                q[(s, idx(i - 1, j))] += p.mu_u * i.min(c) as f64;
            }
            if j + 1 < k {
                q[(s, idx(i, j + 1))] += ln * alpha(i, j);
            }
            if j > 0 {
                let busy = j.min(c.saturating_sub(i)).min(p.c_n as usize);
                q[(s, idx(i, j - 1))] += p.mu_n * busy as f64;
            }
            let out: f64 = q.row(s).sum();
            q[(s, s)] = -out;
        }
    }
    // solve pi Q = 0, sum pi = 1: transpose and swap the last equation for normalization
    let mut m = q.transpose();
    m.row_mut(n - 1).fill(1.0);
    let mut rhs = DVector::<f64>::zeros(n);
    rhs[n - 1] = 1.0;
    let pi = m.lu().solve(&rhs).expect("truncated generator is irreducible");
    (0..=cap).map(|i| (0..k).map(|j| pi[idx(i, j)]).collect()).collect()
}

/// Truncation level whose neglected urgent tail is below `tol`.
pub fn truncation_level(p: &ModelParams, h: usize, tol: f64) -> usize {
    let c = (p.c_u + p.c_n) as f64;
    let rho = p.lambda * p.p_u / (c * p.mu_u);
    if rho == 0.0 {
        return h;
    }
    h + (tol.ln() / rho.ln()).ceil() as usize + 1
}

/// l1 distance between the solver's distribution and the dense oracle over levels
/// `0..=cap`.
pub fn l1_to_oracle(p: &ModelParams) -> f64 {
    let (_, dist) = edqbd::solve_params(p).expect("stable instance");
    let cap = truncation_level(p, dist.h, 1e-13);
    let oracle = dense_stationary(p, cap);
    let mut l1 = 0.0;
    for (i, row) in oracle.iter().enumerate() {
        for (j, &o) in row.iter().enumerate() {
            l1 += (dist.pi(i, j).unwrap() - o).abs();
        }
    }
    l1
}

/// Three-phase toy instance with one bed per class.
pub fn tiny() -> ModelParams {
    ModelParams {
        lambda: 1.0,
        p_u: 0.5,
        mu_u: 1.0,
        mu_n: 1.0,
        c_u: 1,
        c_n: 1,
        k: 3,
        theta: 1,
        p_a: 0.5,
        ..ModelParams::rural()
    }
}

/// Stable instance drawn from `rng` with `h = max(k, c) <= h_max`, urgent intensity in
/// `[0.2, rho_max]` and total arrival rate at most about 4 per hour.
pub fn random_instance(rng: &mut impl Rng, h_max: u32, rho_max: f64) -> ModelParams {
    loop {
        let c_u = rng.random_range(1..=6u32);
        let c_n = rng.random_range(1..=6u32);
        let c = c_u + c_n;
        if c > h_max {
            continue;
        }
        let k = rng.random_range(2..=h_max);
        let theta = rng.random_range(0..k);
        let mu_u = rng.random_range(0.1..0.6);
        let mu_n = rng.random_range(0.1..0.6);
        let p_u = rng.random_range(0.15..0.85);
        let rho = rng.random_range(0.2..rho_max);
        let lambda = rho * f64::from(c) * mu_u / p_u;
        if lambda > 4.0 {
            continue;
        }
        return ModelParams {
            lambda,
            p_u,
            mu_u,
            mu_n,
            c_u,
            c_n,
            k,
            theta,
            p_a: rng.random_range(0.0..1.0),
            ..ModelParams::rural()
        };
    }
}

pub fn random_instances(seed: u64, n: usize, h_max: u32, rho_max: f64) -> Vec<ModelParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_instance(&mut rng, h_max, rho_max)).collect()
}

/// One invariant measured on one instance.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tol: f64,
}

impl Check {
    pub fn ok(&self) -> bool {
        self.value <= self.tol
    }
}

/// Normalization, balance, flow balance, admission decomposition, urgent-term
/// θ-invariance and p_a = 0 θ-flatness.
pub fn invariants(p: &ModelParams) -> Vec<Check> {
    let (blocks, dist) = edqbd::solve_params(p).expect("stable instance");
    let m = edqbd::metrics::evaluate_distribution(&dist, p).unwrap().metrics;
    let lu = p.lambda * p.p_u;
    let ln = p.lambda * (1.0 - p.p_u);
    let rel = |a: f64, b: f64| if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) };

    let mut checks = vec![
        Check { name: "normalization", value: (dist.total_mass() - 1.0).abs(), tol: 1e-10 },
        Check { name: "balance_residual", value: dist.balance_residual(&blocks), tol: 1e-9 },
        Check { name: "flow_balance_nonurgent", value: rel(m.lambda_n_eff, p.mu_n * m.e_nn_s), tol: 1e-8 },
        Check { name: "flow_balance_urgent", value: rel(lu, p.mu_u * m.e_nu_s), tol: 1e-8 },
        Check {
            name: "admission_decomposition",
            value: (m.lambda_n_eff + ln * (p.p_a * m.p_band + m.p_balk + m.p_cap_loss) - ln).abs(),
            tol: 1e-9,
        },
    ];

    let mut urgent_drift = 0.0f64;
    for theta in [0, p.k / 2, p.k - 1] {
        let (_, other) = edqbd::solve_params(&p.with_theta(theta)).unwrap();
        for level in 0..=dist.h {
            urgent_drift = urgent_drift.max((other.level_marginal(level) - dist.level_marginal(level)).abs());
        }
    }
    checks.push(Check { name: "urgent_theta_invariance", value: urgent_drift, tol: 1e-10 });

    let flat = ModelParams { p_a: 0.0, ..p.clone() };
    let zs: Vec<f64> = [0, p.k / 2, p.k - 1]
        .iter()
        .map(|&t| edqbd::evaluate(&flat.with_theta(t)).unwrap().objective.z)
        .collect();
    let spread = zs.iter().map(|z| rel(*z, zs[0])).fold(0.0, f64::max);
    checks.push(Check { name: "p_a_zero_flatness", value: spread, tol: 1e-9 });
    checks
}
