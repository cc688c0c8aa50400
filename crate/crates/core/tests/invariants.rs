mod common;

use common::{invariants, tiny};
use edqbd::fixed::solve_fixed;
use edqbd::sim::{simulate, SimConfig};
use edqbd::{evaluate, optimize_theta, ModelParams};
use proptest::prelude::*;

fn instance() -> impl Strategy<Value = ModelParams> {
    (1u32..=6, 1u32..=6, 2u32..=30, 0.1f64..0.6, 0.1f64..0.6, 0.15f64..0.85, 0.2f64..0.9, 0.0f64..=1.0, 0.0f64..1.0)
        .prop_map(|(c_u, c_n, k, mu_u, mu_n, p_u, rho, p_a, theta_frac)| {
            let c = f64::from(c_u + c_n);
            ModelParams {
                lambda: rho * c * mu_u / p_u,
                p_u,
                mu_u,
                mu_n,
                c_u,
                c_n,
                k,
                theta: (theta_frac * f64::from(k)) as u32,
                p_a,
                ..ModelParams::rural()
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn structural_invariants(p in instance()) {
        for check in invariants(&p) {
            prop_assert!(check.ok(), "{} = {:e} > {:e}", check.name, check.value, check.tol);
        }
    }

    #[test]
    fn probabilities_are_probabilities(p in instance()) {
        let (_, dist) = edqbd::solve_params(&p).unwrap();
        prop_assert!(dist.x_rows.iter().flat_map(|r| r.iter()).all(|&x| (0.0..=1.0).contains(&x)));
        let m = evaluate(&p).unwrap().metrics;
        for v in [m.p_balk, m.p_band, m.p_cap_loss] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!(m.e_nn_s <= f64::from(p.c_n) + 1e-12);
        prop_assert!(m.e_nn_s + m.e_nu_s <= f64::from(p.c_u + p.c_n) + 1e-12);
    }

    #[test]
    fn optimum_dominates_every_threshold(p in instance()) {
        let curve = optimize_theta(&p).unwrap();
        prop_assert_eq!(curve.rows.len(), p.k as usize);
        for row in &curve.rows {
            prop_assert!(row.evaluation.objective.z <= curve.z_star);
        }
        let first = curve.rows.iter().position(|r| r.evaluation.objective.z == curve.z_star).unwrap();
        prop_assert_eq!(curve.rows[first].theta, curve.theta_star);
    }

    #[test]
    fn redirection_never_hurts_at_the_optimum(p in instance()) {
        let enabled = optimize_theta(&p).unwrap().z_star;
        let disabled = optimize_theta(&p.alternative_care_disabled()).unwrap().z_star;
        prop_assert!(enabled >= disabled - 1e-9 * disabled.abs().max(1.0));
    }

    #[test]
    fn fixed_chain_in_detailed_balance(p in instance()) {
        prop_assume!(p.lambda * p.p_u < f64::from(p.c_u) * p.mu_u);
        let sol = solve_fixed(&p).unwrap();
        prop_assert!(sol.nonurgent.detailed_balance_residual() < 1e-12);
    }
}

#[test]
fn short_simulation_conserves_patients() {
    let cfg = SimConfig { horizon: 2e4, warmup: 1e3, replications: 3, ..SimConfig::default() };
    let res = simulate(&tiny(), &cfg).unwrap();
    assert!(res.counts.conserved());
    for rep in &res.replications {
        assert!(rep.counts.conserved());
    }
}
