//! Scenario parameters, derived quantities, and the state-dependent admission and
//! server-allocation rules shared by the analytic solvers and the simulator.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the waiting-cost term of the objective is charged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WaitingCostBasis {
    /// `cw * E[N]`: cost accrues per patient-hour present.
    #[default]
    Headcount,
    /// `cw * E[W]`: cost charged on the expected sojourn time.
    PerPatientDelay,
}

/// Capacity-sharing regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityMode {
    /// Urgent patients overflow into non-urgent beds with preemptive priority.
    Nested,
    /// Urgent and non-urgent pools are strictly segregated.
    Fixed,
}

impl CapacityMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CapacityMode::Nested => "nested",
            CapacityMode::Fixed => "fixed",
        }
    }
}

impl fmt::Display for CapacityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// All exogenous inputs of one scenario. Rates are per hour, money in currency units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub lambda: f64,
    pub p_u: f64,
    pub mu_u: f64,
    pub mu_n: f64,
    pub c_u: u32,
    pub c_n: u32,
    /// Balking cutoff on total occupancy.
    pub k: u32,
    /// Redirection threshold on total occupancy.
    pub theta: u32,
    pub p_a: f64,
    pub r_u_ed: f64,
    pub r_n_ed: f64,
    pub r_alt: f64,
    pub c_b: f64,
    pub cw_u: f64,
    pub cw_n: f64,
    pub w_rev: f64,
    pub w_balk: f64,
    pub w_wait: f64,
    pub waiting_cost_basis: WaitingCostBasis,
}

/// Quantities that follow mechanically from [`ModelParams`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    pub lambda_u: f64,
    pub lambda_n: f64,
    pub c_total: u32,
    /// Urgent intensity against the full bed pool, `lambda_u / (c_total * mu_u)`.
    pub rho_u: f64,
    /// Number of boundary levels, `max(k, c_total)`.
    pub h: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityVerdict {
    pub mode: CapacityMode,
    pub intensity: f64,
    pub stable: bool,
}

impl StabilityVerdict {
    pub fn into_result(self) -> Result<Self> {
        if self.stable {
            Ok(self)
        } else {
            Err(Error::Unstable {
                mode: self.mode.as_str(),
                intensity: self.intensity,
            })
        }
    }
}

/// Rounds half away from zero; the bed-split and threshold rules rely on `x.5 -> up`.
pub fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

impl ModelParams {
    /// Urgent share of beds used by the presets.
    pub const DEFAULT_BED_RATIO: f64 = 0.4;

    fn base(lambda: f64, p_u: f64, c_total: u32, k: u32, theta: u32) -> Self {
        let c_u = round_half_up(Self::DEFAULT_BED_RATIO * f64::from(c_total)) as u32;
        ModelParams {
            lambda,
            p_u,
            mu_u: 0.15,
            mu_n: 0.32,
            c_u,
            c_n: c_total - c_u,
            k,
            theta,
            p_a: 0.52,
            r_u_ed: 2221.00,
            r_n_ed: 675.50,
            r_alt: 436.00,
            c_b: 550.96,
            cw_u: 5531.61,
            cw_n: 53.21,
            w_rev: 1.0,
            w_balk: 1.0,
            w_wait: 1.0,
            waiting_cost_basis: WaitingCostBasis::Headcount,
        }
    }

    /// Rural ED: 9 beds (4 urgent / 5 non-urgent), k = 37, theta = 5.
    pub fn rural() -> Self {
        Self::base(2.0, 0.39, 9, 37, 5)
    }

    /// Urban ED: 34 beds (14 urgent / 20 non-urgent), k = 39, theta = 27.
    pub fn urban() -> Self {
        Self::base(5.0, 0.85, 34, 39, 27)
    }

    /// High-volume instance used for the nested versus fixed-partition comparison.
    pub fn nested_vs_fixed() -> Self {
        ModelParams {
            lambda: 20.0,
            p_u: 0.8,
            mu_u: 4.0,
            mu_n: 6.0,
            c_u: 8,
            c_n: 10,
            k: 25,
            theta: 20,
            p_a: 0.5,
            r_u_ed: 200.0,
            r_n_ed: 100.0,
            r_alt: 40.0,
            c_b: 30.0,
            cw_u: 30.0,
            cw_n: 20.0,
            w_rev: 1.0,
            w_balk: 1.0,
            w_wait: 1.0,
            waiting_cost_basis: WaitingCostBasis::Headcount,
        }
    }

    pub const PRESET_NAMES: [&'static str; 3] = ["rural", "urban", "nested-vs-fixed"];

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "rural" => Some(Self::rural()),
            "urban" => Some(Self::urban()),
            "nested-vs-fixed" => Some(Self::nested_vs_fixed()),
            _ => None,
        }
    }

    /// Same scenario with redirection switched off: offers are never accepted and a
    /// balked patient costs the lost ED revenue.
    pub fn alternative_care_disabled(&self) -> Self {
        ModelParams {
            p_a: 0.0,
            c_b: self.r_n_ed,
            ..self.clone()
        }
    }

    pub fn c_total(&self) -> u32 {
        self.c_u + self.c_n
    }

    pub fn with_theta(&self, theta: u32) -> Self {
        ModelParams {
            theta,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn finite_positive(field: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(field, format!("must be finite and > 0, got {v}")))
            }
        }
        fn probability(field: &'static str, v: f64) -> Result<()> {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::invalid(field, format!("must lie in [0, 1], got {v}")))
            }
        }
        fn money(field: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(field, format!("must be finite and >= 0, got {v}")))
            }
        }

        finite_positive("lambda", self.lambda)?;
        probability("p_u", self.p_u)?;
        finite_positive("mu_u", self.mu_u)?;
        finite_positive("mu_n", self.mu_n)?;
        if self.c_total() == 0 {
            return Err(Error::invalid("c_u", "c_u + c_n must be at least 1"));
        }
        if self.k == 0 {
            return Err(Error::invalid("k", "must be a positive integer"));
        }
        if self.theta >= self.k {
            return Err(Error::invalid(
                "theta",
                format!("must lie in [0, k-1] = [0, {}], got {}", self.k - 1, self.theta),
            ));
        }
        probability("p_a", self.p_a)?;
        money("r_u_ed", self.r_u_ed)?;
        money("r_n_ed", self.r_n_ed)?;
        money("r_alt", self.r_alt)?;
        money("c_b", self.c_b)?;
        money("cw_u", self.cw_u)?;
        money("cw_n", self.cw_n)?;
        money("w_rev", self.w_rev)?;
        money("w_balk", self.w_balk)?;
        money("w_wait", self.w_wait)?;
        Ok(())
    }

    pub fn derive(&self) -> Result<DerivedParams> {
        self.validate()?;
        let lambda_u = self.lambda * self.p_u;
        let lambda_n = self.lambda * (1.0 - self.p_u);
        let c_total = self.c_total();
        Ok(DerivedParams {
            lambda_u,
            lambda_n,
            c_total,
            rho_u: lambda_u / (f64::from(c_total) * self.mu_u),
            h: self.k.max(c_total) as usize,
        })
    }

    /// Nested mode needs `lambda_u / (c * mu_u) < 1`; fixed mode needs
    /// `lambda_u / (c_u * mu_u) < 1` with at least one urgent bed.
    pub fn check_stability(&self, mode: CapacityMode) -> Result<StabilityVerdict> {
        let d = self.derive()?;
        let verdict = match mode {
            CapacityMode::Nested => StabilityVerdict {
                mode,
                intensity: d.rho_u,
                stable: d.rho_u < 1.0,
            },
            CapacityMode::Fixed => {
                if self.c_u == 0 {
                    StabilityVerdict {
                        mode,
                        intensity: if d.lambda_u > 0.0 { f64::INFINITY } else { 0.0 },
                        stable: false,
                    }
                } else {
                    let intensity = d.lambda_u / (f64::from(self.c_u) * self.mu_u);
                    StabilityVerdict {
                        mode,
                        intensity,
                        stable: intensity < 1.0,
                    }
                }
            }
        };
        Ok(verdict)
    }

    /// Probability that a non-urgent arrival seeing `i` urgent and `j` non-urgent
    /// patients joins the ED queue.
    pub fn alpha(&self, i: usize, j: usize) -> f64 {
        let occupancy = i + j;
        if occupancy < self.theta as usize {
            1.0
        } else if occupancy < self.k as usize {
            1.0 - self.p_a
        } else {
            0.0
        }
    }

    /// Busy servers working on urgent patients.
    pub fn servers_urgent(&self, i: usize) -> usize {
        i.min(self.c_total() as usize)
    }

    /// Busy servers working on non-urgent patients: capped by the dedicated pool and by
    /// whatever the urgent class has not taken.
    pub fn servers_nonurgent(&self, i: usize, j: usize) -> usize {
        let free = (self.c_total() as usize).saturating_sub(i);
        j.min(free).min(self.c_n as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rural_derived_quantities() {
        let d = ModelParams::rural().derive().unwrap();
        assert!((d.rho_u - 0.78 / 1.35).abs() < 1e-15);
        assert_eq!(d.h, 37);
        assert_eq!(d.c_total, 9);
        assert!((d.lambda_n - 1.22).abs() < 1e-12);
    }

    #[test]
    fn zero_urgent_load() {
        let p = ModelParams {
            p_u: 0.0,
            ..ModelParams::rural()
        };
        let d = p.derive().unwrap();
        assert_eq!(d.rho_u, 0.0);
        assert_eq!(d.h, 37);
    }

    #[test]
    fn nested_vs_fixed_intensity() {
        let d = ModelParams::nested_vs_fixed().derive().unwrap();
        assert!((d.rho_u - 16.0 / 72.0).abs() < 1e-15);
    }

    #[test]
    fn preset_bed_splits() {
        let r = ModelParams::rural();
        assert_eq!((r.c_u, r.c_n), (4, 5));
        let u = ModelParams::urban();
        assert_eq!((u.c_u, u.c_n), (14, 20));
    }

    #[test]
    fn rejects_bad_fields_by_name() {
        let cases: Vec<(ModelParams, &str)> = vec![
            (ModelParams { lambda: 0.0, ..ModelParams::rural() }, "lambda"),
            (ModelParams { p_u: 1.5, ..ModelParams::rural() }, "p_u"),
            (ModelParams { mu_n: -1.0, ..ModelParams::rural() }, "mu_n"),
            (ModelParams { c_u: 0, c_n: 0, ..ModelParams::rural() }, "c_u"),
            (ModelParams { theta: 37, ..ModelParams::rural() }, "theta"),
            (ModelParams { p_a: -0.1, ..ModelParams::rural() }, "p_a"),
            (ModelParams { cw_u: f64::NAN, ..ModelParams::rural() }, "cw_u"),
        ];
        for (p, field) in cases {
            match p.derive() {
                Err(Error::InvalidParam { field: f, .. }) => assert_eq!(f, field),
                other => panic!("expected rejection of {field}, got {other:?}"),
            }
        }
    }

    #[test]
    fn fixed_mode_stability_table10() {
        let base = ModelParams::nested_vs_fixed();
        let four = ModelParams { c_u: 4, c_n: 14, ..base.clone() };
        let v = four.check_stability(CapacityMode::Fixed).unwrap();
        assert!(!v.stable);
        assert!((v.intensity - 1.0).abs() < 1e-15);
        let five = ModelParams { c_u: 5, c_n: 13, ..base };
        assert!(five.check_stability(CapacityMode::Fixed).unwrap().stable);
    }

    #[test]
    fn urban_nested_stable() {
        let v = ModelParams::urban().check_stability(CapacityMode::Nested).unwrap();
        assert!(v.stable);
        assert!((v.intensity - 4.25 / 5.1).abs() < 1e-12);
    }

    #[test]
    fn fixed_mode_requires_urgent_beds() {
        let p = ModelParams { c_u: 0, c_n: 9, ..ModelParams::rural() };
        assert!(!p.check_stability(CapacityMode::Fixed).unwrap().stable);
        assert!(p.check_stability(CapacityMode::Nested).unwrap().stable);
    }

    #[test]
    fn alpha_branches() {
        let p = ModelParams { theta: 5, k: 37, p_a: 0.52, ..ModelParams::rural() };
        assert_eq!(p.alpha(0, 0), 1.0);
        assert!((p.alpha(3, 2) - 0.48).abs() < 1e-15);
        assert_eq!(p.alpha(40, 0), 0.0);
        assert_eq!(p.alpha(30, 7), 0.0);
    }

    #[test]
    fn server_allocation() {
        let p = ModelParams::rural();
        assert_eq!(p.servers_nonurgent(11, 3), 0);
        assert_eq!(p.servers_nonurgent(2, 8), 5);
        assert_eq!(p.servers_nonurgent(4, 3), 3);
        assert_eq!(p.servers_urgent(4), 4);
        assert_eq!(p.servers_urgent(20), 9);
    }

    #[test]
    fn round_half_up_rule() {
        assert_eq!(round_half_up(3.6), 4);
        assert_eq!(round_half_up(3.5), 4);
        assert_eq!(round_half_up(5.25), 5);
        assert_eq!(round_half_up(3.42), 3);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn params() -> impl Strategy<Value = ModelParams> {
            (1u32..40, 0u32..40, 0.0f64..=1.0, 1u32..12, 0u32..12).prop_map(
                |(k, theta_raw, p_a, c_u, c_n)| ModelParams {
                    k,
                    theta: theta_raw % k,
                    p_a,
                    c_u,
                    c_n,
                    ..ModelParams::rural()
                },
            )
        }

        proptest! {
            #[test]
            fn alpha_bounded_and_monotone(p in params(), i in 0usize..60, j in 0usize..40) {
                let a = p.alpha(i, j);
                prop_assert!((0.0..=1.0).contains(&a));
                prop_assert!(p.alpha(i + 1, j) <= a);
                prop_assert!(p.alpha(i, j + 1) <= a);
            }

            #[test]
            fn servers_within_capacity(p in params(), i in 0usize..60, j in 0usize..40) {
                let su = p.servers_urgent(i);
                let sn = p.servers_nonurgent(i, j);
                prop_assert!(su + sn <= p.c_total() as usize);
                prop_assert!(sn <= p.c_n as usize);
            }

            #[test]
            fn no_acceptance_makes_alpha_theta_free(p in params(), i in 0usize..60, j in 0usize..40) {
                let p = ModelParams { p_a: 0.0, ..p };
                let expected = if i + j < p.k as usize { 1.0 } else { 0.0 };
                prop_assert_eq!(p.alpha(i, j), expected);
            }

            #[test]
            fn derive_is_deterministic(p in params()) {
                let a = p.derive().unwrap();
                let b = p.derive().unwrap();
                prop_assert_eq!(a.rho_u.to_bits(), b.rho_u.to_bits());
                prop_assert_eq!(a.lambda_n.to_bits(), b.lambda_n.to_bits());
                prop_assert_eq!(a.h, b.h);
            }
        }
    }
}
