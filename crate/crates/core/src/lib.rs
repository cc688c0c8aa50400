//! Two-class preemptive-priority emergency department queue with threshold redirection
//! of non-urgent patients, solved exactly as a level-dependent QBD.

pub mod cli;
pub mod config;
pub mod error;
pub mod fixed;
pub mod metrics;
pub mod params;
pub mod policy;
pub mod qbd;
pub mod report;
pub mod sensitivity;
pub mod sim;

pub use error::{Error, Result};
pub use metrics::{evaluate, Evaluation, ObjectiveBreakdown, PerformanceMetrics};
pub use params::{CapacityMode, ModelParams, WaitingCostBasis};
pub use policy::{optimize_capacity, optimize_theta, CapacityScan, ThetaCurve};
pub use qbd::{solve_params, StationaryDistribution};
