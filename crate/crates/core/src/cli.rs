//! Command-line driver. Each command resolves a [`StudyConfig`], runs one study, and
//! writes its artifacts plus `manifest.json` into the output directory.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{self, Format, Manifest, Scenario, StudyConfig, SweepConfig, DEFAULT_OUT_DIR, OUT_DIR_ENV};
use crate::error::{Error, Result};
use crate::fixed::{self, Winner};
use crate::metrics::{self, ObjectiveBreakdown, PerformanceMetrics};
use crate::params::{CapacityMode, ModelParams};
use crate::policy;
use crate::qbd;
use crate::report::{fmt_f64, fmt_opt, write_json, Table};
use crate::sensitivity::{self, GridModel, Ratio};
use crate::sim;

#[derive(Debug, Parser)]
#[command(name = "edqbd", version, about = "Two-class priority ED queue with threshold redirection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Named preset: rural, urban, nested-vs-fixed.
    #[arg(long, conflicts_with = "config")]
    pub preset: Option<String>,
    /// Study config or manifest (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Parameter override, `field=value`; repeatable.
    #[arg(long = "set", value_name = "FIELD=VALUE")]
    pub set: Vec<String>,
    /// Output directory [env: EDQBD_OUT].
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Nested,
    Fixed,
}

impl From<ModeArg> for CapacityMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Nested => CapacityMode::Nested,
            ModeArg::Fixed => CapacityMode::Fixed,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModelArg {
    Enabled,
    Disabled,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one policy and report metrics and objective.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        theta: Option<u32>,
        /// Also dump the generator blocks as CSV.
        #[arg(long)]
        dump_blocks: bool,
    },
    /// Enumerate every threshold and report the best.
    Optimize {
        #[command(flatten)]
        common: Common,
    },
    /// Search bed splits of a fixed total.
    Capacity {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        c_total: Option<u32>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Nested versus fixed-partition objective per threshold.
    CompareFixed {
        #[command(flatten)]
        common: Common,
        /// `a..b` (inclusive) or a comma list.
        #[arg(long)]
        theta: Option<String>,
        /// Also scan every bed split of this total.
        #[arg(long)]
        c_total: Option<u32>,
    },
    /// One-at-a-time ratio sensitivity.
    Tornado {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        variation: Option<f64>,
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
    },
    /// Shifted-parameter scenario grid.
    Scenarios {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        variation: Option<f64>,
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
    },
    /// Sweep one ratio and re-optimize the threshold at each point.
    Proportional {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        ratio: Option<String>,
        /// `lo..hi`.
        #[arg(long)]
        range: Option<String>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Discrete-event simulation.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        warmup: Option<f64>,
        #[arg(long)]
        replications: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Write replication 0's events to this CSV.
        #[arg(long)]
        event_log: Option<PathBuf>,
    },
    /// Urgent marginals against the exact M/M/c distribution.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve { .. } => "solve",
            Command::Optimize { .. } => "optimize",
            Command::Capacity { .. } => "capacity",
            Command::CompareFixed { .. } => "compare-fixed",
            Command::Tornado { .. } => "tornado",
            Command::Scenarios { .. } => "scenarios",
            Command::Proportional { .. } => "proportional",
            Command::Simulate { .. } => "simulate",
            Command::Validate { .. } => "validate",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Solve { common, .. }
            | Command::Optimize { common }
            | Command::Capacity { common, .. }
            | Command::CompareFixed { common, .. }
            | Command::Tornado { common, .. }
            | Command::Scenarios { common, .. }
            | Command::Proportional { common, .. }
            | Command::Simulate { common, .. }
            | Command::Validate { common } => common,
        }
    }
}

/// Parses `args` (program name first), runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn base_config(common: &Common) -> Result<StudyConfig> {
    let mut cfg = match (&common.config, &common.preset) {
        (Some(path), _) => config::load(path)?,
        (None, Some(name)) => StudyConfig::from_preset(name),
        (None, None) => return Err(Error::Config("one of --preset or --config is required".into())),
    };
    for text in &common.set {
        let (key, value) = config::parse_assignment(text)?;
        match &mut cfg.scenario {
            Scenario::Preset { overrides, .. } => {
                overrides.insert(key, value);
            }
            Scenario::Params(p) => {
                let mut one = serde_json::Map::new();
                one.insert(key, value);
                *p = config::apply_overrides(p, &one)?;
            }
        }
    }
    if let Some(f) = common.format {
        cfg.format = Some(match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        });
    }
    Ok(cfg)
}

fn out_dir(common: &Common, cfg: &StudyConfig) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn parse_range(text: &str) -> Result<(f64, f64)> {
    let (a, b) = text
        .split_once("..")
        .ok_or_else(|| Error::Config(format!("expected lo..hi, got `{text}`")))?;
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Config(format!("bad range bound `{s}`: {e}")));
    Ok((parse(a)?, parse(b)?))
}

fn parse_theta_grid(text: &str) -> Result<Vec<u32>> {
    let bad = |e: std::num::ParseIntError| Error::Config(format!("bad theta grid `{text}`: {e}"));
    if let Some((a, b)) = text.split_once("..") {
        let (a, b) = (a.trim().parse::<u32>().map_err(bad)?, b.trim().parse::<u32>().map_err(bad)?);
        if a > b {
            return Err(Error::Config(format!("empty theta range `{text}`")));
        }
        Ok((a..=b).collect())
    } else {
        text.split(',').map(|s| s.trim().parse::<u32>().map_err(bad)).collect()
    }
}

struct Output {
    dir: PathBuf,
    format: Format,
    artifacts: Vec<String>,
}

impl Output {
    fn table(&mut self, stem: &str, table: &Table, json: &impl Serialize) -> Result<()> {
        match self.format {
            Format::Csv => {
                let name = format!("{stem}.csv");
                table.write(&self.dir.join(&name))?;
                self.artifacts.push(name);
            }
            Format::Json => self.json(stem, json)?,
        }
        Ok(())
    }

    fn json(&mut self, stem: &str, value: &impl Serialize) -> Result<()> {
        let name = format!("{stem}.json");
        write_json(&self.dir.join(&name), value)?;
        self.artifacts.push(name);
        Ok(())
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.artifacts.push(name.to_owned());
        self.dir.join(name)
    }
}

fn metric_header() -> Vec<&'static str> {
    PerformanceMetrics::FIELDS.iter().chain(ObjectiveBreakdown::FIELDS.iter()).copied().collect()
}

fn metric_cells(e: &metrics::Evaluation) -> Vec<String> {
    e.metrics.values().iter().chain(e.objective.values().iter()).map(|v| fmt_f64(*v)).collect()
}

pub fn run(command: &Command) -> Result<()> {
    let common = command.common();
    let mut cfg = base_config(common)?;
    let dir = out_dir(common, &cfg);
    cfg.output_dir = None;
    if let Command::Solve { theta: Some(t), .. } = command {
        if let Scenario::Preset { overrides, .. } = &mut cfg.scenario {
            overrides.insert("theta".into(), (*t).into());
        } else if let Scenario::Params(p) = &mut cfg.scenario {
            p.theta = *t;
        }
    }
    let params = cfg.scenario.resolve()?;
    let mut out = Output { dir, format: cfg.format.unwrap_or_default(), artifacts: Vec::new() };
    cfg.format = Some(out.format);

    match command {
        Command::Solve { dump_blocks, .. } => {
            let (blocks, dist) = qbd::solve_params(&params)?;
            let eval = metrics::evaluate_distribution(&dist, &params)?;
            let mut t = Table::new(&metric_header());
            t.push(metric_cells(&eval));
            out.table("solve", &t, &eval)?;
            let path = out.path("distribution.csv");
            dist.dump_csv(&path)?;
            if *dump_blocks {
                let dir = out.path("blocks");
                blocks.dump_csv(&dir)?;
            }
            println!("theta = {}  Z = {:.2}", params.theta, eval.objective.z);
            println!(
                "E[N_n] = {:.4}  lambda_n_eff = {:.4}  E[W_n] = {}  p_balk = {:.4}",
                eval.metrics.e_nn,
                eval.metrics.lambda_n_eff,
                eval.metrics.e_wn.map_or("undefined (no admissions)".into(), |w| format!("{w:.4}")),
                eval.metrics.p_balk
            );
        }
        Command::Optimize { .. } => {
            let curve = policy::optimize_theta(&params)?;
            let mut header = vec!["theta"];
            header.extend(metric_header());
            let mut t = Table::new(&header);
            for row in &curve.rows {
                let mut cells = vec![row.theta.to_string()];
                cells.extend(metric_cells(&row.evaluation));
                t.push(cells);
            }
            out.table("theta_curve", &t, &curve)?;
            #[derive(Serialize)]
            struct Summary<'a> {
                theta_star: u32,
                z_star: f64,
                best: &'a metrics::Evaluation,
            }
            out.json("optimize", &Summary { theta_star: curve.theta_star, z_star: curve.z_star, best: curve.best() })?;
            println!("theta* = {}  Z* = {:.2}", curve.theta_star, curve.z_star);
        }
        Command::Capacity { c_total, mode, .. } => {
            let c_total = c_total.or(cfg.c_total).unwrap_or(params.c_total());
            let mode = mode.map(CapacityMode::from).or(cfg.mode).unwrap_or(CapacityMode::Nested);
            cfg.c_total = Some(c_total);
            cfg.mode = Some(mode);
            let scan = policy::optimize_capacity(&params, c_total, mode)?;
            let mut t = Table::new(&["c_u", "c_n", "mode", "intensity", "stable", "theta_star", "z_star"]);
            for r in &scan.rows {
                t.push(vec![
                    r.c_u.to_string(),
                    r.c_n.to_string(),
                    mode.to_string(),
                    fmt_f64(r.intensity),
                    if r.stable { "STABLE".into() } else { format!("{} UNSTABLE", mode.as_str().to_uppercase()) },
                    r.theta_star.map(|v| v.to_string()).unwrap_or_default(),
                    fmt_opt(r.z_star),
                ]);
            }
            out.table("capacity_scan", &t, &scan)?;
            out.json("capacity", &scan.best_row())?;
            match scan.best_row() {
                Some(b) => println!(
                    "best split c_u = {}, c_n = {}  theta* = {}  Z* = {:.2}",
                    b.c_u,
                    b.c_n,
                    b.theta_star.unwrap_or_default(),
                    b.z_star.unwrap_or(f64::NAN)
                ),
                None => println!("no stable split"),
            }
        }
        Command::CompareFixed { theta, c_total, .. } => {
            let grid = match theta {
                Some(text) => parse_theta_grid(text)?,
                None => cfg.theta_grid.clone().unwrap_or_else(|| (0..params.k).collect()),
            };
            cfg.theta_grid = Some(grid.clone());
            let rows = fixed::compare_nested_fixed(&params, &grid)?;
            let mut t = Table::new(&["theta", "nested_z", "fixed_z", "difference", "winner"]);
            for r in &rows {
                t.push(vec![
                    r.theta.to_string(),
                    fmt_f64(r.nested_z),
                    fmt_opt(r.fixed_z),
                    fmt_opt(r.difference),
                    r.winner.label().into(),
                ]);
            }
            out.table("compare_fixed", &t, &rows)?;
            let wins = rows.iter().filter(|r| matches!(r.winner, Winner::Nested | Winner::FixedUnstable)).count();
            println!("NESTED wins {wins}/{}", rows.len());
            if let Some(total) = c_total.or(cfg.c_total) {
                cfg.c_total = Some(total);
                let scan = fixed::bed_combination_scan(&params, total)?;
                let mut t = Table::new(&[
                    "c_u",
                    "c_n",
                    "nested_theta_star",
                    "nested_z",
                    "fixed_theta_star",
                    "fixed_z",
                    "fixed_intensity",
                    "difference",
                    "winner",
                ]);
                for r in &scan {
                    t.push(vec![
                        r.c_u.to_string(),
                        r.c_n.to_string(),
                        r.nested.map(|n| n.0.to_string()).unwrap_or_default(),
                        fmt_opt(r.nested.map(|n| n.1)),
                        r.fixed.map(|f| f.0.to_string()).unwrap_or_default(),
                        fmt_opt(r.fixed.map(|f| f.1)),
                        fmt_f64(r.fixed_verdict_intensity),
                        fmt_opt(r.difference),
                        r.winner.label().into(),
                    ]);
                }
                out.table("bed_combinations", &t, &scan)?;
            }
        }
        Command::Tornado { variation, model, .. } => {
            let variation = variation.or(cfg.variation).unwrap_or(0.05);
            let model = model.map(grid_model).or(cfg.model).unwrap_or(GridModel::Enabled);
            cfg.variation = Some(variation);
            cfg.model = Some(model);
            let report = match model {
                GridModel::Enabled => sensitivity::tornado_enabled(&params, variation)?,
                GridModel::Disabled => sensitivity::tornado_disabled(&params, variation)?,
            };
            let mut t =
                Table::new(&["ratio", "low", "high", "delta_low", "delta_high", "impact", "rel_impact_pct", "rank", "error"]);
            for r in &report.rows {
                t.push(vec![
                    r.ratio.name().into(),
                    fmt_f64(r.low),
                    fmt_f64(r.high),
                    fmt_f64(r.delta_low),
                    fmt_f64(r.delta_high),
                    fmt_f64(r.impact),
                    fmt_f64(r.rel_impact_pct),
                    r.rank.to_string(),
                    r.error.clone().unwrap_or_default(),
                ]);
            }
            out.table("tornado", &t, &report)?;
            println!("Z0 = {:.2} at theta = {}", report.z0, report.theta);
            for r in &report.rows {
                println!("{:>2}. {:<18} {:>8.3}%", r.rank, r.ratio.name(), r.rel_impact_pct);
            }
        }
        Command::Scenarios { variation, model, .. } => {
            let variation = variation.or(cfg.variation).unwrap_or(0.05);
            let model = model.map(grid_model).or(cfg.model).unwrap_or(GridModel::Enabled);
            cfg.variation = Some(variation);
            cfg.model = Some(model);
            let cases = match model {
                GridModel::Enabled => sensitivity::enabled_cases(),
                GridModel::Disabled => sensitivity::disabled_cases(),
            };
            let rows = sensitivity::scenario_grid(&params, &cases, model, variation);
            let mut t = Table::new(&[
                "case",
                "description",
                "baseline_obj",
                "theta_star",
                "theta_over_k",
                "top_ratio",
                "rel_impact_pct",
                "enabled_Z",
                "disabled_Z",
                "benefit",
                "gain_pct",
                "capped",
                "error",
            ]);
            for r in &rows {
                t.push(vec![
                    r.case.into(),
                    r.description.into(),
                    fmt_f64(r.baseline_obj),
                    r.theta_star.to_string(),
                    fmt_f64(r.theta_over_k),
                    r.top_ratio.map(|x| x.name().to_owned()).unwrap_or_default(),
                    fmt_f64(r.rel_impact_pct),
                    fmt_f64(r.enabled_z),
                    fmt_opt(r.disabled_z),
                    fmt_opt(r.benefit),
                    fmt_opt(r.gain_pct),
                    r.capped.to_string(),
                    r.error.clone().unwrap_or_default(),
                ]);
            }
            out.table("scenarios", &t, &rows)?;
            for r in &rows {
                println!(
                    "{:<26} Z = {:>12.2}  gain = {:>7}{}",
                    r.case,
                    r.baseline_obj,
                    r.gain_pct.map_or("-".into(), |g| format!("{g:.2}%")),
                    if r.capped { "  (capped)" } else { "" }
                );
            }
        }
        Command::Proportional { ratio, range, steps, .. } => {
            let sweep = match (ratio, range, cfg.sweep.clone()) {
                (Some(r), Some(range), prior) => {
                    let (lo, hi) = parse_range(range)?;
                    SweepConfig { ratio: r.clone(), lo, hi, steps: steps.or(prior.map(|p| p.steps)).unwrap_or(21) }
                }
                (None, None, Some(prior)) => SweepConfig { steps: steps.unwrap_or(prior.steps), ..prior },
                _ => return Err(Error::Config("proportional needs --ratio and --range, or a sweep block".into())),
            };
            cfg.sweep = Some(sweep.clone());
            let ratio: Ratio = sweep.ratio.parse()?;
            let points = sensitivity::proportional_sweep(&params, ratio, sweep.lo, sweep.hi, sweep.steps)?;
            let mut t = Table::new(&["requested", "ratio_value", "theta_star", "Z", "error"]);
            for p in &points {
                t.push(vec![
                    fmt_f64(p.requested),
                    fmt_f64(p.ratio_value),
                    p.theta_star.map(|v| v.to_string()).unwrap_or_default(),
                    fmt_opt(p.z),
                    p.error.clone().unwrap_or_default(),
                ]);
            }
            out.table("sweep", &t, &points)?;
            println!("{} points over {} in [{}, {}]", points.len(), ratio, sweep.lo, sweep.hi);
        }
        Command::Simulate { horizon, warmup, replications, seed, mode, event_log, .. } => {
            let mut sc = cfg.sim.clone().unwrap_or_default();
            if let Some(v) = horizon {
                sc.horizon = *v;
            }
            if let Some(v) = warmup {
                sc.warmup = *v;
            }
            if let Some(v) = replications {
                sc.replications = *v;
            }
            if let Some(v) = seed {
                sc.seed = *v;
            }
            if let Some(v) = mode {
                sc.mode = (*v).into();
            }
            cfg.sim = Some(sc.clone());
            let res = sim::simulate(&params, &sc)?;
            let mut t = Table::new(&["metric", "mean", "half_width", "lo", "hi"]);
            let named = res.metric_names.iter().zip(&res.metrics).chain(res.objective_names.iter().zip(&res.objective));
            for (name, e) in named {
                t.push(vec![(*name).into(), fmt_f64(e.mean), fmt_f64(e.half_width), fmt_f64(e.lo()), fmt_f64(e.hi())]);
            }
            out.table("simulation", &t, &res)?;
            out.json("simulation_counts", &res.counts)?;
            if let Some(path) = event_log {
                sim::simulate_with_log(&params, &sc, path)?;
            }
            let z = res.z();
            println!("Z = {:.2} ± {:.2} ({} replications, {} mode)", z.mean, z.half_width, sc.replications, sc.mode);
        }
        Command::Validate { .. } => {
            let start = Instant::now();
            let (_, dist) = qbd::solve_params(&params)?;
            let err = qbd::validate_mmc(&dist, &params)?;
            let elapsed = start.elapsed();
            #[derive(Serialize)]
            struct Validation {
                expected_relative_error: f64,
                total_mass: f64,
            }
            out.json("validate", &Validation { expected_relative_error: err, total_mass: dist.total_mass() })?;
            println!("expected relative error: {err:.3e} ({:.3} s)", elapsed.as_secs_f64());
        }
    }

    write_manifest(&mut out, command.name(), &params, cfg)
}

fn grid_model(m: ModelArg) -> GridModel {
    match m {
        ModelArg::Enabled => GridModel::Enabled,
        ModelArg::Disabled => GridModel::Disabled,
    }
}

fn write_manifest(out: &mut Output, command: &str, params: &ModelParams, mut cfg: StudyConfig) -> Result<()> {
    cfg.scenario = Scenario::Params(params.clone());
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        params: params.clone(),
        artifacts: out.artifacts.clone(),
        config: cfg,
    };
    write_json(&out.dir.join("manifest.json"), &manifest)?;
    Ok(())
}

/// Convenience for tests and the FFI layer: run a command line and return its exit code.
pub fn run_line(line: &[&str], out: &Path) -> i32 {
    let mut args: Vec<OsString> = vec!["edqbd".into()];
    args.extend(line.iter().map(OsString::from));
    args.push("--out".into());
    args.push(out.as_os_str().to_owned());
    main_with_args(args)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_grid_forms() {
        assert_eq!(parse_theta_grid("0..3").unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(parse_theta_grid("1, 5,7").unwrap(), vec![1, 5, 7]);
        assert!(parse_theta_grid("3..1").is_err());
    }

    #[test]
    fn optimize_writes_curve_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(run_line(&["optimize", "--preset", "rural"], dir.path()), 0);
        let csv = std::fs::read_to_string(dir.path().join("theta_curve.csv")).unwrap();
        assert_eq!(csv.lines().count(), 38);
        let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest.command, "optimize");
        assert_eq!(manifest.artifacts, vec!["theta_curve.csv", "optimize.json"]);
    }

    #[test]
    fn exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(run_line(&["solve", "--preset", "nowhere"], dir.path()), 2);
        assert_eq!(run_line(&["solve", "--preset", "rural", "--set", "lambda=50"], dir.path()), 2);
        assert_eq!(run_line(&["solve", "--preset", "rural", "--set", "bogus=1"], dir.path()), 2);
        assert_eq!(run_line(&["solve"], dir.path()), 2);
        assert_eq!(run_line(&["frobnicate"], dir.path()), 2);
    }

    #[test]
    fn manifest_replays_identically() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        assert_eq!(run_line(&["compare-fixed", "--preset", "nested-vs-fixed", "--theta", "0..24"], a.path()), 0);
        let manifest = a.path().join("manifest.json");
        assert_eq!(run_line(&["compare-fixed", "--config", manifest.to_str().unwrap()], b.path()), 0);
        for name in ["compare_fixed.csv", "manifest.json"] {
            assert_eq!(std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap());
        }
    }
}
