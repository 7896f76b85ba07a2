//! Experiment harness: config-file ingestion with unit conversion, seeded
//! Monte Carlo sweeps over system parameters, CSV emission, and the
//! iteration-scaling regression.
//!
//! Experiments are fully deterministic: every trial's RNG seed is derived
//! from `(master_seed, sweep_index, trial_index)` before any work is
//! scheduled, so rows are independent of execution order and identical
//! specs produce byte-identical CSV output.
//!
//! # Config file format
//!
//! TOML with three tables; unknown keys are rejected. `[system]` keys and
//! units:
//!
//! | key           | unit                    | notes                          |
//! |---------------|-------------------------|--------------------------------|
//! | `M`           | antennas                |                                |
//! | `K`           | users                   |                                |
//! | `B`           | Hz                      | resource-block bandwidth       |
//! | `N0`          | dBm/Hz                  | or `N0_W_per_Hz` in W/Hz       |
//! | `Pc`          | W per antenna           | scalar or list of length M     |
//! | `PT`          | W                       | or `PT_dBm` in dBm             |
//! | `RT`          | bit/s/Hz                | or `RT_bps` in bits/s; scalar or list of length K |
//! | `cell_radius` | m                       |                                |
//! | `d_min`       | m                       | optional, default 35           |
//! | `alpha`       | —                       | path-loss exponent             |
//! | `sigma2_dB`   | dB                      | shadowing variance             |
//! | `phi`         | —                       | gain constant                  |
//!
//! `[solver]` (all optional) overrides `tau`, `theta1`, `theta2`,
//! `max_iter`, `p_init`, `omega_init`, `rho_init`,
//! `include_bandwidth_factor`. `[experiment]` holds `sweep`
//! (`"none" | "PT" | "Pc" | "K" | "M"`), `sweep_values`, `trials`,
//! `master_seed`, `mc_draws`, optional `per_user_power_w` (K sweeps then
//! set `PT = K * per_user_power_w`), and optional `outputs`.

use std::io::Write as IoWrite;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{compose_channel, sample_fast_fading, sample_large_scale};
use crate::config::{dbm_to_watts, uniform_value, SystemConfig, DEFAULT_MIN_DISTANCE_M};
use crate::error::{Error, Result};
use crate::ratemodel::{exact_rate, exact_sinr};
use crate::solver::{solve, PowerInit, SolveResult, SolverParams};

/// Which system parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    None,
    /// Sum transmit-power budget `PT` in W.
    MaxSumPower,
    /// Per-antenna circuit power `Pc` in W.
    CircuitPower,
    /// User count `K`.
    Users,
    /// Antenna count `M`.
    Antennas,
}

impl SweepVariable {
    pub fn as_key(&self) -> &'static str {
        match self {
            SweepVariable::None => "none",
            SweepVariable::MaxSumPower => "PT",
            SweepVariable::CircuitPower => "Pc",
            SweepVariable::Users => "K",
            SweepVariable::Antennas => "M",
        }
    }

    fn from_key(key: &str) -> Result<Self> {
        match key {
            "none" => Ok(SweepVariable::None),
            "PT" => Ok(SweepVariable::MaxSumPower),
            "Pc" => Ok(SweepVariable::CircuitPower),
            "K" => Ok(SweepVariable::Users),
            "M" => Ok(SweepVariable::Antennas),
            other => Err(Error::Specification(format!(
                "unknown sweep variable `{other}` (expected none, PT, Pc, K, or M)"
            ))),
        }
    }
}

/// Optional extra artifacts a sweep can emit besides the fixed CSV columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputKind {
    /// Final efficiency per row (always present in the CSV).
    EeFinal,
    /// Iteration count per row (always present in the CSV).
    Iterations,
    /// Per-iteration trace of trial 0 at each sweep value, as a side CSV.
    Trace,
    /// Grid-oracle comparison of trial 0 at each sweep value, as a side report.
    OracleGap,
}

impl OutputKind {
    fn from_key(key: &str) -> Result<Self> {
        match key {
            "ee_final" => Ok(OutputKind::EeFinal),
            "iterations" => Ok(OutputKind::Iterations),
            "trace" => Ok(OutputKind::Trace),
            "oracle_gap" => Ok(OutputKind::OracleGap),
            other => Err(Error::Specification(format!(
                "unknown output `{other}` (expected ee_final, iterations, trace, oracle_gap)"
            ))),
        }
    }

    fn as_key(&self) -> &'static str {
        match self {
            OutputKind::EeFinal => "ee_final",
            OutputKind::Iterations => "iterations",
            OutputKind::Trace => "trace",
            OutputKind::OracleGap => "oracle_gap",
        }
    }
}

/// Solver overrides carried by an experiment spec; anything left `None`
/// falls back to [`SolverParams::defaults`] for the swept configuration.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolverSettings {
    pub tau: Option<f64>,
    pub theta1: Option<f64>,
    /// Scalar broadcasts over users; a list must match the user count.
    pub theta2: Option<ScalarOrList>,
    pub max_iter: Option<usize>,
    pub p_init: Option<Vec<f64>>,
    pub omega_init: Option<f64>,
    pub rho_init: Option<f64>,
    pub include_bandwidth_factor: Option<bool>,
}

/// A value that may be given per-entity or broadcast from a scalar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrList {
    Scalar(f64),
    List(Vec<f64>),
}

impl ScalarOrList {
    fn resolve(&self, len: usize, field: &'static str) -> Result<Vec<f64>> {
        match self {
            ScalarOrList::Scalar(x) => Ok(vec![*x; len]),
            ScalarOrList::List(v) if v.len() == len => Ok(v.clone()),
            ScalarOrList::List(v) => Err(Error::Config {
                field,
                reason: format!("expected {len} entries, got {}", v.len()),
            }),
        }
    }
}

impl SolverSettings {
    /// Materialize solver parameters for one swept configuration.
    pub fn resolve(&self, config: &SystemConfig) -> Result<SolverParams> {
        let mut params = SolverParams::defaults(config);
        if let Some(tau) = self.tau {
            params.tau = tau;
        }
        if let Some(theta1) = self.theta1 {
            params.theta1 = theta1;
        }
        if let Some(theta2) = &self.theta2 {
            params.theta2 = theta2.resolve(config.users, "theta2")?;
        }
        if let Some(max_iter) = self.max_iter {
            params.max_iter = max_iter;
        }
        if let Some(p_init) = &self.p_init {
            params.p_init = PowerInit::Custom(p_init.clone());
        }
        if let Some(omega) = self.omega_init {
            params.omega_init = omega;
        }
        if let Some(rho) = self.rho_init {
            params.rho_init = rho;
        }
        if let Some(ib) = self.include_bandwidth_factor {
            params.include_bandwidth_factor = ib;
        }
        params.validate(config.users)?;
        Ok(params)
    }
}

/// A full experiment: base configuration, sweep definition, trial count,
/// seeding, and solver overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub base: SystemConfig,
    pub sweep: SweepVariable,
    pub sweep_values: Vec<f64>,
    pub trials: u64,
    pub master_seed: u64,
    pub solver: SolverSettings,
    /// Fast-fading draws for the exact-rate efficiency estimate; 0 disables.
    pub mc_draws: usize,
    /// Per-user power budget in W; K sweeps set `PT = K * per_user_power_w`.
    pub per_user_power_w: Option<f64>,
    pub outputs: Vec<OutputKind>,
}

impl ExperimentSpec {
    /// Single-run spec over the base configuration with default solver
    /// parameters and 500 Monte Carlo draws.
    pub fn single(base: SystemConfig, master_seed: u64) -> Self {
        Self {
            base,
            sweep: SweepVariable::None,
            sweep_values: Vec::new(),
            trials: 1,
            master_seed,
            solver: SolverSettings::default(),
            mc_draws: 500,
            per_user_power_w: None,
            outputs: vec![OutputKind::EeFinal, OutputKind::Iterations],
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.trials < 1 {
            return Err(Error::Specification("trials must be >= 1".into()));
        }
        match self.sweep {
            SweepVariable::None => {
                if !self.sweep_values.is_empty() {
                    return Err(Error::Specification(
                        "sweep_values must be empty when sweep = none".into(),
                    ));
                }
            }
            _ => {
                if self.sweep_values.is_empty() {
                    return Err(Error::Specification(
                        "sweep_values must be nonempty when sweeping".into(),
                    ));
                }
            }
        }
        for &v in &self.sweep_values {
            match self.sweep {
                SweepVariable::Users | SweepVariable::Antennas => {
                    if v < 1.0 || v.fract() != 0.0 {
                        return Err(Error::Specification(format!(
                            "sweep value {v} for {} must be a positive integer",
                            self.sweep.as_key()
                        )));
                    }
                }
                _ => {
                    if !(v > 0.0) {
                        return Err(Error::Specification(format!(
                            "sweep value {v} for {} must be > 0",
                            self.sweep.as_key()
                        )));
                    }
                }
            }
        }
        // Every swept configuration must itself validate.
        for idx in 0..self.sweep_points() {
            self.config_at(idx)?;
        }
        Ok(())
    }

    /// Number of sweep points (1 for `sweep = none`).
    pub fn sweep_points(&self) -> usize {
        match self.sweep {
            SweepVariable::None => 1,
            _ => self.sweep_values.len(),
        }
    }

    /// The sweep value at a point, `None` for an unswept run.
    pub fn sweep_value_at(&self, idx: usize) -> Option<f64> {
        match self.sweep {
            SweepVariable::None => None,
            _ => Some(self.sweep_values[idx]),
        }
    }

    /// The system configuration at one sweep point.
    pub fn config_at(&self, idx: usize) -> Result<SystemConfig> {
        let mut cfg = self.base.clone();
        match self.sweep {
            SweepVariable::None => {}
            SweepVariable::MaxSumPower => cfg.max_sum_power_w = self.sweep_values[idx],
            SweepVariable::CircuitPower => {
                cfg.circuit_power_w = vec![self.sweep_values[idx]; cfg.antennas];
            }
            SweepVariable::Users => {
                let users = self.sweep_values[idx] as usize;
                cfg = cfg.with_users(users)?;
                if let Some(per_user) = self.per_user_power_w {
                    cfg.max_sum_power_w = per_user * users as f64;
                }
            }
            SweepVariable::Antennas => {
                cfg = cfg.with_antennas(self.sweep_values[idx] as usize)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic per-trial seed from `(master_seed, sweep_index, trial)`.
pub fn trial_seed(master_seed: u64, sweep_index: usize, trial: u64) -> u64 {
    let mut state = master_seed;
    let a = splitmix64(&mut state);
    let mut state = a ^ (sweep_index as u64).wrapping_mul(0xA076_1D64_78BD_642F);
    let b = splitmix64(&mut state);
    let mut state = b ^ trial.wrapping_mul(0xE703_7ED1_A0B4_28DB);
    splitmix64(&mut state)
}

/// Seed of one fast-fading draw inside a trial's Monte Carlo estimate.
fn mc_draw_seed(trial_seed: u64, draw: usize) -> u64 {
    let mut state = trial_seed ^ 0x8EBC_6AF0_9C88_C6E3u64.wrapping_add(draw as u64);
    splitmix64(&mut state)
}

/// One CSV row: the outcome of a single trial at a single sweep point.
///
/// Numeric fields are `NaN` and options are `None` when the trial's status
/// records an error.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub sweep_value: Option<f64>,
    pub trial: u64,
    pub seed: u64,
    pub status: String,
    pub iterations: usize,
    pub final_ee_lb: f64,
    pub final_ee_exact_mc: Option<f64>,
    pub sum_power_w: f64,
    pub min_rate_slack_bps: f64,
    pub omega_final: f64,
    pub q_final: f64,
}

/// CSV header; the column set is fixed.
pub const CSV_HEADER: &str = "sweep_value,trial,seed,status,iterations,final_ee_lb,\
final_ee_exact_mc,sum_power_w,min_rate_slack_bps,omega_final,q_final";

fn opt_to_string(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl ResultRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            opt_to_string(self.sweep_value),
            self.trial,
            self.seed,
            self.status,
            self.iterations,
            self.final_ee_lb,
            opt_to_string(self.final_ee_exact_mc),
            self.sum_power_w,
            self.min_rate_slack_bps,
            self.omega_final,
            self.q_final
        )
    }
}

/// Monte Carlo exact-rate efficiency at fixed powers: averages the exact
/// per-user rate over `draws` fast-fading realizations and divides by the
/// total consumed power.
fn exact_rate_ee_mc(
    config: &SystemConfig,
    large_scale: &crate::channel::LargeScale,
    result: &SolveResult,
    draws: usize,
    seed: u64,
) -> Result<f64> {
    let mut mean_rates = vec![0.0f64; config.users];
    for d in 0..draws {
        let h = sample_fast_fading(config.antennas, config.users, mc_draw_seed(seed, d))?;
        let ch = compose_channel(&h, large_scale)?;
        let gamma = exact_sinr(&ch, &result.p_star, config.bandwidth_hz, config.noise_psd)?;
        let rates = exact_rate(&gamma, config.bandwidth_hz)?;
        for (acc, r) in mean_rates.iter_mut().zip(rates.r.iter()) {
            *acc += r;
        }
    }
    let sum_mean_rate: f64 = mean_rates.iter().map(|&s| s / draws as f64).sum();
    Ok(sum_mean_rate / (result.p_star.total() + config.total_circuit_power_w()))
}

fn run_single_trial(spec: &ExperimentSpec, sweep_idx: usize, trial: u64) -> ResultRow {
    let seed = trial_seed(spec.master_seed, sweep_idx, trial);
    let sweep_value = spec.sweep_value_at(sweep_idx);
    let error_row = |message: String| ResultRow {
        sweep_value,
        trial,
        seed,
        status: format!("error: {message}"),
        iterations: 0,
        final_ee_lb: f64::NAN,
        final_ee_exact_mc: None,
        sum_power_w: f64::NAN,
        min_rate_slack_bps: f64::NAN,
        omega_final: f64::NAN,
        q_final: f64::NAN,
    };

    let config = match spec.config_at(sweep_idx) {
        Ok(c) => c,
        Err(e) => return error_row(e.to_string()),
    };
    let params = match spec.solver.resolve(&config) {
        Ok(p) => p,
        Err(e) => return error_row(e.to_string()),
    };
    let large_scale = match sample_large_scale(&config, seed) {
        Ok(ls) => ls,
        Err(e) => return error_row(e.to_string()),
    };
    let result = match solve(&config, &large_scale.beta, &params) {
        Ok(r) => r,
        Err(e) => return error_row(e.to_string()),
    };
    let final_ee_exact_mc = if spec.mc_draws > 0 {
        match exact_rate_ee_mc(&config, &large_scale, &result, spec.mc_draws, seed) {
            Ok(ee) => Some(ee),
            Err(e) => return error_row(e.to_string()),
        }
    } else {
        None
    };

    let last = result.final_record();
    ResultRow {
        sweep_value,
        trial,
        seed,
        status: result.status.as_str().to_string(),
        iterations: result.iterations(),
        final_ee_lb: result.q_star,
        final_ee_exact_mc,
        sum_power_w: last.sum_power,
        min_rate_slack_bps: last.min_rate_slack,
        omega_final: last.omega,
        q_final: result.q_star,
    }
}

/// Run every `(sweep value, trial)` combination. Trials execute in
/// parallel; rows are keyed and sorted by `(sweep index, trial)` so the
/// output is order-insensitive and deterministic.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let jobs: Vec<(usize, u64)> = (0..spec.sweep_points())
        .flat_map(|s| (0..spec.trials).map(move |t| (s, t)))
        .collect();
    let mut rows: Vec<(usize, u64, ResultRow)> = jobs
        .par_iter()
        .map(|&(s, t)| (s, t, run_single_trial(spec, s, t)))
        .collect();
    rows.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    Ok(rows.into_iter().map(|(_, _, r)| r).collect())
}

/// Mean iteration count per user count together with its least-squares
/// linear fit.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    /// `(K, mean iterations)` per sweep value, in sweep order.
    pub per_value: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl std::fmt::Display for ScalingReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (k, iters) in &self.per_value {
            writeln!(f, "users: {k} mean_iterations: {iters}")?;
        }
        writeln!(f, "fit_slope: {}", self.slope)?;
        writeln!(f, "fit_intercept: {}", self.intercept)?;
        writeln!(f, "fit_r_squared: {}", self.r_squared)
    }
}

fn linear_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let sst: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    if sxx == 0.0 {
        // Degenerate regression on a constant abscissa.
        let r2 = if sst == 0.0 { 1.0 } else { 0.0 };
        return (0.0, mean_y, r2);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ssr: f64 = points
        .iter()
        .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2))
        .sum();
    let r2 = if sst == 0.0 { 1.0 } else { 1.0 - ssr / sst };
    (slope, intercept, r2)
}

/// Mean iterations per user count and their linear fit. Requires a K sweep
/// over at least 4 values with at least 20 trials each.
pub fn iteration_scaling_report(spec: &ExperimentSpec) -> Result<ScalingReport> {
    if spec.sweep != SweepVariable::Users {
        return Err(Error::Specification(
            "iteration scaling requires sweep = \"K\"".into(),
        ));
    }
    if spec.sweep_values.len() < 4 {
        return Err(Error::Specification(format!(
            "iteration scaling requires at least 4 user-count values, got {}",
            spec.sweep_values.len()
        )));
    }
    if spec.trials < 20 {
        return Err(Error::Specification(format!(
            "iteration scaling requires at least 20 trials per value, got {}",
            spec.trials
        )));
    }
    let rows = run_experiment(spec)?;
    let mut per_value = Vec::with_capacity(spec.sweep_values.len());
    for (idx, &k) in spec.sweep_values.iter().enumerate() {
        let trials: Vec<&ResultRow> = rows
            .iter()
            .filter(|r| r.sweep_value == Some(k) && !r.status.starts_with("error"))
            .collect();
        if trials.is_empty() {
            return Err(Error::Specification(format!(
                "no successful trials at sweep point {idx} (K = {k})"
            )));
        }
        let mean =
            trials.iter().map(|r| r.iterations as f64).sum::<f64>() / trials.len() as f64;
        per_value.push((k, mean));
    }
    let (slope, intercept, r_squared) = linear_fit(&per_value);
    Ok(ScalingReport { per_value, slope, intercept, r_squared })
}

// ---------------------------------------------------------------------------
// Config file parsing and emission
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct SystemTable {
    #[serde(rename = "M")]
    m: u64,
    #[serde(rename = "K")]
    k: u64,
    #[serde(rename = "B")]
    b: f64,
    #[serde(rename = "N0", skip_serializing_if = "Option::is_none")]
    n0_dbm_per_hz: Option<f64>,
    #[serde(rename = "N0_W_per_Hz", skip_serializing_if = "Option::is_none")]
    n0_w_per_hz: Option<f64>,
    #[serde(rename = "Pc")]
    pc: ScalarOrList,
    #[serde(rename = "PT", skip_serializing_if = "Option::is_none")]
    pt: Option<f64>,
    #[serde(rename = "PT_dBm", skip_serializing_if = "Option::is_none")]
    pt_dbm: Option<f64>,
    #[serde(rename = "RT", skip_serializing_if = "Option::is_none")]
    rt: Option<ScalarOrList>,
    #[serde(rename = "RT_bps", skip_serializing_if = "Option::is_none")]
    rt_bps: Option<ScalarOrList>,
    cell_radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    d_min: Option<f64>,
    alpha: f64,
    #[serde(rename = "sigma2_dB")]
    sigma2_db: f64,
    phi: f64,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct SolverTable {
    #[serde(skip_serializing_if = "Option::is_none")]
    tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta2: Option<ScalarOrList>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_iter: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_init: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_init: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rho_init: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    include_bandwidth_factor: Option<bool>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ExperimentTable {
    #[serde(default = "default_sweep")]
    sweep: String,
    #[serde(default)]
    sweep_values: Vec<f64>,
    #[serde(default = "default_trials")]
    trials: u64,
    master_seed: u64,
    #[serde(default = "default_mc_draws")]
    mc_draws: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    per_user_power_w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    outputs: Option<Vec<String>>,
}

fn default_sweep() -> String {
    "none".into()
}

fn default_trials() -> u64 {
    1
}

fn default_mc_draws() -> u64 {
    500
}

impl Default for ExperimentTable {
    fn default() -> Self {
        Self {
            sweep: default_sweep(),
            sweep_values: Vec::new(),
            trials: default_trials(),
            master_seed: 0,
            mc_draws: default_mc_draws(),
            per_user_power_w: None,
            outputs: None,
        }
    }
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    system: SystemTable,
    #[serde(default)]
    solver: SolverTable,
    #[serde(default)]
    experiment: ExperimentTable,
}

fn exactly_one<T>(a: Option<T>, b: Option<T>, keys: &'static str) -> Result<either::Either<T, T>> {
    match (a, b) {
        (Some(x), None) => Ok(either::Either::Left(x)),
        (None, Some(y)) => Ok(either::Either::Right(y)),
        _ => Err(Error::Specification(format!("exactly one of {keys} must be set"))),
    }
}

// Minimal two-variant helper so the config resolver reads plainly.
mod either {
    pub enum Either<L, R> {
        Left(L),
        Right(R),
    }
}

impl ConfigFile {
    fn resolve(self) -> Result<ExperimentSpec> {
        let sys = self.system;
        let users = sys.k as usize;
        let antennas = sys.m as usize;

        let noise_psd = match exactly_one(sys.n0_dbm_per_hz, sys.n0_w_per_hz, "N0 / N0_W_per_Hz")? {
            either::Either::Left(dbm) => dbm_to_watts(dbm),
            either::Either::Right(w) => w,
        };
        let max_sum_power_w = match exactly_one(sys.pt, sys.pt_dbm, "PT / PT_dBm")? {
            either::Either::Left(w) => w,
            either::Either::Right(dbm) => dbm_to_watts(dbm),
        };
        let min_rate_bps = match exactly_one(sys.rt, sys.rt_bps, "RT / RT_bps")? {
            either::Either::Left(per_hz) => per_hz
                .resolve(users, "RT")?
                .into_iter()
                .map(|r| r * sys.b)
                .collect(),
            either::Either::Right(bps) => bps.resolve(users, "RT_bps")?,
        };

        let base = SystemConfig {
            antennas,
            users,
            bandwidth_hz: sys.b,
            noise_psd,
            circuit_power_w: sys.pc.resolve(antennas, "Pc")?,
            max_sum_power_w,
            min_rate_bps,
            cell_radius_m: sys.cell_radius,
            min_distance_m: sys.d_min.unwrap_or(DEFAULT_MIN_DISTANCE_M),
            path_loss_exponent: sys.alpha,
            shadowing_variance_db: sys.sigma2_db,
            gain_constant: sys.phi,
        };

        let solver = SolverSettings {
            tau: self.solver.tau,
            theta1: self.solver.theta1,
            theta2: self.solver.theta2,
            max_iter: self.solver.max_iter.map(|x| x as usize),
            p_init: self.solver.p_init,
            omega_init: self.solver.omega_init,
            rho_init: self.solver.rho_init,
            include_bandwidth_factor: self.solver.include_bandwidth_factor,
        };

        let exp = self.experiment;
        let outputs = match exp.outputs {
            None => vec![OutputKind::EeFinal, OutputKind::Iterations],
            Some(keys) => keys
                .iter()
                .map(|k| OutputKind::from_key(k))
                .collect::<Result<Vec<_>>>()?,
        };

        let spec = ExperimentSpec {
            base,
            sweep: SweepVariable::from_key(&exp.sweep)?,
            sweep_values: exp.sweep_values,
            trials: exp.trials,
            master_seed: exp.master_seed,
            solver,
            mc_draws: exp.mc_draws as usize,
            per_user_power_w: exp.per_user_power_w,
            outputs,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Parse and resolve an experiment spec from a TOML string.
pub fn load_config_str(text: &str, origin: &str) -> Result<ExperimentSpec> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_string(),
        message: e.to_string(),
    })?;
    file.resolve()
}

/// Parse and resolve an experiment spec from a file.
pub fn load_config(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    load_config_str(&text, &path.display().to_string())
}

/// Serialize a resolved spec back to TOML. Emitted values are in resolved
/// SI units (`N0_W_per_Hz`, `RT_bps`, `PT` in W), so reloading the output
/// reproduces the spec exactly.
pub fn to_toml(spec: &ExperimentSpec) -> String {
    let file = ConfigFile {
        system: SystemTable {
            m: spec.base.antennas as u64,
            k: spec.base.users as u64,
            b: spec.base.bandwidth_hz,
            n0_dbm_per_hz: None,
            n0_w_per_hz: Some(spec.base.noise_psd),
            pc: match uniform_value(&spec.base.circuit_power_w) {
                Some(x) => ScalarOrList::Scalar(x),
                None => ScalarOrList::List(spec.base.circuit_power_w.clone()),
            },
            pt: Some(spec.base.max_sum_power_w),
            pt_dbm: None,
            rt: None,
            rt_bps: Some(match uniform_value(&spec.base.min_rate_bps) {
                Some(x) => ScalarOrList::Scalar(x),
                None => ScalarOrList::List(spec.base.min_rate_bps.clone()),
            }),
            cell_radius: spec.base.cell_radius_m,
            d_min: Some(spec.base.min_distance_m),
            alpha: spec.base.path_loss_exponent,
            sigma2_db: spec.base.shadowing_variance_db,
            phi: spec.base.gain_constant,
        },
        solver: SolverTable {
            tau: spec.solver.tau,
            theta1: spec.solver.theta1,
            theta2: spec.solver.theta2.clone(),
            max_iter: spec.solver.max_iter.map(|x| x as u64),
            p_init: spec.solver.p_init.clone(),
            omega_init: spec.solver.omega_init,
            rho_init: spec.solver.rho_init,
            include_bandwidth_factor: spec.solver.include_bandwidth_factor,
        },
        experiment: ExperimentTable {
            sweep: spec.sweep.as_key().to_string(),
            sweep_values: spec.sweep_values.clone(),
            trials: spec.trials,
            master_seed: spec.master_seed,
            mc_draws: spec.mc_draws as u64,
            per_user_power_w: spec.per_user_power_w,
            outputs: Some(spec.outputs.iter().map(|o| o.as_key().to_string()).collect()),
        },
    };
    toml::to_string_pretty(&file).expect("spec serializes")
}

/// Write rows as CSV, preceded by the resolved config echoed as `#`
/// comment lines so the file is self-describing.
pub fn emit_csv<W: IoWrite>(spec: &ExperimentSpec, rows: &[ResultRow], out: &mut W) -> Result<()> {
    let echo = to_toml(spec);
    let io_err = |e: std::io::Error| Error::Io { path: "<csv output>".into(), source: e };
    for line in echo.lines() {
        writeln!(out, "# {line}").map_err(io_err)?;
    }
    writeln!(out, "{CSV_HEADER}").map_err(io_err)?;
    for row in rows {
        writeln!(out, "{}", row.to_csv_line()).map_err(io_err)?;
    }
    Ok(())
}

/// Render a whole sweep to a CSV string (the `#`-echo, header, and rows).
pub fn sweep_to_csv_string(spec: &ExperimentSpec) -> Result<String> {
    let rows = run_experiment(spec)?;
    let mut buf = Vec::new();
    emit_csv(spec, &rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL_CONFIG: &str = r#"
[system]
M = 16
K = 2
B = 120e3
N0 = -170.0
Pc = 0.01
PT = 1.0
RT = 0.0
cell_radius = 500.0
alpha = 3.8
sigma2_dB = 10.0
phi = 1.0

[experiment]
master_seed = 7
mc_draws = 0
"#;

    #[test]
    fn minimal_config_applies_defaults() {
        let spec = load_config_str(MINIMAL_CONFIG, "<test>").unwrap();
        assert_eq!(spec.base.min_distance_m, DEFAULT_MIN_DISTANCE_M);
        assert!((spec.base.noise_psd - 1e-20).abs() < 1e-33);
        assert_eq!(spec.trials, 1);
        assert_eq!(spec.sweep, SweepVariable::None);
        assert_eq!(spec.outputs, vec![OutputKind::EeFinal, OutputKind::Iterations]);
        // The echo records the applied default.
        assert!(to_toml(&spec).contains("d_min = 35.0"));
    }

    #[test]
    fn rate_targets_convert_to_bits_per_second() {
        let text = MINIMAL_CONFIG.replace("RT = 0.0", "RT = 6.0");
        let spec = load_config_str(&text, "<test>").unwrap();
        assert_eq!(spec.base.min_rate_bps, vec![720e3, 720e3]);
    }

    #[test]
    fn power_budget_accepts_dbm() {
        let text = MINIMAL_CONFIG.replace("PT = 1.0", "PT_dBm = 30.0");
        let spec = load_config_str(&text, "<test>").unwrap();
        assert!((spec.base.max_sum_power_w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let text = MINIMAL_CONFIG.replace("phi = 1.0", "phi = 1.0\nbogus_key = 3");
        let err = load_config_str(&text, "<test>").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bogus_key"), "{msg}");
        assert!(msg.contains("line"), "{msg}");
    }

    #[test]
    fn duplicate_unit_variants_are_rejected() {
        let text = MINIMAL_CONFIG.replace("PT = 1.0", "PT = 1.0\nPT_dBm = 30.0");
        let err = load_config_str(&text, "<test>").unwrap_err();
        assert!(err.to_string().contains("PT"), "{err}");
    }

    #[test]
    fn resolved_config_round_trips_exactly() {
        let spec = load_config_str(MINIMAL_CONFIG, "<test>").unwrap();
        let echoed = to_toml(&spec);
        let reloaded = load_config_str(&echoed, "<echo>").unwrap();
        assert_eq!(spec, reloaded);
    }

    #[test]
    fn single_run_produces_one_converged_row() {
        let mut spec = ExperimentSpec::single(SystemConfig::default(), 42);
        spec.mc_draws = 0;
        let rows = run_experiment(&spec).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(
            rows[0].status == "converged" || rows[0].status == "max_iter_reached",
            "status {}",
            rows[0].status
        );
        assert!(rows[0].iterations <= 500);
        assert!(rows[0].sum_power_w >= 0.0);
    }

    #[test]
    fn trial_seeds_are_stable_and_distinct() {
        let a = trial_seed(42, 0, 0);
        assert_eq!(a, trial_seed(42, 0, 0));
        assert_ne!(a, trial_seed(42, 0, 1));
        assert_ne!(a, trial_seed(42, 1, 0));
        assert_ne!(a, trial_seed(43, 0, 0));
    }

    #[test]
    fn sweep_output_is_byte_identical_across_runs() {
        let mut spec = ExperimentSpec::single(SystemConfig::default(), 3);
        spec.sweep = SweepVariable::MaxSumPower;
        spec.sweep_values = vec![0.5, 1.0];
        spec.trials = 3;
        spec.mc_draws = 10;
        let a = sweep_to_csv_string(&spec).unwrap();
        let b = sweep_to_csv_string(&spec).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("# "));
        assert!(a.contains(CSV_HEADER));
        assert_eq!(a.lines().filter(|l| !l.starts_with('#')).count(), 1 + 6);
    }

    #[test]
    fn constant_user_sweep_has_zero_slope() {
        let mut spec = ExperimentSpec::single(SystemConfig::default(), 5);
        spec.sweep = SweepVariable::Users;
        spec.sweep_values = vec![3.0, 3.0, 3.0, 3.0];
        spec.trials = 20;
        spec.mc_draws = 0;
        spec.solver.max_iter = Some(40);
        let report = iteration_scaling_report(&spec).unwrap();
        assert_eq!(report.slope, 0.0);
    }

    #[test]
    fn scaling_report_rejects_thin_sweeps() {
        let mut spec = ExperimentSpec::single(SystemConfig::default(), 5);
        spec.sweep = SweepVariable::Users;
        spec.sweep_values = vec![3.0];
        spec.trials = 20;
        assert!(matches!(
            iteration_scaling_report(&spec),
            Err(Error::Specification(_))
        ));
        spec.sweep = SweepVariable::MaxSumPower;
        spec.sweep_values = vec![0.1, 1.0, 2.0, 3.0];
        assert!(iteration_scaling_report(&spec).is_err());
    }

    #[test]
    fn user_sweep_maps_per_user_budget() {
        let mut spec = ExperimentSpec::single(SystemConfig::default(), 5);
        spec.sweep = SweepVariable::Users;
        spec.sweep_values = vec![2.0, 10.0];
        spec.per_user_power_w = Some(0.1);
        let c0 = spec.config_at(0).unwrap();
        let c1 = spec.config_at(1).unwrap();
        assert!((c0.max_sum_power_w - 0.2).abs() < 1e-15);
        assert!((c1.max_sum_power_w - 1.0).abs() < 1e-15);
        assert_eq!(c1.users, 10);
        assert_eq!(c1.min_rate_bps.len(), 10);
    }

    #[test]
    fn fractional_user_sweep_is_rejected() {
        let mut spec = ExperimentSpec::single(SystemConfig::default(), 5);
        spec.sweep = SweepVariable::Users;
        spec.sweep_values = vec![2.5];
        assert!(spec.validate().is_err());
    }

    #[test]
    fn error_rows_do_not_abort_the_sweep() {
        let mut spec = ExperimentSpec::single(SystemConfig::default(), 5);
        // max_iter = 0 fails parameter validation inside the trial.
        spec.solver.max_iter = Some(0);
        let rows = run_experiment(&spec).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].status.starts_with("error:"), "{}", rows[0].status);
        assert!(rows[0].final_ee_lb.is_nan());
    }
}
