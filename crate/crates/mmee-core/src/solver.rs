//! Iterative energy-efficiency maximization.
//!
//! The fractional objective (sum rate over total consumed power) is driven
//! to its root form `F = sum r - q * (sum p + sum Pc)` with the parameter
//! `q` tracking the current efficiency, the two constraint families are
//! priced by projected-subgradient multipliers, and the powers themselves
//! are updated through the stationarity fixed point of the Lagrangian:
//!
//! ```text
//! p_k <- B(1+rho_k) / ( ln2 * [ sum_{j!=k} B(1+rho_j) /
//!            ( ln2 * (sum_{i!=j} p_i + B N0 / beta_j) )  + q + omega ] )
//! ```
//!
//! evaluated as a Jacobi pass (all outputs from the input vector). The map
//! is a standard interference function (positive, monotone, scalable), so
//! the pass is a contraction toward the unique fixed point for fixed duals.
//!
//! The update above carries the bandwidth factor `B` that differentiating a
//! `B*log2(.)` rate produces, and indexes the noise-over-gain term by the
//! interfered user `j`. Setting [`SolverParams::include_bandwidth_factor`]
//! to `false` drops the two `B` factors, which reproduces the update as it
//! is usually quoted with `B = 1`; that variant converges in very few
//! iterations but balances rates against power on the wrong scale, so it is
//! only useful for comparison.
//!
//! Termination tests `|F| <= tau`. `F` as computed here (rates at the fresh
//! powers, `q` from the previous iterate) can transiently go negative while
//! the multipliers are still moving the operating point; treating only
//! `F <= tau` as converged would then stop at a constraint-violating point.

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::ratemodel::{
    energy_efficiency, lb_rate_high_snr, subtractive_objective, PowerAllocation, RateVector,
};

/// Relative tolerance for declaring a constraint violated in status
/// classification. Rate targets of zero fall back to the bandwidth as the
/// comparison scale.
pub const CONSTRAINT_REL_TOL: f64 = 1e-6;

/// Multipliers and efficiency parameter carried between iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    /// Multiplier of the sum-power constraint, `>= 0`.
    pub omega: f64,
    /// Multipliers of the per-user rate constraints, each `>= 0`.
    pub rho: Vec<f64>,
    /// Current energy-efficiency value in bits/Joule, `>= 0`.
    pub q: f64,
}

impl DualState {
    pub fn new(omega: f64, rho: Vec<f64>, q: f64) -> Result<Self> {
        let s = Self { omega, rho, q };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega >= 0.0) {
            return Err(Error::Domain(format!("omega must be >= 0, got {}", self.omega)));
        }
        if let Some(i) = self.rho.iter().position(|&r| !(r >= 0.0)) {
            return Err(Error::Domain(format!("rho[{i}] must be >= 0, got {}", self.rho[i])));
        }
        if !(self.q >= 0.0) {
            return Err(Error::Domain(format!("q must be >= 0, got {}", self.q)));
        }
        Ok(())
    }
}

/// Initial power policy for [`solve`].
#[derive(Debug, Clone, PartialEq)]
pub enum PowerInit {
    /// `p_k = PT / (2K)`: feasible for the power budget with 2x slack.
    HalfBudgetUniform,
    /// Explicit starting powers (must be strictly positive).
    Custom(Vec<f64>),
}

/// Tunable solver parameters. [`SolverParams::defaults`] derives the values
/// used throughout: a termination threshold scaling with `B*K`, subgradient
/// steps normalized by the constraint scales, and a 500-iteration cap.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    /// Termination threshold on `|F|` in bits/s.
    pub tau: f64,
    /// Step size for the sum-power multiplier.
    pub theta1: f64,
    /// Per-user step sizes for the rate multipliers.
    pub theta2: Vec<f64>,
    /// Iteration cap.
    pub max_iter: usize,
    /// Initial power policy.
    pub p_init: PowerInit,
    /// Initial sum-power multiplier.
    pub omega_init: f64,
    /// Initial rate multipliers (uniform).
    pub rho_init: f64,
    /// Keep the bandwidth factor of the rate derivative in the power update
    /// (the dimensionally consistent form). `false` reproduces the `B = 1`
    /// variant for comparison.
    pub include_bandwidth_factor: bool,
}

impl SolverParams {
    /// Default parameters for a given system configuration:
    /// `tau = 1e-6 * B * K`, `theta1 = 0.1 / PT`,
    /// `theta2_k = 0.1 / RT_k` (or `0.1 / B` where `RT_k = 0`),
    /// 500 iterations, uniform `PT/(2K)` start, zero multipliers.
    pub fn defaults(config: &SystemConfig) -> Self {
        let b = config.bandwidth_hz;
        let theta2 = config
            .min_rate_bps
            .iter()
            .map(|&rt| if rt > 0.0 { 0.1 / rt } else { 0.1 / b })
            .collect();
        Self {
            tau: 1e-6 * b * config.users as f64,
            theta1: 0.1 / config.max_sum_power_w,
            theta2,
            max_iter: 500,
            p_init: PowerInit::HalfBudgetUniform,
            omega_init: 0.0,
            rho_init: 0.0,
            include_bandwidth_factor: true,
        }
    }

    pub fn validate(&self, users: usize) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::Domain(format!("tau must be > 0, got {}", self.tau)));
        }
        if !(self.theta1 > 0.0) {
            return Err(Error::Domain(format!("theta1 must be > 0, got {}", self.theta1)));
        }
        if self.theta2.len() != users {
            return Err(Error::Dimension(format!(
                "theta2 length {} != users {users}",
                self.theta2.len()
            )));
        }
        if let Some(i) = self.theta2.iter().position(|&t| !(t > 0.0)) {
            return Err(Error::Domain(format!("theta2[{i}] must be > 0, got {}", self.theta2[i])));
        }
        if self.max_iter < 1 {
            return Err(Error::Domain("max_iter must be >= 1".into()));
        }
        if !(self.omega_init >= 0.0) || !(self.rho_init >= 0.0) {
            return Err(Error::Domain("initial multipliers must be >= 0".into()));
        }
        if let PowerInit::Custom(p) = &self.p_init {
            if p.len() != users {
                return Err(Error::Dimension(format!(
                    "p_init length {} != users {users}",
                    p.len()
                )));
            }
            if let Some(i) = p.iter().position(|&x| !(x > 0.0)) {
                return Err(Error::Domain(format!("p_init[{i}] must be > 0, got {}", p[i])));
            }
        }
        Ok(())
    }
}

/// Why the solve loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// `|F| <= tau` before the iteration cap.
    Converged,
    /// Cap reached with constraints satisfied within tolerance.
    MaxIterReached,
    /// Cap reached with a power or rate constraint still violated beyond
    /// tolerance.
    InfeasibleConstraints,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIterReached => "max_iter_reached",
            SolveStatus::InfeasibleConstraints => "infeasible_constraints",
        }
    }
}

/// One row of the iteration trace.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub p: Vec<f64>,
    pub omega: f64,
    pub rho: Vec<f64>,
    pub q: f64,
    /// Subtractive objective at this iterate's powers with the previous
    /// iterate's `q` (zero by construction at iteration 0).
    pub objective: f64,
    pub sum_power: f64,
    /// `min_k (r_k - RT_k)` at this iterate, bits/s.
    pub min_rate_slack: f64,
}

/// Solver output: the final allocation, efficiency, duals, trace, and status.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub p_star: PowerAllocation,
    pub q_star: f64,
    pub duals: DualState,
    pub trace: Vec<IterationRecord>,
    pub status: SolveStatus,
}

impl SolveResult {
    /// Number of update iterations performed (trace rows minus the initial
    /// record).
    pub fn iterations(&self) -> usize {
        self.trace.len().saturating_sub(1)
    }

    pub fn final_record(&self) -> &IterationRecord {
        self.trace.last().expect("trace always has the initial record")
    }
}

fn check_map_inputs(p: &PowerAllocation, duals: &DualState, beta: &[f64]) -> Result<()> {
    duals.validate()?;
    if beta.len() != p.len() || duals.rho.len() != p.len() {
        return Err(Error::Dimension(format!(
            "power/gain/multiplier lengths disagree: {} / {} / {}",
            p.len(),
            beta.len(),
            duals.rho.len()
        )));
    }
    if let Some(i) = p.watts().iter().position(|&x| !(x > 0.0)) {
        return Err(Error::Domain(format!(
            "power update requires strictly positive input powers, user {i} has {}",
            p.watts()[i]
        )));
    }
    if let Some(i) = beta.iter().position(|&b| !(b > 0.0)) {
        return Err(Error::Domain(format!("beta[{i}] must be > 0, got {}", beta[i])));
    }
    Ok(())
}

fn t_map(
    p: &PowerAllocation,
    duals: &DualState,
    beta: &[f64],
    bandwidth_hz: f64,
    noise_psd: f64,
    include_bandwidth_factor: bool,
) -> Result<PowerAllocation> {
    check_map_inputs(p, duals, beta)?;
    let ln2 = std::f64::consts::LN_2;
    let b_factor = if include_bandwidth_factor { bandwidth_hz } else { 1.0 };
    let noise = bandwidth_hz * noise_psd;
    let total = p.total();

    // Per-user derivative weight of the interference it suffers:
    // term_j = B(1+rho_j) / (ln2 * (sum_{i!=j} p_i + B N0 / beta_j)).
    let terms: Vec<f64> = p
        .watts()
        .iter()
        .zip(beta.iter())
        .zip(duals.rho.iter())
        .map(|((&pj, &bj), &rj)| b_factor * (1.0 + rj) / (ln2 * (total - pj + noise / bj)))
        .collect();
    let term_sum: f64 = terms.iter().sum();

    let mut out = Vec::with_capacity(p.len());
    for k in 0..p.len() {
        let denom = ln2 * (term_sum - terms[k] + duals.q + duals.omega);
        if !(denom > 0.0) {
            return Err(Error::Domain(format!(
                "power update denominator is not positive for user {k} \
                 (q + omega = {}, no interference term)",
                duals.q + duals.omega
            )));
        }
        out.push(b_factor * (1.0 + duals.rho[k]) / denom);
    }
    PowerAllocation::new(out)
}

/// One Jacobi pass of the stationarity fixed-point update: every output
/// power is computed from the input vector. All outputs are strictly
/// positive.
pub fn sif_update(
    p: &PowerAllocation,
    duals: &DualState,
    beta: &[f64],
    bandwidth_hz: f64,
    noise_psd: f64,
    include_bandwidth_factor: bool,
) -> Result<PowerAllocation> {
    t_map(p, duals, beta, bandwidth_hz, noise_psd, include_bandwidth_factor)
}

/// The power-update map `T` itself (bandwidth factor included), exposed so
/// its interference-function properties can be probed directly.
pub fn interference_map(
    p: &PowerAllocation,
    duals: &DualState,
    beta: &[f64],
    bandwidth_hz: f64,
    noise_psd: f64,
) -> Result<PowerAllocation> {
    t_map(p, duals, beta, bandwidth_hz, noise_psd, true)
}

/// Projected subgradient step for the sum-power multiplier:
/// `max(0, omega - theta1 * (PT - sum p))`.
pub fn dual_update_omega(omega: f64, p: &PowerAllocation, max_sum_power_w: f64, theta1: f64) -> f64 {
    (omega - theta1 * (max_sum_power_w - p.total())).max(0.0)
}

/// Projected subgradient step for the rate multipliers, componentwise
/// `max(0, rho_k - theta2_k * (r_k - RT_k))`.
pub fn dual_update_rho(
    rho: &[f64],
    r_lb: &RateVector,
    min_rate_bps: &[f64],
    theta2: &[f64],
) -> Result<Vec<f64>> {
    let k = rho.len();
    if r_lb.r.len() != k || min_rate_bps.len() != k || theta2.len() != k {
        return Err(Error::Dimension(format!(
            "multiplier/rate/target/step lengths disagree: {} / {} / {} / {}",
            k,
            r_lb.r.len(),
            min_rate_bps.len(),
            theta2.len()
        )));
    }
    Ok(rho
        .iter()
        .zip(r_lb.r.iter())
        .zip(min_rate_bps.iter())
        .zip(theta2.iter())
        .map(|(((&rho_k, &rk), &rt_k), &th)| (rho_k - th * (rk - rt_k)).max(0.0))
        .collect())
}

/// Efficiency refresh: the lower-bound energy efficiency at the current
/// iterate.
pub fn q_update(r_lb: &RateVector, p: &PowerAllocation, circuit_power_w: &[f64]) -> Result<f64> {
    energy_efficiency(r_lb, p, circuit_power_w)
}

/// Per-user stationarity residual of the priced objective: the derivative
/// of `sum_j (1+rho_j) r_j - (q + omega) * sum_j p_j` with respect to `p_k`,
///
/// ```text
/// res_k = B(1+rho_k)/(p_k ln2)
///         - sum_{j!=k} B(1+rho_j) / (ln2 (sum_{i!=j} p_i + B N0/beta_j))
///         - q - omega.
/// ```
///
/// Every entry is near zero at a converged interior solution, positive
/// below the single-user optimum and negative above it.
pub fn stationarity_residual(
    p: &PowerAllocation,
    duals: &DualState,
    beta: &[f64],
    bandwidth_hz: f64,
    noise_psd: f64,
) -> Result<Vec<f64>> {
    check_map_inputs(p, duals, beta)?;
    let ln2 = std::f64::consts::LN_2;
    let noise = bandwidth_hz * noise_psd;
    let total = p.total();
    let terms: Vec<f64> = p
        .watts()
        .iter()
        .zip(beta.iter())
        .zip(duals.rho.iter())
        .map(|((&pj, &bj), &rj)| bandwidth_hz * (1.0 + rj) / (ln2 * (total - pj + noise / bj)))
        .collect();
    let term_sum: f64 = terms.iter().sum();
    Ok(p.watts()
        .iter()
        .zip(duals.rho.iter())
        .enumerate()
        .map(|(k, (&pk, &rk))| {
            bandwidth_hz * (1.0 + rk) / (pk * ln2) - (term_sum - terms[k]) - duals.q - duals.omega
        })
        .collect())
}

fn initial_powers(config: &SystemConfig, params: &SolverParams) -> PowerAllocation {
    match &params.p_init {
        PowerInit::HalfBudgetUniform => PowerAllocation::new(vec![
            config.max_sum_power_w / (2.0 * config.users as f64);
            config.users
        ])
        .expect("positive uniform start"),
        PowerInit::Custom(p) => PowerAllocation::new(p.clone()).expect("validated by params"),
    }
}

fn min_rate_slack(r: &RateVector, min_rate_bps: &[f64]) -> f64 {
    r.r.iter()
        .zip(min_rate_bps.iter())
        .map(|(&rk, &rt)| rk - rt)
        .fold(f64::INFINITY, f64::min)
}

fn constraints_violated(config: &SystemConfig, r: &RateVector, p: &PowerAllocation) -> bool {
    let power_ok = p.total() <= config.max_sum_power_w * (1.0 + CONSTRAINT_REL_TOL);
    let rate_ok = r.r.iter().zip(config.min_rate_bps.iter()).all(|(&rk, &rt)| {
        let scale = rt.max(config.bandwidth_hz);
        rk >= rt - CONSTRAINT_REL_TOL * scale
    });
    !(power_ok && rate_ok)
}

/// Run the full iterative algorithm on fixed large-scale gains.
///
/// Starting from the initial policy and multipliers, each iteration performs
/// one Jacobi power pass, prices the power and rate constraints with
/// projected subgradient steps, refreshes `q` from the freshly updated
/// powers, and records a trace row. The loop stops when `|F| <= tau`
/// (status `Converged`) or at the iteration cap, in which case the final
/// constraint residuals decide between `MaxIterReached` and
/// `InfeasibleConstraints`.
pub fn solve(config: &SystemConfig, beta: &[f64], params: &SolverParams) -> Result<SolveResult> {
    config.validate()?;
    params.validate(config.users)?;
    if beta.len() != config.users {
        return Err(Error::Dimension(format!(
            "beta length {} != users {}",
            beta.len(),
            config.users
        )));
    }

    let b = config.bandwidth_hz;
    let n0 = config.noise_psd;
    let m = config.antennas;
    let pc = &config.circuit_power_w;

    let mut p = initial_powers(config, params);
    let mut duals = DualState::new(
        params.omega_init,
        vec![params.rho_init; config.users],
        0.0,
    )?;

    let mut r = lb_rate_high_snr(beta, &p, m, b, n0)?;
    duals.q = q_update(&r, &p, pc)?.max(0.0);

    let mut trace = Vec::with_capacity(params.max_iter.min(1024) + 1);
    trace.push(IterationRecord {
        iteration: 0,
        p: p.watts().to_vec(),
        omega: duals.omega,
        rho: duals.rho.clone(),
        q: duals.q,
        objective: subtractive_objective(&r, &p, pc, duals.q)?,
        sum_power: p.total(),
        min_rate_slack: min_rate_slack(&r, &config.min_rate_bps),
    });

    let mut status = None;
    for iteration in 1..=params.max_iter {
        let p_next = sif_update(&p, &duals, beta, b, n0, params.include_bandwidth_factor)?;
        let r_next = lb_rate_high_snr(beta, &p_next, m, b, n0)?;
        // Dinkelbach gap: fresh powers against the q they were computed with.
        let objective = subtractive_objective(&r_next, &p_next, pc, duals.q)?;

        duals.omega = dual_update_omega(duals.omega, &p_next, config.max_sum_power_w, params.theta1);
        duals.rho = dual_update_rho(&duals.rho, &r_next, &config.min_rate_bps, &params.theta2)?;
        duals.q = q_update(&r_next, &p_next, pc)?.max(0.0);
        p = p_next;
        r = r_next;

        trace.push(IterationRecord {
            iteration,
            p: p.watts().to_vec(),
            omega: duals.omega,
            rho: duals.rho.clone(),
            q: duals.q,
            objective,
            sum_power: p.total(),
            min_rate_slack: min_rate_slack(&r, &config.min_rate_bps),
        });

        if objective.abs() <= params.tau {
            status = Some(SolveStatus::Converged);
            break;
        }
    }

    let status = status.unwrap_or_else(|| {
        if constraints_violated(config, &r, &p) {
            SolveStatus::InfeasibleConstraints
        } else {
            SolveStatus::MaxIterReached
        }
    });

    Ok(SolveResult { p_star: p, q_star: duals.q, duals: duals.clone(), trace, status })
}
