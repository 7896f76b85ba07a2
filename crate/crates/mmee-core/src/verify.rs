//! Independent verification tools: an exhaustive grid-search oracle for the
//! constrained efficiency problem, and randomized numerical checks of the
//! structural properties the solver relies on (concavity of the
//! log-power-domain objective, and the interference-function properties of
//! the power update map).
//!
//! The grid oracle evaluates the same lower-bound efficiency objective the
//! solver maximizes, on a full Cartesian grid, so solver results can be
//! compared against it without sharing any code path with the fixed-point
//! iteration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::ratemodel::{energy_efficiency, lb_rate_high_snr, PowerAllocation};
use crate::solver::{interference_map, solve, DualState, SolveResult, SolverParams};

/// Axis scaling for the search grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridScale {
    Linear,
    Logarithmic,
}

/// A per-axis power grid, identical for every user.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    /// Smallest grid power in W (> 0).
    pub p_min: f64,
    /// Largest grid power in W.
    pub p_max: f64,
    /// Points per axis (>= 2). Counts of the form `2^j + 1` make refined
    /// grids exact supersets of coarser ones.
    pub points_per_axis: usize,
    pub scale: GridScale,
}

/// Default evaluation budget for [`grid_search`]: `points^K` must not
/// exceed this.
pub const DEFAULT_GRID_BUDGET: f64 = 1e7;

impl GridSpec {
    pub fn new(p_min: f64, p_max: f64, points_per_axis: usize, scale: GridScale) -> Result<Self> {
        if !(p_min > 0.0) || !(p_min < p_max) {
            return Err(Error::Domain(format!(
                "grid bounds must satisfy 0 < p_min < p_max, got [{p_min}, {p_max}]"
            )));
        }
        if points_per_axis < 2 {
            return Err(Error::Domain("grid needs at least 2 points per axis".into()));
        }
        Ok(Self { p_min, p_max, points_per_axis, scale })
    }

    /// Logarithmic grid over `[1e-6 * PT, PT]`, the solver's operating range.
    pub fn default_log(max_sum_power_w: f64, points_per_axis: usize) -> Result<Self> {
        Self::new(1e-6 * max_sum_power_w, max_sum_power_w, points_per_axis, GridScale::Logarithmic)
    }

    /// The grid values along one axis.
    pub fn axis(&self) -> Vec<f64> {
        let n = self.points_per_axis;
        match self.scale {
            GridScale::Linear => {
                let step = (self.p_max - self.p_min) / (n - 1) as f64;
                (0..n).map(|i| self.p_min + i as f64 * step).collect()
            }
            GridScale::Logarithmic => {
                let (a, b) = (self.p_min.ln(), self.p_max.ln());
                let step = (b - a) / (n - 1) as f64;
                (0..n).map(|i| (a + i as f64 * step).exp()).collect()
            }
        }
    }
}

/// Outcome of a grid search. `p_best`/`ee_best` are `None` when no grid
/// point satisfies the constraints (`feasible_count == 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub p_best: Option<PowerAllocation>,
    pub ee_best: Option<f64>,
    pub feasible_count: u64,
    pub evaluated_count: u64,
}

impl std::fmt::Display for OracleResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "evaluated: {}", self.evaluated_count)?;
        writeln!(f, "feasible: {}", self.feasible_count)?;
        match (&self.p_best, self.ee_best) {
            (Some(p), Some(ee)) => {
                writeln!(f, "ee_best_bits_per_joule: {ee}")?;
                write!(f, "p_best_w:")?;
                for x in p.watts() {
                    write!(f, " {x}")?;
                }
                writeln!(f)
            }
            _ => writeln!(f, "infeasible: no grid point satisfies the constraints"),
        }
    }
}

struct GridCandidate {
    ee: f64,
    p: Vec<f64>,
}

/// Pick the better candidate: higher efficiency wins, exact ties go to the
/// lexicographically smallest power vector so parallel and sequential scans
/// agree.
fn better(a: Option<GridCandidate>, b: Option<GridCandidate>) -> Option<GridCandidate> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => {
            if x.ee > y.ee {
                Some(x)
            } else if y.ee > x.ee {
                Some(y)
            } else if x.p <= y.p {
                Some(x)
            } else {
                Some(y)
            }
        }
    }
}

/// Exhaustively evaluate the lower-bound energy efficiency over the full
/// `points^K` grid and return the best point that satisfies the power
/// budget and every rate target. Deterministic; the scan parallelizes over
/// the first axis with an order-insensitive reduction.
pub fn grid_search(config: &SystemConfig, beta: &[f64], grid: &GridSpec) -> Result<OracleResult> {
    config.validate()?;
    if beta.len() != config.users {
        return Err(Error::Dimension(format!(
            "beta length {} != users {}",
            beta.len(),
            config.users
        )));
    }
    let k = config.users;
    let requested = (grid.points_per_axis as f64).powi(k as i32);
    if requested > DEFAULT_GRID_BUDGET {
        return Err(Error::Budget { requested, budget: DEFAULT_GRID_BUDGET });
    }

    let axis = grid.axis();
    let m = config.antennas as f64;
    let noise = config.noise_power_w();
    let pc_total = config.total_circuit_power_w();
    let pt = config.max_sum_power_w;
    let rt = &config.min_rate_bps;
    let b = config.bandwidth_hz;

    // Evaluate one power vector; returns (feasible, ee).
    let evaluate = |p: &[f64]| -> (bool, f64) {
        let total: f64 = p.iter().sum();
        if total > pt {
            return (false, f64::NEG_INFINITY);
        }
        let mut sum_rate = 0.0;
        let mut feasible = true;
        for i in 0..p.len() {
            let ratio = m * beta[i] * p[i] / (beta[i] * (total - p[i]) + noise);
            let r = b * ratio.log2();
            if r < rt[i] {
                feasible = false;
                break;
            }
            sum_rate += r;
        }
        if !feasible {
            return (false, f64::NEG_INFINITY);
        }
        (true, sum_rate / (total + pc_total))
    };

    let per_first_axis = |first: &f64| -> (u64, u64, Option<GridCandidate>) {
        let mut p = vec![0.0f64; k];
        p[0] = *first;
        let mut idx = vec![0usize; k.saturating_sub(1)];
        let mut feasible_count = 0u64;
        let mut evaluated = 0u64;
        let mut best: Option<GridCandidate> = None;
        loop {
            for (slot, &i) in idx.iter().enumerate() {
                p[slot + 1] = axis[i];
            }
            evaluated += 1;
            let (feasible, ee) = evaluate(&p);
            if feasible {
                feasible_count += 1;
                best = better(best, Some(GridCandidate { ee, p: p.clone() }));
            }
            // Mixed-radix increment over the remaining axes.
            let mut carry = true;
            for slot in (0..idx.len()).rev() {
                if carry {
                    idx[slot] += 1;
                    if idx[slot] == axis.len() {
                        idx[slot] = 0;
                    } else {
                        carry = false;
                    }
                }
            }
            if carry {
                break;
            }
        }
        (evaluated, feasible_count, best)
    };

    let (evaluated_count, feasible_count, best) = axis
        .par_iter()
        .map(per_first_axis)
        .reduce(
            || (0, 0, None),
            |(ea, fa, ba), (eb, fb, bb)| (ea + eb, fa + fb, better(ba, bb)),
        );

    let (p_best, ee_best) = match best {
        Some(c) => (Some(PowerAllocation::new(c.p)?), Some(c.ee)),
        None => (None, None),
    };
    Ok(OracleResult { p_best, ee_best, feasible_count, evaluated_count })
}

/// Report of a randomized concavity check.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcavityReport {
    pub samples: usize,
    pub violations: u64,
    /// Most negative slack of the interpolation inequality (0 when every
    /// sample satisfied it outright).
    pub worst_slack: f64,
}

impl std::fmt::Display for ConcavityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "concavity_samples: {}", self.samples)?;
        writeln!(f, "concavity_violations: {}", self.violations)?;
        writeln!(f, "concavity_worst_slack: {}", self.worst_slack)
    }
}

/// Subtractive objective as a function of log-powers:
/// `F(u) = sum_k B log2(M b_k e^{u_k} / (b_k sum_{j!=k} e^{u_j} + B N0))
///         - q (sum_k e^{u_k} + sum Pc)`.
fn log_power_objective(config: &SystemConfig, beta: &[f64], q: f64, u: &[f64]) -> f64 {
    let m = config.antennas as f64;
    let b = config.bandwidth_hz;
    let noise = config.noise_power_w();
    let p: Vec<f64> = u.iter().map(|&x| x.exp()).collect();
    let total: f64 = p.iter().sum();
    let mut sum_rate = 0.0;
    for k in 0..p.len() {
        let ratio = m * beta[k] * p[k] / (beta[k] * (total - p[k]) + noise);
        sum_rate += b * ratio.log2();
    }
    sum_rate - q * (total + config.total_circuit_power_w())
}

/// Randomized midpoint-concavity check of the subtractive objective in the
/// log-power domain. Draws `samples` pairs of log-power vectors uniformly
/// in `[ln(1e-6 PT), ln(PT)]^K` and a mixing weight `lambda in (0,1)`, and
/// verifies the interpolation inequality within a `1e-9` relative margin.
pub fn verify_concavity(
    config: &SystemConfig,
    beta: &[f64],
    q: f64,
    samples: usize,
    seed: u64,
) -> Result<ConcavityReport> {
    config.validate()?;
    if beta.len() != config.users {
        return Err(Error::Dimension(format!(
            "beta length {} != users {}",
            beta.len(),
            config.users
        )));
    }
    if !(q >= 0.0) {
        return Err(Error::Domain(format!("q must be >= 0, got {q}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = (1e-6 * config.max_sum_power_w).ln();
    let hi = config.max_sum_power_w.ln();
    let k = config.users;

    let mut violations = 0u64;
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let ua: Vec<f64> = (0..k).map(|_| rng.random_range(lo..hi)).collect();
        let ub: Vec<f64> = (0..k).map(|_| rng.random_range(lo..hi)).collect();
        let lambda: f64 = rng.random();
        let mid: Vec<f64> = ua
            .iter()
            .zip(ub.iter())
            .map(|(&a, &b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        let fa = log_power_objective(config, beta, q, &ua);
        let fb = log_power_objective(config, beta, q, &ub);
        let fm = log_power_objective(config, beta, q, &mid);
        let chord = lambda * fa + (1.0 - lambda) * fb;
        let tol = 1e-9 * fa.abs().max(fb.abs()).max(fm.abs()).max(1.0);
        let slack = fm - chord;
        if slack < -tol {
            violations += 1;
        }
        worst = worst.min(slack);
    }
    Ok(ConcavityReport { samples, violations, worst_slack: worst })
}

/// Report of the interference-function property check.
#[derive(Debug, Clone, PartialEq)]
pub struct SifPropertyReport {
    pub samples: usize,
    pub positivity_violations: u64,
    pub monotonicity_violations: u64,
    pub scalability_violations: u64,
}

impl SifPropertyReport {
    pub fn total_violations(&self) -> u64 {
        self.positivity_violations + self.monotonicity_violations + self.scalability_violations
    }
}

impl std::fmt::Display for SifPropertyReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "sif_samples: {}", self.samples)?;
        writeln!(f, "positivity_violations: {}", self.positivity_violations)?;
        writeln!(f, "monotonicity_violations: {}", self.monotonicity_violations)?;
        writeln!(f, "scalability_violations: {}", self.scalability_violations)
    }
}

/// Randomized check that the power-update map is a standard interference
/// function: positive, componentwise monotone, and scalable
/// (`c T(p) >= T(c p)` for `c > 1`, strictly when `q + omega > 0`).
///
/// Powers are drawn log-uniformly over `[1e-9, 10]` W, the dominating
/// vector adds a random positive offset per component, and `c` is uniform
/// in `(1, 3]`.
pub fn verify_sif_properties(
    duals: &DualState,
    beta: &[f64],
    bandwidth_hz: f64,
    noise_psd: f64,
    samples: usize,
    seed: u64,
) -> Result<SifPropertyReport> {
    duals.validate()?;
    let k = beta.len();
    if duals.rho.len() != k {
        return Err(Error::Dimension(format!(
            "rho length {} != beta length {k}",
            duals.rho.len()
        )));
    }
    let strict = duals.q + duals.omega > 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = ((1e-9f64).ln(), (10f64).ln());

    // Float guard for the non-strict comparisons.
    let slop = 1e-12;

    let mut positivity = 0u64;
    let mut monotonicity = 0u64;
    let mut scalability = 0u64;
    for _ in 0..samples {
        let p: Vec<f64> = (0..k).map(|_| rng.random_range(lo..hi).exp()).collect();
        let p_alloc = PowerAllocation::new(p.clone())?;
        let t_p = interference_map(&p_alloc, duals, beta, bandwidth_hz, noise_psd)?;
        if t_p.watts().iter().any(|&x| !(x > 0.0)) {
            positivity += 1;
        }

        let p_up: Vec<f64> = p.iter().map(|&x| x * (1.0 + rng.random::<f64>())).collect();
        let t_up = interference_map(&PowerAllocation::new(p_up)?, duals, beta, bandwidth_hz, noise_psd)?;
        if t_up
            .watts()
            .iter()
            .zip(t_p.watts())
            .any(|(&hi_v, &lo_v)| hi_v < lo_v * (1.0 - slop))
        {
            monotonicity += 1;
        }

        let c = 1.0 + rng.random_range(0.0..2.0f64).max(f64::MIN_POSITIVE);
        let scaled: Vec<f64> = p.iter().map(|&x| c * x).collect();
        let t_scaled =
            interference_map(&PowerAllocation::new(scaled)?, duals, beta, bandwidth_hz, noise_psd)?;
        let bad = t_scaled.watts().iter().zip(t_p.watts()).any(|(&tc, &t1)| {
            if strict {
                c * t1 <= tc
            } else {
                c * t1 < tc * (1.0 - slop)
            }
        });
        if bad {
            scalability += 1;
        }
    }
    Ok(SifPropertyReport {
        samples,
        positivity_violations: positivity,
        monotonicity_violations: monotonicity,
        scalability_violations: scalability,
    })
}

/// Side-by-side comparison of the iterative solver and the grid oracle on
/// identical inputs.
#[derive(Debug, Clone)]
pub struct OracleComparison {
    pub solver: SolveResult,
    pub oracle: OracleResult,
    /// `|ee_solver - ee_oracle| / ee_oracle`, `None` when the oracle found
    /// no feasible point.
    pub relative_gap: Option<f64>,
    /// Solver-side constraint residuals at the final iterate.
    pub solver_power_violation_w: f64,
    pub solver_worst_rate_violation_bps: f64,
}

impl std::fmt::Display for OracleComparison {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "solver_status: {}", self.solver.status.as_str())?;
        writeln!(f, "solver_iterations: {}", self.solver.iterations())?;
        writeln!(f, "solver_ee_bits_per_joule: {}", self.solver.q_star)?;
        match self.oracle.ee_best {
            Some(ee) => writeln!(f, "oracle_ee_bits_per_joule: {ee}")?,
            None => writeln!(f, "oracle_ee_bits_per_joule: infeasible")?,
        }
        match self.relative_gap {
            Some(gap) => writeln!(f, "relative_ee_gap: {gap}")?,
            None => writeln!(f, "relative_ee_gap: n/a")?,
        }
        writeln!(f, "solver_power_violation_w: {}", self.solver_power_violation_w)?;
        writeln!(
            f,
            "solver_worst_rate_violation_bps: {}",
            self.solver_worst_rate_violation_bps
        )
    }
}

/// Run [`solve`] and [`grid_search`] on identical inputs and report the
/// relative efficiency gap together with both sides' constraint residuals.
pub fn verify_solver_against_oracle(
    config: &SystemConfig,
    beta: &[f64],
    params: &SolverParams,
    grid: &GridSpec,
) -> Result<OracleComparison> {
    let solver = solve(config, beta, params)?;
    let oracle = grid_search(config, beta, grid)?;

    let r = lb_rate_high_snr(
        beta,
        &solver.p_star,
        config.antennas,
        config.bandwidth_hz,
        config.noise_psd,
    )?;
    let power_violation = (solver.p_star.total() - config.max_sum_power_w).max(0.0);
    let rate_violation = r
        .r
        .iter()
        .zip(config.min_rate_bps.iter())
        .map(|(&rk, &rt)| (rt - rk).max(0.0))
        .fold(0.0f64, f64::max);

    let relative_gap = oracle.ee_best.map(|ee| (solver.q_star - ee).abs() / ee);
    Ok(OracleComparison {
        solver,
        oracle,
        relative_gap,
        solver_power_violation_w: power_violation,
        solver_worst_rate_violation_bps: rate_violation,
    })
}

/// Lower-bound energy efficiency of an explicit power vector under a
/// configuration, for use by tests and reports.
pub fn lower_bound_ee(config: &SystemConfig, beta: &[f64], p: &PowerAllocation) -> Result<f64> {
    let r = lb_rate_high_snr(beta, p, config.antennas, config.bandwidth_hz, config.noise_psd)?;
    energy_efficiency(&r, p, &config.circuit_power_w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_user_config() -> SystemConfig {
        let mut cfg = SystemConfig::default();
        cfg.antennas = 64;
        cfg.circuit_power_w = vec![0.01; 64];
        cfg.users = 2;
        cfg.min_rate_bps = vec![0.0, 0.0];
        cfg
    }

    #[test]
    fn axis_generation_is_nested_for_power_of_two_counts() {
        let coarse = GridSpec::new(1e-6, 1.0, 257, GridScale::Logarithmic).unwrap().axis();
        let fine = GridSpec::new(1e-6, 1.0, 513, GridScale::Logarithmic).unwrap().axis();
        for (i, &c) in coarse.iter().enumerate() {
            assert_eq!(c, fine[2 * i], "coarse point {i} missing from refined grid");
        }
    }

    #[test]
    fn budget_is_enforced() {
        let cfg = SystemConfig::default(); // K = 3
        let beta = [1e-10, 1e-10, 1e-10];
        let grid = GridSpec::new(1e-6, 1.0, 500, GridScale::Logarithmic).unwrap();
        assert!(matches!(grid_search(&cfg, &beta, &grid), Err(Error::Budget { .. })));
    }

    #[test]
    fn unsatisfiable_rate_target_reports_infeasible() {
        let mut cfg = SystemConfig::default();
        cfg.users = 1;
        // Above the single-user ceiling at full power.
        let beta = [1e-10];
        let ceiling = cfg.bandwidth_hz
            * (cfg.antennas as f64 * beta[0] * cfg.max_sum_power_w / cfg.noise_power_w()).log2();
        cfg.min_rate_bps = vec![2.0 * ceiling];
        let grid = GridSpec::default_log(cfg.max_sum_power_w, 1000).unwrap();
        let result = grid_search(&cfg, &beta, &grid).unwrap();
        assert_eq!(result.feasible_count, 0);
        assert!(result.p_best.is_none());
    }

    #[test]
    fn one_dimensional_profile_is_unimodal_and_stable_under_refinement() {
        let mut cfg = SystemConfig::default();
        cfg.users = 1;
        cfg.min_rate_bps = vec![0.0];
        let beta = [1e-10];

        let coarse_spec = GridSpec::default_log(cfg.max_sum_power_w, (1 << 16) + 1).unwrap();
        let coarse = grid_search(&cfg, &beta, &coarse_spec).unwrap();
        let fine_spec = GridSpec::default_log(cfg.max_sum_power_w, (1 << 17) + 1).unwrap();
        let fine = grid_search(&cfg, &beta, &fine_spec).unwrap();

        let p_coarse = coarse.p_best.unwrap().watts()[0];
        let p_fine = fine.p_best.unwrap().watts()[0];
        let step = (coarse_spec.p_max / coarse_spec.p_min).powf(
            1.0 / (coarse_spec.points_per_axis - 1) as f64,
        );
        assert!(
            p_fine <= p_coarse * step && p_fine >= p_coarse / step,
            "refined optimum {p_fine} moved more than one coarse step from {p_coarse}"
        );
        assert!(fine.ee_best.unwrap() >= coarse.ee_best.unwrap() - 1e-12);

        // Unimodality of the profile along the axis.
        let axis = coarse_spec.axis();
        let ee: Vec<f64> = axis
            .iter()
            .map(|&p| {
                lower_bound_ee(&cfg, &beta, &PowerAllocation::new(vec![p]).unwrap()).unwrap()
            })
            .collect();
        let mut direction_changes = 0;
        let mut rising = true;
        for w in ee.windows(2) {
            let up = w[1] >= w[0];
            if rising && !up {
                direction_changes += 1;
                rising = false;
            } else if !rising && up {
                direction_changes += 1;
                rising = true;
            }
        }
        assert!(direction_changes <= 1, "profile changed direction {direction_changes} times");
    }

    #[test]
    fn symmetric_instance_has_symmetric_optimum() {
        let cfg = two_user_config();
        let beta = [5e-11, 5e-11];
        let grid = GridSpec::default_log(cfg.max_sum_power_w, 129).unwrap();
        let result = grid_search(&cfg, &beta, &grid).unwrap();
        let p = result.p_best.unwrap();
        let step =
            (grid.p_max / grid.p_min).powf(1.0 / (grid.points_per_axis - 1) as f64);
        let ratio = p.watts()[0] / p.watts()[1];
        assert!(ratio <= step && ratio >= 1.0 / step, "asymmetric optimum {:?}", p.watts());
    }

    #[test]
    fn relabeling_users_permutes_the_optimum() {
        let cfg = two_user_config();
        let beta = [6e-11, 2e-11];
        let grid = GridSpec::default_log(cfg.max_sum_power_w, 129).unwrap();
        let forward = grid_search(&cfg, &beta, &grid).unwrap();
        let swapped = grid_search(&cfg, &[beta[1], beta[0]], &grid).unwrap();
        let pf = forward.p_best.unwrap();
        let ps = swapped.p_best.unwrap();
        assert_eq!(pf.watts()[0], ps.watts()[1]);
        assert_eq!(pf.watts()[1], ps.watts()[0]);
        assert_eq!(forward.ee_best, swapped.ee_best);
    }

    #[test]
    fn refinement_never_loses_efficiency() {
        let cfg = two_user_config();
        let beta = [6e-11, 3e-11];
        let mut previous = f64::NEG_INFINITY;
        for j in [5usize, 6, 7] {
            let grid = GridSpec::default_log(cfg.max_sum_power_w, (1 << j) + 1).unwrap();
            let ee = grid_search(&cfg, &beta, &grid).unwrap().ee_best.unwrap();
            assert!(ee >= previous - 1e-12, "refinement lost efficiency: {ee} < {previous}");
            previous = ee;
        }
    }

    #[test]
    fn concavity_holds_at_endpoints_and_on_random_pairs() {
        let cfg = SystemConfig::default();
        let beta = [4e-10, 8e-11, 2e-9];
        // Degenerate segment and endpoint mixing weights are exact.
        let u = [-3.0, -5.0, -4.0];
        let f = log_power_objective(&cfg, &beta, 1e6, &u);
        assert!(f.is_finite());
        let report = verify_concavity(&cfg, &beta, 1.7e6, 2000, 11).unwrap();
        assert_eq!(report.violations, 0, "worst slack {}", report.worst_slack);
    }

    #[test]
    fn sif_properties_hold_on_random_draws() {
        let duals = DualState::new(0.0, vec![0.0; 3], 0.5).unwrap();
        let beta = [2e-10, 7e-11, 4e-10];
        let report = verify_sif_properties(&duals, &beta, 120e3, 1e-20, 2000, 13).unwrap();
        assert_eq!(report.total_violations(), 0, "{report}");
    }

    #[test]
    fn solver_matches_oracle_on_single_user() {
        let mut cfg = SystemConfig::default();
        cfg.users = 1;
        cfg.min_rate_bps = vec![0.0];
        let beta = [1e-10];
        let params = SolverParams::defaults(&cfg);
        let grid = GridSpec::default_log(cfg.max_sum_power_w, (1 << 14) + 1).unwrap();
        let cmp = verify_solver_against_oracle(&cfg, &beta, &params, &grid).unwrap();
        // Gap bounded by one grid step's efficiency variation.
        assert!(cmp.relative_gap.unwrap() < 1e-4, "{cmp}");
    }
}
