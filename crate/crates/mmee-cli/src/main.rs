//! `mmee` — command-line simulator for energy-efficient downlink power
//! allocation in single-cell massive MIMO.
//!
//! Subcommands:
//! - `solve`  — one seeded instance; prints the solution and iteration trace.
//! - `sweep`  — run an experiment file; writes the result CSV.
//! - `oracle` — compare the solver against the grid-search oracle.
//! - `verify` — randomized structural checks; exit code 3 on any violation.
//!
//! Exit codes: 0 success, 1 usage/config error, 2 runtime error,
//! 3 verification failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mmee_core::channel::sample_large_scale;
use mmee_core::config::SystemConfig;
use mmee_core::error::Error;
use mmee_core::experiment::{
    emit_csv, iteration_scaling_report, load_config, run_experiment, trial_seed, to_toml,
    ExperimentSpec, OutputKind, SweepVariable,
};
use mmee_core::solver::{solve, SolveResult};
use mmee_core::verify::{
    verify_concavity, verify_sif_properties, verify_solver_against_oracle, GridSpec,
};

#[derive(Parser)]
#[command(
    name = "mmee",
    about = "Energy-efficient power allocation simulator for massive MIMO downlink",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config file (TOML). Omitted: built-in default scenario.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a single seeded instance and print the solution with its trace.
    Solve {
        #[command(flatten)]
        common: ConfigArgs,
        /// Print every n-th trace row (the first and last always print).
        #[arg(long, default_value_t = 1)]
        trace_every: usize,
    },
    /// Run an experiment file and write its rows as CSV.
    Sweep {
        #[command(flatten)]
        common: ConfigArgs,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the iterative solver with the exhaustive grid oracle.
    Oracle {
        #[command(flatten)]
        common: ConfigArgs,
        /// Grid points per axis.
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// Run the randomized concavity and interference-function checks.
    Verify {
        #[command(flatten)]
        common: ConfigArgs,
        /// Random samples per suite.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
}

fn load_spec(common: &ConfigArgs) -> Result<ExperimentSpec, Error> {
    let mut spec = match &common.config {
        Some(path) => load_config(path)?,
        None => ExperimentSpec::single(SystemConfig::default(), 42),
    };
    if let Some(seed) = common.seed {
        spec.master_seed = seed;
    }
    Ok(spec)
}

fn print_solution(result: &SolveResult, trace_every: usize) {
    println!("status: {}", result.status.as_str());
    println!("iterations: {}", result.iterations());
    println!("ee_bits_per_joule: {}", result.q_star);
    print!("p_star_w:");
    for p in result.p_star.watts() {
        print!(" {p:.6e}");
    }
    println!();
    println!("omega: {}", result.duals.omega);
    print!("rho:");
    for r in &result.duals.rho {
        print!(" {r:.6e}");
    }
    println!();
    println!();
    println!("iter  q_bits_per_joule  objective_bits_per_s  sum_power_w  min_rate_slack_bps  omega");
    let last = result.trace.len().saturating_sub(1);
    let every = trace_every.max(1);
    for rec in &result.trace {
        if rec.iteration % every != 0 && rec.iteration != last {
            continue;
        }
        println!(
            "{:<5} {:<17.10e} {:<21.6e} {:<12.6e} {:<19.6e} {:.6e}",
            rec.iteration, rec.q, rec.objective, rec.sum_power, rec.min_rate_slack, rec.omega
        );
    }
}

fn cmd_solve(common: &ConfigArgs, trace_every: usize) -> Result<(), Error> {
    let spec = load_spec(common)?;
    let config = spec.config_at(0)?;
    let params = spec.solver.resolve(&config)?;
    let seed = trial_seed(spec.master_seed, 0, 0);
    let drop = sample_large_scale(&config, seed)?;
    println!("seed: {seed}");
    print!("beta:");
    for b in &drop.beta {
        print!(" {b:.6e}");
    }
    println!();
    let result = solve(&config, &drop.beta, &params)?;
    print_solution(&result, trace_every);
    Ok(())
}

fn cmd_sweep(common: &ConfigArgs, out: &PathBuf) -> Result<(), Error> {
    let spec = load_spec(common)?;
    let rows = run_experiment(&spec)?;
    let mut file = std::fs::File::create(out).map_err(|e| Error::Io {
        path: out.display().to_string(),
        source: e,
    })?;
    emit_csv(&spec, &rows, &mut file)?;
    eprintln!("wrote {} rows to {}", rows.len(), out.display());

    // Resolved-config echo on stdout keeps the run self-describing even
    // when the CSV is piped elsewhere.
    println!("{}", to_toml(&spec));

    if spec.outputs.contains(&OutputKind::Trace) {
        let path = out.with_extension("trace.csv");
        let mut tf = std::fs::File::create(&path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        write_trace_csv(&spec, &mut tf)?;
        eprintln!("wrote traces to {}", path.display());
    }
    if spec.outputs.contains(&OutputKind::OracleGap) {
        let path = out.with_extension("oracle.txt");
        let mut of = std::fs::File::create(&path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        write_oracle_reports(&spec, &mut of)?;
        eprintln!("wrote oracle comparisons to {}", path.display());
    }
    if spec.sweep == SweepVariable::Users && spec.sweep_values.len() >= 4 && spec.trials >= 20 {
        println!("{}", iteration_scaling_report(&spec)?);
    }
    Ok(())
}

/// Per-iteration trace of trial 0 at every sweep point.
fn write_trace_csv<W: std::io::Write>(spec: &ExperimentSpec, out: &mut W) -> Result<(), Error> {
    let io_err = |e: std::io::Error| Error::Io { path: "<trace output>".into(), source: e };
    writeln!(
        out,
        "sweep_value,iteration,q,objective,sum_power_w,min_rate_slack_bps,omega"
    )
    .map_err(io_err)?;
    for idx in 0..spec.sweep_points() {
        let config = spec.config_at(idx)?;
        let params = spec.solver.resolve(&config)?;
        let seed = trial_seed(spec.master_seed, idx, 0);
        let drop = sample_large_scale(&config, seed)?;
        let result = solve(&config, &drop.beta, &params)?;
        let sweep_value = spec
            .sweep_value_at(idx)
            .map(|v| v.to_string())
            .unwrap_or_default();
        for rec in &result.trace {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                sweep_value,
                rec.iteration,
                rec.q,
                rec.objective,
                rec.sum_power,
                rec.min_rate_slack,
                rec.omega
            )
            .map_err(io_err)?;
        }
    }
    Ok(())
}

/// Grid-oracle comparison of trial 0 at every sweep point.
fn write_oracle_reports<W: std::io::Write>(spec: &ExperimentSpec, out: &mut W) -> Result<(), Error> {
    let io_err = |e: std::io::Error| Error::Io { path: "<oracle output>".into(), source: e };
    for idx in 0..spec.sweep_points() {
        let config = spec.config_at(idx)?;
        let params = spec.solver.resolve(&config)?;
        let seed = trial_seed(spec.master_seed, idx, 0);
        let drop = sample_large_scale(&config, seed)?;
        let label = spec
            .sweep_value_at(idx)
            .map(|v| format!("{} = {v}", spec.sweep.as_key()))
            .unwrap_or_else(|| "single run".to_string());
        writeln!(out, "--- {label} (seed {seed})").map_err(io_err)?;
        let grid = GridSpec::default_log(config.max_sum_power_w, 200)?;
        match verify_solver_against_oracle(&config, &drop.beta, &params, &grid) {
            Ok(cmp) => writeln!(out, "{cmp}").map_err(io_err)?,
            Err(e) => writeln!(out, "skipped: {e}").map_err(io_err)?,
        }
    }
    Ok(())
}

fn cmd_oracle(common: &ConfigArgs, points: usize) -> Result<(), Error> {
    let spec = load_spec(common)?;
    let config = spec.config_at(0)?;
    let params = spec.solver.resolve(&config)?;
    let seed = trial_seed(spec.master_seed, 0, 0);
    let drop = sample_large_scale(&config, seed)?;
    let grid = GridSpec::default_log(config.max_sum_power_w, points)?;
    let cmp = verify_solver_against_oracle(&config, &drop.beta, &params, &grid)?;
    println!("{cmp}");
    Ok(())
}

fn cmd_verify(common: &ConfigArgs, samples: usize) -> Result<u64, Error> {
    let spec = load_spec(common)?;
    let config = spec.config_at(0)?;
    let params = spec.solver.resolve(&config)?;
    let seed = trial_seed(spec.master_seed, 0, 0);
    let drop = sample_large_scale(&config, seed)?;

    // A converged run supplies a representative efficiency value and duals.
    let result = solve(&config, &drop.beta, &params)?;
    let concavity = verify_concavity(&config, &drop.beta, result.q_star, samples, seed)?;
    print!("{concavity}");
    let sif = verify_sif_properties(
        &result.duals,
        &drop.beta,
        config.bandwidth_hz,
        config.noise_psd,
        samples,
        seed ^ 0x5151,
    )?;
    print!("{sif}");
    Ok(concavity.violations + sif.total_violations())
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config { .. } | Error::Parse { .. } | Error::Specification(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Solve { common, trace_every } => cmd_solve(common, *trace_every).map(|()| 0u8),
        Command::Sweep { common, out } => cmd_sweep(common, out).map(|()| 0u8),
        Command::Oracle { common, points } => cmd_oracle(common, *points).map(|()| 0u8),
        Command::Verify { common, samples } => cmd_verify(common, *samples).map(|violations| {
            if violations > 0 {
                eprintln!("verification failed: {violations} violation(s)");
                3u8
            } else {
                0u8
            }
        }),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
