//! Command-line front end: run the shipped experiments, validate scenario
//! files, or trace the upstream allocator cycle by cycle.
//!
//! Exit codes: 0 success, 1 configuration or I/O problem, 2 conservation
//! audit failure (a simulator bug, results were withheld), 3 a convergence
//! run never reached its sustained-throughput target.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ponsim::config::{ConfigError, MobileDirection, Mode, ScenarioConfig};
use ponsim::experiments::{convergence, mode_label, output, per_sweep, rtt, Testbed};

const PER_SWEEP_CFG: &str = include_str!("../../../configs/per_sweep.cfg");
const CONVERGENCE_CFG: &str = include_str!("../../../configs/convergence.cfg");
const RTT_CFG: &str = include_str!("../../../configs/rtt.cfg");

const EXIT_CONFIG: u8 = 1;
const EXIT_AUDIT: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "ponsim",
    version,
    about = "Discrete-event simulator of a mobile split interface over shared optical access"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its CSV outputs.
    Run {
        #[arg(value_enum)]
        experiment: Experiment,
        /// Scenario file. Defaults to the built-in scenario for the
        /// chosen experiment.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory, overriding out_dir from the scenario.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse a scenario file, report problems, and print effective values.
    Validate { config: PathBuf },
    /// Run one optical uplink scenario with allocator tracing on and dump
    /// every per-cycle grant decision.
    GrantsLog {
        /// Scenario file; defaults to the built-in convergence scenario.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Experiment {
    /// Downlink delivery-failure ratio across (rate, jitter) cells.
    PerSweep,
    /// Uplink throughput convergence, optical vs direct cable.
    Convergence,
    /// Round-trip latency, optical vs direct cable.
    Rtt,
    /// All of the above, each with its own built-in scenario.
    All,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            experiment,
            config,
            out,
        } => run_experiments(experiment, config.as_deref(), out.as_deref()),
        Command::Validate { config } => validate(&config),
        Command::GrantsLog { config, out } => grants_log(config.as_deref(), out.as_deref()),
    }
}

fn load(config: Option<&Path>, builtin: &str) -> Result<ScenarioConfig, ExitCode> {
    let parsed = match config {
        Some(path) => ScenarioConfig::load(path),
        None => ScenarioConfig::parse_str(builtin),
    };
    parsed.map_err(|err| {
        report_config_error(&err);
        ExitCode::from(EXIT_CONFIG)
    })
}

fn report_config_error(err: &ConfigError) {
    match err {
        ConfigError::Io { .. } => eprintln!("error: {err}"),
        ConfigError::Invalid(msgs) => {
            eprintln!("error: invalid scenario:");
            for msg in msgs {
                eprintln!("  {msg}");
            }
        }
    }
}

fn out_dir(cfg: &ScenarioConfig, out: Option<&Path>) -> PathBuf {
    out.map_or_else(|| PathBuf::from(&cfg.out_dir), Path::to_path_buf)
}

fn run_experiments(
    experiment: Experiment,
    config: Option<&Path>,
    out: Option<&Path>,
) -> ExitCode {
    let mut worst = ExitCode::SUCCESS;
    let chosen: &[Experiment] = match experiment {
        Experiment::All => &[Experiment::PerSweep, Experiment::Convergence, Experiment::Rtt],
        _ => std::slice::from_ref(&experiment),
    };
    for &exp in chosen {
        let code = match exp {
            Experiment::PerSweep => run_per_sweep(config, out),
            Experiment::Convergence => run_convergence(config, out),
            Experiment::Rtt => run_rtt(config, out),
            Experiment::All => unreachable!("expanded above"),
        };
        if code != ExitCode::SUCCESS {
            worst = code;
            if code == ExitCode::from(EXIT_CONFIG) || code == ExitCode::from(EXIT_AUDIT) {
                return code;
            }
        }
    }
    worst
}

fn run_per_sweep(config: Option<&Path>, out: Option<&Path>) -> ExitCode {
    let cfg = match load(config, PER_SWEEP_CFG) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    let dir = out_dir(&cfg, out);
    println!("delivery-failure sweep: scenario {}", cfg.hash());
    let report = match per_sweep::run(&cfg) {
        Ok(report) => report,
        Err(audit) => {
            eprintln!("error: {audit}");
            return ExitCode::from(EXIT_AUDIT);
        }
    };
    for cell in &report.cells {
        println!(
            "  rate {:>4} Mb/s  sigma {:>4} us  sent {:>8}  failed {:>7}  ratio {:.3e}",
            cell.rate_bps / 1_000_000,
            cell.sigma_ns / 1_000,
            cell.sent,
            cell.sent - cell.delivered,
            cell.per
        );
    }
    write_or_fail(report.write(&dir), &dir)
}

fn run_convergence(config: Option<&Path>, out: Option<&Path>) -> ExitCode {
    let cfg = match load(config, CONVERGENCE_CFG) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    let dir = out_dir(&cfg, out);
    println!("throughput convergence: scenario {}", cfg.hash());
    let report = match convergence::run(&cfg) {
        Ok(report) => report,
        Err(audit) => {
            eprintln!("error: {audit}");
            return ExitCode::from(EXIT_AUDIT);
        }
    };
    let mut all_converged = true;
    for run in &report.runs {
        let t95 = match run.t95_ns {
            Some(t) => format!("{:.1} ms", t as f64 / 1e6),
            None => {
                all_converged = false;
                "never".to_string()
            }
        };
        println!(
            "  {:>3} at {:>4} Mb/s: 95% sustained after {t95}, steady {:.2} Mb/s",
            mode_label(run.mode),
            run.rate_bps / 1_000_000,
            run.steady_mean_bps as f64 / 1e6
        );
    }
    let code = write_or_fail(report.write(&dir), &dir);
    if code != ExitCode::SUCCESS {
        return code;
    }
    if all_converged {
        ExitCode::SUCCESS
    } else {
        eprintln!("error: at least one run never sustained its target rate");
        ExitCode::from(EXIT_NOT_CONVERGED)
    }
}

fn run_rtt(config: Option<&Path>, out: Option<&Path>) -> ExitCode {
    let cfg = match load(config, RTT_CFG) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    let dir = out_dir(&cfg, out);
    println!("round-trip latency: scenario {}", cfg.hash());
    let report = match rtt::run(&cfg) {
        Ok(report) => report,
        Err(audit) => {
            eprintln!("error: {audit}");
            return ExitCode::from(EXIT_AUDIT);
        }
    };
    for run in &report.runs {
        match &run.summary {
            Some(s) => println!(
                "  {:>3}: {}/{} probes, {s}",
                mode_label(run.mode),
                run.completed,
                run.sent
            ),
            None => println!(
                "  {:>3}: {}/{} probes, no round trips completed",
                mode_label(run.mode),
                run.completed,
                run.sent
            ),
        }
    }
    write_or_fail(report.write(&dir), &dir)
}

fn write_or_fail(result: std::io::Result<()>, dir: &Path) -> ExitCode {
    match result {
        Ok(()) => {
            println!("  wrote {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: cannot write results to {}: {e}", dir.display());
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn validate(config: &Path) -> ExitCode {
    match ScenarioConfig::load(config) {
        Ok(cfg) => {
            println!("{}", cfg.canonical());
            println!("hash = {}", cfg.hash());
            ExitCode::SUCCESS
        }
        Err(err) => {
            report_config_error(&err);
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn grants_log(config: Option<&Path>, out: Option<&Path>) -> ExitCode {
    let mut cfg = match load(config, CONVERGENCE_CFG) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    cfg.mode = Mode::Pon;
    cfg.mobile_dir = MobileDirection::Uplink;
    let dir = out_dir(&cfg, out);

    let mut world = Testbed::new(cfg);
    if let Some(up) = world.upstream.as_mut() {
        up.grant_log = Some(Vec::new());
    }
    let world = Testbed::launch(world);
    let ledger = world.ledger("grants-log");
    if !ledger.balances() {
        eprintln!("error: conservation audit failed:\n{}", ledger.report());
        return ExitCode::from(EXIT_AUDIT);
    }

    let rows: Vec<String> = world
        .upstream
        .as_ref()
        .and_then(|up| up.grant_log.as_ref())
        .map(|log| {
            log.iter()
                .map(|r| {
                    format!(
                        "{},{},{},{},{:.1},{},{},{},{}",
                        r.cycle,
                        r.cycle_start.as_ns(),
                        r.tcont.0,
                        r.reported_bytes,
                        r.smoothed_bytes,
                        r.granted_bytes,
                        r.served_bytes,
                        r.served_packets,
                        r.queue_bytes_after
                    )
                })
                .collect()
        })
        .unwrap_or_default();
    match output::write_csv(
        &dir,
        "grants.csv",
        "cycle,cycle_start_ns,tcont,reported_bytes,smoothed_bytes,granted_bytes,served_bytes,served_packets,queue_bytes_after",
        &rows,
    ) {
        Ok(path) => {
            println!("wrote {} rows to {}", rows.len(), path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: cannot write grant log: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
