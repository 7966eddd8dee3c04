//! Uplink throughput convergence: how long a rate-controlled uplink flow
//! takes to reach and hold 95% of its configured rate, measured at the
//! receiving application, with the optical grant machinery in the path
//! versus a direct cable. The optical runs carry the configured overload
//! load on a second upstream queue so the allocator has real contention
//! to arbitrate.

use std::path::Path;

use rayon::prelude::*;

use crate::config::{MobileDirection, Mode, ScenarioConfig};
use crate::experiments::{mode_label, output, AuditError, Testbed};
use crate::metrics::time_to_sustained;
use crate::sim::SimTime;

/// The flow counts as converged once a delivery window holds this share of
/// the configured rate.
pub const SUSTAIN_RATIO: f64 = 0.95;

/// Steady-state throughput is averaged over this much of the tail of the
/// emission span.
pub const STEADY_TAIL_NS: u64 = 500_000_000;

#[derive(Clone, Debug)]
pub struct ConvergenceRun {
    pub mode: Mode,
    pub rate_bps: u64,
    /// (window start ns, delivered bits/s) over the emission span.
    pub windows: Vec<(u64, u64)>,
    /// First instant from which every window sustains the threshold for
    /// the configured hold; `None` means the flow never converged.
    pub t95_ns: Option<u64>,
    pub steady_mean_bps: u64,
    pub ledger_report: String,
}

#[derive(Debug)]
pub struct ConvergenceReport {
    pub runs: Vec<ConvergenceRun>,
}

pub fn run(base: &ScenarioConfig) -> Result<ConvergenceReport, AuditError> {
    let rates = if base.sweep_rates_bps.is_empty() {
        vec![base.mobile_rate_bps]
    } else {
        base.sweep_rates_bps.clone()
    };

    let mut cfgs = Vec::with_capacity(2 * rates.len());
    for mode in [Mode::Pon, Mode::BackToBack] {
        for &rate_bps in &rates {
            let mut cfg = base.clone();
            cfg.mode = mode;
            cfg.mobile_dir = MobileDirection::Uplink;
            cfg.mobile_rate_bps = rate_bps;
            cfgs.push(cfg);
        }
    }

    let results: Vec<Result<ConvergenceRun, AuditError>> =
        cfgs.into_par_iter().map(run_one).collect();
    let mut runs = Vec::with_capacity(results.len());
    for result in results {
        runs.push(result?);
    }
    Ok(ConvergenceReport { runs })
}

fn run_one(cfg: ScenarioConfig) -> Result<ConvergenceRun, AuditError> {
    let (mode, rate_bps) = (cfg.mode, cfg.mobile_rate_bps);
    let (window_ns, step_ns, hold_ns) = (cfg.window_ns, cfg.step_ns, cfg.hold_ns);
    let world = Testbed::run(cfg);
    let ledger = world.ledger(&format!(
        "convergence mode={} rate={rate_bps}",
        mode_label(mode)
    ));
    if !ledger.balances() {
        return Err(AuditError(ledger.report()));
    }
    if let Some(up) = &world.upstream {
        if up.capacity_violations > 0 {
            return Err(AuditError(format!(
                "allocator exceeded cycle capacity {} times",
                up.capacity_violations
            )));
        }
    }

    let stop = world.emission_stop();
    let windows = world.ul_log.windowed_bps(window_ns, step_ns, stop.as_ns());
    let threshold_bps = (rate_bps as f64 * SUSTAIN_RATIO) as u64;
    let t95_ns = time_to_sustained(&windows, threshold_bps, hold_ns);
    let steady_from = SimTime::from_ns(stop.as_ns().saturating_sub(STEADY_TAIL_NS));
    let steady_mean_bps = world.ul_log.mean_bps(steady_from, stop);

    Ok(ConvergenceRun {
        mode,
        rate_bps,
        windows,
        t95_ns,
        steady_mean_bps,
        ledger_report: ledger.report(),
    })
}

impl ConvergenceReport {
    /// Runs for one transport mode, in configured rate order.
    pub fn runs_for(&self, mode: Mode) -> Vec<&ConvergenceRun> {
        self.runs.iter().filter(|r| r.mode == mode).collect()
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let mut window_rows = Vec::new();
        let mut summary_rows = Vec::new();
        for run in &self.runs {
            let label = mode_label(run.mode);
            for &(start_ns, bps) in &run.windows {
                window_rows.push(format!("{label},{},{start_ns},{bps}", run.rate_bps));
            }
            let t95 = run
                .t95_ns
                .map_or(String::new(), |t| t.to_string());
            summary_rows.push(format!(
                "{label},{},{t95},{}",
                run.rate_bps, run.steady_mean_bps
            ));
        }
        output::write_csv(
            dir,
            "convergence_windows.csv",
            "mode,rate_bps,window_start_ns,bps",
            &window_rows,
        )?;
        output::write_csv(
            dir,
            "convergence_summary.csv",
            "mode,rate_bps,t95_ns,steady_mean_bps",
            &summary_rows,
        )?;
        let audits: Vec<&str> = self.runs.iter().map(|r| r.ledger_report.as_str()).collect();
        output::write_text(dir, "convergence_conservation.txt", &audits.join("\n"))?;
        Ok(())
    }
}
