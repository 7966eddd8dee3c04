//! Round-trip latency study: periodic probes from the central host to the
//! radio-side host and back, over the optical path and over a direct cable,
//! with a steady uplink flow as background load. The probe period should
//! not divide the allocation cycle evenly, otherwise every probe samples
//! the same grant phase and the spread collapses.

use std::path::Path;

use rayon::prelude::*;

use crate::config::{Mode, ScenarioConfig};
use crate::experiments::{mode_label, output, AuditError, Testbed};
use crate::metrics::RttSummary;

#[derive(Clone, Debug)]
pub struct RttRun {
    pub mode: Mode,
    pub sent: u64,
    pub completed: u64,
    pub rtts_ns: Vec<u64>,
    pub summary: Option<RttSummary>,
    pub ledger_report: String,
}

#[derive(Debug)]
pub struct RttReport {
    /// Optical first, then back-to-back.
    pub runs: Vec<RttRun>,
}

pub fn run(base: &ScenarioConfig) -> Result<RttReport, AuditError> {
    let cfgs: Vec<ScenarioConfig> = [Mode::Pon, Mode::BackToBack]
        .into_iter()
        .map(|mode| {
            let mut cfg = base.clone();
            cfg.mode = mode;
            cfg
        })
        .collect();

    let results: Vec<Result<RttRun, AuditError>> = cfgs.into_par_iter().map(run_one).collect();
    let mut runs = Vec::with_capacity(results.len());
    for result in results {
        runs.push(result?);
    }
    Ok(RttReport { runs })
}

fn run_one(cfg: ScenarioConfig) -> Result<RttRun, AuditError> {
    let mode = cfg.mode;
    let world = Testbed::run(cfg);
    let ledger = world.ledger(&format!("rtt mode={}", mode_label(mode)));
    if !ledger.balances() {
        return Err(AuditError(ledger.report()));
    }

    let rtts_ns = world.probe_book.rtts_ns();
    Ok(RttRun {
        mode,
        sent: world.probe_book.sent(),
        completed: world.probe_book.completed(),
        summary: RttSummary::from_samples(&rtts_ns),
        rtts_ns,
        ledger_report: ledger.report(),
    })
}

impl RttReport {
    pub fn run_for(&self, mode: Mode) -> Option<&RttRun> {
        self.runs.iter().find(|r| r.mode == mode)
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let mut sample_rows = Vec::new();
        let mut summary_rows = Vec::new();
        for run in &self.runs {
            let label = mode_label(run.mode);
            for (idx, rtt) in run.rtts_ns.iter().enumerate() {
                sample_rows.push(format!("{label},{idx},{rtt}"));
            }
            match &run.summary {
                Some(s) => summary_rows.push(format!(
                    "{label},{},{},{},{:.3},{},{:.3}",
                    run.sent, run.completed, s.min_ns, s.avg_ns, s.max_ns, s.std_ns
                )),
                None => summary_rows.push(format!("{label},{},{},,,,", run.sent, run.completed)),
            }
        }
        output::write_csv(dir, "rtt_samples.csv", "mode,idx,rtt_ns", &sample_rows)?;
        output::write_csv(
            dir,
            "rtt_summary.csv",
            "mode,sent,completed,min_ns,avg_ns,max_ns,std_ns",
            &summary_rows,
        )?;
        let audits: Vec<&str> = self.runs.iter().map(|r| r.ledger_report.as_str()).collect();
        output::write_text(dir, "rtt_conservation.txt", &audits.join("\n"))?;
        Ok(())
    }
}
