//! Downlink delivery-failure sweep: for each (bit rate, jitter sigma) pair,
//! run the optical downlink until enough packets have crossed to resolve
//! small failure ratios, then report the fraction that did not arrive in
//! order and on time.
//!
//! Every cell gets its own seed derived from the master seed, so cells are
//! statistically independent but the whole sweep is reproducible from one
//! number. Cells run in parallel; results are ordered sigma-major, then by
//! rate, regardless of which finished first.

use std::path::Path;

use rayon::prelude::*;

use crate::config::{MobileDirection, ScenarioConfig};
use crate::experiments::{cell_seed, output, AuditError, Testbed};

#[derive(Clone, Debug)]
pub struct SweepCell {
    pub rate_bps: u64,
    pub sigma_ns: u64,
    pub seed: u64,
    pub sent: u64,
    pub delivered: u64,
    pub late: u64,
    pub dropped: u64,
    pub still_queued: u64,
    /// Fraction of sent packets that never reached the application in
    /// order and on time.
    pub per: f64,
    pub ledger_report: String,
}

#[derive(Debug)]
pub struct SweepReport {
    pub cells: Vec<SweepCell>,
}

pub fn run(base: &ScenarioConfig) -> Result<SweepReport, AuditError> {
    let rates = if base.sweep_rates_bps.is_empty() {
        vec![base.mobile_rate_bps]
    } else {
        base.sweep_rates_bps.clone()
    };
    let sigmas = if base.sweep_sigmas_ns.is_empty() {
        vec![base.degrade_sigma_ns]
    } else {
        base.sweep_sigmas_ns.clone()
    };

    let mut cell_cfgs = Vec::with_capacity(rates.len() * sigmas.len());
    for &sigma_ns in &sigmas {
        for &rate_bps in &rates {
            let mut cfg = base.clone();
            cfg.mobile_dir = MobileDirection::Downlink;
            cfg.mobile_rate_bps = rate_bps;
            cfg.degrade_sigma_ns = sigma_ns;
            cfg.seed = cell_seed(base.seed, cell_cfgs.len() as u64);
            cell_cfgs.push(cfg);
        }
    }

    let results: Vec<Result<SweepCell, AuditError>> =
        cell_cfgs.into_par_iter().map(run_cell).collect();
    let mut cells = Vec::with_capacity(results.len());
    for result in results {
        cells.push(result?);
    }
    Ok(SweepReport { cells })
}

fn run_cell(cfg: ScenarioConfig) -> Result<SweepCell, AuditError> {
    let (rate_bps, sigma_ns, seed) = (cfg.mobile_rate_bps, cfg.degrade_sigma_ns, cfg.seed);
    let world = Testbed::run(cfg);
    let ledger = world.ledger(&format!("sweep rate={rate_bps} sigma={sigma_ns}"));
    if !ledger.balances() {
        return Err(AuditError(ledger.report()));
    }

    let sent = world.mobile_src.as_ref().map_or(0, |s| s.emitted);
    let delivered = world.du_reorder.accepted;
    debug_assert!(delivered <= sent);
    let per = if sent == 0 {
        0.0
    } else {
        (sent - delivered) as f64 / sent as f64
    };
    Ok(SweepCell {
        rate_bps,
        sigma_ns,
        seed,
        sent,
        delivered,
        late: world.du_reorder.late,
        dropped: ledger.total_dropped(),
        still_queued: ledger.still_queued,
        per,
        ledger_report: ledger.report(),
    })
}

impl SweepReport {
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let rows: Vec<String> = self
            .cells
            .iter()
            .map(|c| {
                format!(
                    "{},{},{},{},{},{},{},{},{:.9}",
                    c.rate_bps,
                    c.sigma_ns,
                    c.seed,
                    c.sent,
                    c.delivered,
                    c.late,
                    c.dropped,
                    c.still_queued,
                    c.per
                )
            })
            .collect();
        output::write_csv(
            dir,
            "per_sweep.csv",
            "rate_bps,sigma_ns,seed,sent,delivered,late,dropped,still_queued,per",
            &rows,
        )?;
        let audits: Vec<&str> = self.cells.iter().map(|c| c.ledger_report.as_str()).collect();
        output::write_text(dir, "per_sweep_conservation.txt", &audits.join("\n"))?;
        Ok(())
    }
}
