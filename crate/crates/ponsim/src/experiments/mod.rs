//! Scenario runners built on the testbed: the jitter/rate sweep, the
//! throughput convergence comparison, and the round-trip latency study.
//! Each runner produces a plain report struct; writing CSV files is a
//! separate step so tests can consume results without touching the disk.

pub mod convergence;
pub mod output;
pub mod per_sweep;
pub mod rtt;
pub mod topology;

use crate::config::Mode;

pub use topology::Testbed;

/// Derive the seed for sweep cell `idx` from the master seed. The odd
/// multiplier spreads consecutive indices across the seed space so cells
/// never share raw seed material.
pub fn cell_seed(master: u64, idx: u64) -> u64 {
    master.wrapping_add(idx.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn mode_label(mode: Mode) -> &'static str {
    match mode {
        Mode::Pon => "pon",
        Mode::BackToBack => "b2b",
    }
}

/// A scenario failed its end-of-run packet-conservation audit. This is
/// always a simulator bug, never a tolerable condition, so runners refuse
/// to emit results built on it.
#[derive(Debug, thiserror::Error)]
#[error("conservation audit failed:\n{0}")]
pub struct AuditError(pub String);
