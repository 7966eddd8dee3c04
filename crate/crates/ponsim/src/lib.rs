//! Deterministic discrete-event simulator of a mobile fronthaul/backhaul
//! split carried over a shared passive optical network.
//!
//! The crate models the full path between a radio-side host and a
//! central-side host: constant-bit-rate sources, an XGS-PON access segment
//! with status-reporting dynamic bandwidth allocation upstream, an emulated
//! aggregation network that injects delay jitter, and receive-side packet
//! processing with a playout deadline. Everything runs on an integer
//! nanosecond clock, and every random draw comes from a seeded, per-entity
//! stream, so identical configurations produce byte-identical outputs.

pub mod config;
pub mod degrade;
pub mod endpoints;
pub mod experiments;
pub mod link;
pub mod metrics;
pub mod pon;
pub mod sim;
pub mod traffic;
