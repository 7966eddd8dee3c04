//! Passive optical network model: a status-reporting bandwidth allocator,
//! per-T-CONT upstream queues, and the TDMA cycle machinery that ties them
//! together. The downstream direction needs no allocator and is modeled as
//! a plain serialization queue by the topology layer.

pub mod dba;
pub mod tcont;
pub mod upstream;

pub use dba::{
    assured_bytes_per_cycle, cycle_capacity_bytes, dba_allocate, water_fill, DbaState, GrantMap,
    OccupancyReport, TContProfile, TcontId,
};
pub use tcont::TContQueue;
pub use upstream::{GrantLogRow, Upstream, UpstreamDeparture};
