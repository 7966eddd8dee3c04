//! Simulation plumbing: the clock, the event queue, and seeded randomness.

pub mod engine;
pub mod rng;
pub mod time;

pub use engine::Engine;
pub use rng::{sample_exp_secs, sample_normal_secs, secs_to_ns, RngHub, StreamId};
pub use time::{propagation_ns, serialization_ns, SimTime};
