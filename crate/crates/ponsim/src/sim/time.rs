//! Integer-nanosecond simulation time.
//!
//! All timekeeping is integer nanoseconds so that runs are reproducible
//! bit-for-bit across platforms. Floating point appears only where a value
//! is sampled from a distribution or summarized for output, and those
//! values are rounded to nanoseconds before they touch the clock.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};

/// A point in simulated time, in nanoseconds since the start of the run.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_ns(ns: u64) -> Self {
        SimTime(ns)
    }

    pub const fn from_us(us: u64) -> Self {
        SimTime(us * 1_000)
    }

    pub const fn from_ms(ms: u64) -> Self {
        SimTime(ms * 1_000_000)
    }

    pub const fn from_secs(s: u64) -> Self {
        SimTime(s * 1_000_000_000)
    }

    pub const fn as_ns(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1e9
    }

    pub fn as_ms_f64(self) -> f64 {
        self.0 as f64 / 1e6
    }

    /// Elapsed nanoseconds since `earlier`. Panics if `earlier` is later
    /// than `self`; callers never measure backwards intervals.
    pub fn since(self, earlier: SimTime) -> u64 {
        self.0
            .checked_sub(earlier.0)
            .expect("interval end precedes start")
    }
}

impl Add<u64> for SimTime {
    type Output = SimTime;
    fn add(self, ns: u64) -> SimTime {
        SimTime(self.0 + ns)
    }
}

impl AddAssign<u64> for SimTime {
    fn add_assign(&mut self, ns: u64) {
        self.0 += ns;
    }
}

impl Sub<SimTime> for SimTime {
    type Output = u64;
    fn sub(self, rhs: SimTime) -> u64 {
        self.since(rhs)
    }
}

impl fmt::Debug for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ns", self.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 >= 1_000_000 {
            write!(f, "{:.3}ms", self.as_ms_f64())
        } else {
            write!(f, "{}ns", self.0)
        }
    }
}

/// Wire time of `bytes` at `rate_bps`, rounded to the nearest nanosecond.
pub fn serialization_ns(bytes: u64, rate_bps: u64) -> u64 {
    assert!(rate_bps > 0, "serialization on a zero-rate link");
    let num = (bytes as u128) * 8 * 1_000_000_000;
    let den = rate_bps as u128;
    ((num + den / 2) / den) as u64
}

/// One-way propagation through `length_km` of fibre with the given group
/// index, rounded to the nearest nanosecond.
pub fn propagation_ns(length_km: f64, group_index: f64) -> u64 {
    const C_M_PER_S: f64 = 2.9979e8;
    let seconds = length_km * 1e3 * group_index / C_M_PER_S;
    (seconds * 1e9).round() as u64
}
