//! Receive-side packet processing: an in-order delivery buffer with a
//! playout deadline.
//!
//! The receiver consumes packets strictly in sequence order. An arrival that
//! opens a gap is held until the gap fills, the hold exceeds the playout
//! deadline, or the buffer overflows. When a held packet is released past a
//! gap, the skipped sequence numbers are declared lost; if such a packet
//! shows up afterwards it is classified late and discarded, because its
//! playout instant has already gone by.
//!
//! Every sent packet therefore ends in exactly one terminal state: delivered
//! on time, late, dropped at some queue along the path, or still in flight.
//! The gap counter here is a receiver-side inference, not a terminal state,
//! and is kept for diagnostics only.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;

use crate::sim::{sample_exp_secs, secs_to_ns, SimTime};

/// Host protocol stack on the sending side of a NIC: a fixed processing
/// time plus exponentially distributed scheduling jitter. The stack hands
/// packets to the wire in arrival order, so a slow packet delays its
/// successors rather than being overtaken by them.
pub struct HostStack {
    pub proc_ns: u64,
    pub jitter_mean_ns: u64,
    rng: ChaCha8Rng,
    last_departure: SimTime,
    pub processed: u64,
}

impl HostStack {
    pub fn new(proc_ns: u64, jitter_mean_ns: u64, rng: ChaCha8Rng) -> Self {
        HostStack {
            proc_ns,
            jitter_mean_ns,
            rng,
            last_departure: SimTime::ZERO,
            processed: 0,
        }
    }

    /// When a packet arriving now leaves the stack.
    pub fn depart_at(&mut self, arrival: SimTime) -> SimTime {
        self.processed += 1;
        let jitter_s = sample_exp_secs(&mut self.rng, self.jitter_mean_ns as f64 * 1e-9);
        let own = arrival + self.proc_ns + secs_to_ns(jitter_s);
        let departure = own.max(self.last_departure);
        self.last_departure = departure;
        departure
    }
}

#[derive(Debug)]
pub struct ReorderBuffer {
    /// How long an out-of-order packet may wait for its gap to fill.
    pub deadline_ns: u64,
    /// Most packets the buffer will hold before forcing the oldest gap.
    pub capacity: usize,
    next_expected: u64,
    held: BTreeMap<u64, SimTime>,
    /// Packets delivered in order and on time.
    pub accepted: u64,
    /// Packets that arrived after their sequence number was skipped.
    pub late: u64,
    /// Sequence numbers skipped over (missing at release time).
    pub gap_skipped: u64,
    /// Times the capacity bound forced a gap closed early.
    pub forced_flushes: u64,
}

impl ReorderBuffer {
    pub fn new(deadline_ns: u64, capacity: usize) -> Self {
        assert!(capacity > 0);
        ReorderBuffer {
            deadline_ns,
            capacity,
            next_expected: 0,
            held: BTreeMap::new(),
            accepted: 0,
            late: 0,
            gap_skipped: 0,
            forced_flushes: 0,
        }
    }

    pub fn in_buffer(&self) -> usize {
        self.held.len()
    }

    pub fn next_expected(&self) -> u64 {
        self.next_expected
    }

    /// Earliest instant at which a held packet's deadline expires, if any.
    /// The driver schedules a timer for this; stale timers are harmless
    /// because `on_timer` releases only what is actually due.
    pub fn next_due(&self) -> Option<SimTime> {
        self.held
            .values()
            .map(|&arrived| arrived + self.deadline_ns)
            .min()
    }

    /// Handle an arrival. Returns the sequence numbers released to the
    /// application, in order. An empty result means the packet was held,
    /// or was late and discarded.
    pub fn on_arrival(&mut self, seq: u64, now: SimTime) -> Vec<u64> {
        if seq < self.next_expected || self.held.contains_key(&seq) {
            self.late += 1;
            return Vec::new();
        }
        if seq == self.next_expected {
            let mut released = vec![seq];
            self.accepted += 1;
            self.next_expected += 1;
            self.drain_consecutive(&mut released);
            return released;
        }
        // Out of order: hold it, forcing the oldest gap closed first if the
        // buffer is full.
        let mut released = Vec::new();
        if self.held.len() == self.capacity {
            self.forced_flushes += 1;
            self.release_lowest_held(&mut released);
        }
        self.held.insert(seq, now);
        released
    }

    /// Release everything whose playout deadline has passed. A packet that
    /// overtook others can be due while lower sequence numbers are not, and
    /// in-order delivery means releasing it flushes everything held below
    /// it as well, skipping whatever gaps remain.
    pub fn on_timer(&mut self, now: SimTime) -> Vec<u64> {
        let mut released = Vec::new();
        let expired = self
            .held
            .iter()
            .filter(|&(_, &arrived)| arrived + self.deadline_ns <= now)
            .map(|(&seq, _)| seq)
            .max();
        if let Some(expired) = expired {
            while self.held.contains_key(&expired) {
                self.release_lowest_held(&mut released);
            }
        }
        released
    }

    /// Skip to the lowest held sequence number, declaring everything before
    /// it lost, then release it and any consecutive run behind it.
    fn release_lowest_held(&mut self, released: &mut Vec<u64>) {
        let (&lowest, _) = self.held.iter().next().expect("no held packets");
        self.gap_skipped += lowest - self.next_expected;
        self.next_expected = lowest;
        self.held.remove(&lowest);
        released.push(lowest);
        self.accepted += 1;
        self.next_expected += 1;
        self.drain_consecutive(released);
    }

    fn drain_consecutive(&mut self, released: &mut Vec<u64>) {
        while self.held.remove(&self.next_expected).is_some() {
            released.push(self.next_expected);
            self.accepted += 1;
            self.next_expected += 1;
        }
    }
}
