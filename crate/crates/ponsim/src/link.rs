//! Store-and-forward FIFO links.
//!
//! A `FifoLink` models one output port: a finite byte buffer drained at a
//! fixed line rate. It tracks when the serializer frees up instead of
//! holding a packet queue, so offering a packet is O(1); the caller owns
//! the packet and schedules its downstream arrival at the returned instant.

use crate::sim::{serialization_ns, SimTime};

#[derive(Debug)]
pub struct FifoLink {
    rate_bps: u64,
    capacity_bytes: u64,
    queued_bytes: u64,
    queued_packets: u64,
    serializer_free_at: SimTime,
    pub drops: u64,
    pub forwarded: u64,
}

/// Outcome of offering a packet to the link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Offer {
    /// Last bit leaves the port at this instant.
    Departs(SimTime),
    /// Buffer full; the packet is gone.
    Dropped,
}

impl FifoLink {
    pub fn new(rate_bps: u64, capacity_bytes: u64) -> Self {
        assert!(rate_bps > 0, "link needs a positive rate");
        FifoLink {
            rate_bps,
            capacity_bytes,
            queued_bytes: 0,
            queued_packets: 0,
            serializer_free_at: SimTime::ZERO,
            drops: 0,
            forwarded: 0,
        }
    }

    pub fn queued_bytes(&self) -> u64 {
        self.queued_bytes
    }

    pub fn queued_packets(&self) -> u64 {
        self.queued_packets
    }

    /// Offer `size_bytes` at time `now`. On acceptance the caller must call
    /// [`departed`](Self::departed) when the returned instant is reached.
    pub fn offer(&mut self, now: SimTime, size_bytes: u64) -> Offer {
        assert!(size_bytes > 0);
        if self.queued_bytes + size_bytes > self.capacity_bytes {
            self.drops += 1;
            return Offer::Dropped;
        }
        let start = self.serializer_free_at.max(now);
        let done = start + serialization_ns(size_bytes, self.rate_bps);
        self.serializer_free_at = done;
        self.queued_bytes += size_bytes;
        self.queued_packets += 1;
        self.forwarded += 1;
        Offer::Departs(done)
    }

    pub fn departed(&mut self, size_bytes: u64) {
        debug_assert!(self.queued_bytes >= size_bytes && self.queued_packets > 0);
        self.queued_bytes -= size_bytes;
        self.queued_packets -= 1;
    }
}
