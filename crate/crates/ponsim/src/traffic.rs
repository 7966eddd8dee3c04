//! Traffic sources and flow identity.
//!
//! Constant-bit-rate sources emit at arithmetically exact instants so two
//! runs of the same cell produce the same packet train to the nanosecond.
//! An optional linear ramp models the startup of a rate-controlled sender
//! that takes time to reach its configured rate.

use crate::sim::SimTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FlowId {
    /// The mobile split-interface flow under test.
    MobileV1,
    /// Background load sharing the access segment.
    Overload,
    /// Round-trip probe traffic.
    Probe,
}

impl FlowId {
    pub fn label(self) -> &'static str {
        match self {
            FlowId::MobileV1 => "mobile",
            FlowId::Overload => "overload",
            FlowId::Probe => "probe",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Packet {
    pub flow: FlowId,
    pub seq: u64,
    pub size_bytes: u32,
    pub sent_at: SimTime,
    pub vlan: Option<u16>,
}

impl Packet {
    pub fn new(flow: FlowId, seq: u64, size_bytes: u32, sent_at: SimTime) -> Self {
        assert!(size_bytes > 0, "zero-size packet");
        Packet {
            flow,
            seq,
            size_bytes,
            sent_at,
            vlan: None,
        }
    }

    pub fn size_u64(&self) -> u64 {
        self.size_bytes as u64
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CbrProfile {
    pub rate_bps: u64,
    pub packet_bytes: u32,
    pub start_at: SimTime,
    /// 0 means a step start; otherwise the send rate climbs linearly from
    /// zero to `rate_bps` over this interval.
    pub ramp_ns: u64,
}

impl CbrProfile {
    pub fn new(rate_bps: u64, packet_bytes: u32, start_at: SimTime, ramp_ns: u64) -> Self {
        assert!(rate_bps > 0, "CBR source needs a positive rate");
        assert!(packet_bytes > 0);
        CbrProfile {
            rate_bps,
            packet_bytes,
            start_at,
            ramp_ns,
        }
    }

    /// Steady-state inter-departure gap: floor(size * 8e9 / rate) ns.
    pub fn interval_ns(&self) -> u64 {
        let bits = self.packet_bytes as u128 * 8;
        ((bits * 1_000_000_000) / self.rate_bps as u128) as u64
    }

    /// Departure instant of packet `k` (0-based). During the ramp the k-th
    /// packet leaves once the ramped rate has accumulated k+1 packets worth
    /// of bits; afterwards departures fall back to the exact steady gap.
    pub fn departure_at(&self, k: u64) -> SimTime {
        if self.ramp_ns == 0 {
            return self.start_at + k * self.interval_ns();
        }
        let bits_per_packet = self.packet_bytes as f64 * 8.0;
        let rate = self.rate_bps as f64;
        let ramp_s = self.ramp_ns as f64 / 1e9;
        let ramp_bits = rate * ramp_s / 2.0;
        let need = (k + 1) as f64 * bits_per_packet;
        let t_s = if need <= ramp_bits {
            (2.0 * ramp_s * need / rate).sqrt()
        } else {
            ramp_s + (need - ramp_bits) / rate
        };
        self.start_at + (t_s * 1e9).round() as u64
    }
}

/// Emission bookkeeping for one CBR flow.
#[derive(Debug)]
pub struct CbrSource {
    pub profile: CbrProfile,
    pub flow: FlowId,
    pub emitted: u64,
    /// Stop after this many packets; `None` runs until the horizon ends.
    pub packet_limit: Option<u64>,
}

impl CbrSource {
    pub fn new(flow: FlowId, profile: CbrProfile, packet_limit: Option<u64>) -> Self {
        CbrSource {
            profile,
            flow,
            emitted: 0,
            packet_limit,
        }
    }

    pub fn first_departure(&self) -> SimTime {
        self.profile.departure_at(0)
    }

    /// Mint the next packet, or `None` once the limit is reached. The
    /// returned instant is where the packet enters the network.
    pub fn emit(&mut self) -> Option<(SimTime, Packet)> {
        if let Some(limit) = self.packet_limit {
            if self.emitted >= limit {
                return None;
            }
        }
        let k = self.emitted;
        let at = self.profile.departure_at(k);
        self.emitted += 1;
        Some((at, Packet::new(self.flow, k, self.profile.packet_bytes, at)))
    }

    pub fn next_departure(&self) -> Option<SimTime> {
        if let Some(limit) = self.packet_limit {
            if self.emitted >= limit {
                return None;
            }
        }
        Some(self.profile.departure_at(self.emitted))
    }
}

/// Round-trip bookkeeping for probe packets, matched by sequence number.
#[derive(Debug, Default)]
pub struct ProbeBook {
    sent_at: Vec<SimTime>,
    echoed_at: Vec<Option<SimTime>>,
    pub unmatched_echoes: u64,
}

impl ProbeBook {
    pub fn record_sent(&mut self, seq: u64, at: SimTime) {
        assert_eq!(seq as usize, self.sent_at.len(), "probe seqs must be dense");
        self.sent_at.push(at);
        self.echoed_at.push(None);
    }

    pub fn record_echo(&mut self, seq: u64, at: SimTime) {
        match self.echoed_at.get_mut(seq as usize) {
            Some(slot @ None) => *slot = Some(at),
            _ => self.unmatched_echoes += 1,
        }
    }

    pub fn sent(&self) -> u64 {
        self.sent_at.len() as u64
    }

    pub fn completed(&self) -> u64 {
        self.echoed_at.iter().filter(|e| e.is_some()).count() as u64
    }

    /// Round-trip times in nanoseconds for completed probes.
    pub fn rtts_ns(&self) -> Vec<u64> {
        self.sent_at
            .iter()
            .zip(&self.echoed_at)
            .filter_map(|(s, e)| e.map(|e| e.since(*s)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steady_intervals_match_hand_values() {
        // 1200 B at 100 Mb/s -> 96 us; at 150 Mb/s -> 64 us.
        let p100 = CbrProfile::new(100_000_000, 1200, SimTime::ZERO, 0);
        let p150 = CbrProfile::new(150_000_000, 1200, SimTime::ZERO, 0);
        assert_eq!(p100.interval_ns(), 96_000);
        assert_eq!(p150.interval_ns(), 64_000);
        // 1500 B at 8.5 Gb/s -> 1411 ns (floor of 1411.76).
        let pov = CbrProfile::new(8_500_000_000, 1500, SimTime::ZERO, 0);
        assert_eq!(pov.interval_ns(), 1411);
    }

    #[test]
    fn departures_are_exact_multiples_without_ramp() {
        let p = CbrProfile::new(100_000_000, 1200, SimTime::from_ms(3), 0);
        assert_eq!(p.departure_at(0), SimTime::from_ms(3));
        assert_eq!(p.departure_at(10).since(SimTime::from_ms(3)), 960_000);
    }

    #[test]
    fn ramp_emits_slower_then_converges_to_steady_gap() {
        let p = CbrProfile::new(150_000_000, 1200, SimTime::ZERO, 60_000_000);
        // First gap during the ramp is much wider than the steady 64 us.
        let t0 = p.departure_at(0).as_ns();
        let t1 = p.departure_at(1).as_ns();
        assert!(t0 > 64_000, "first ramp departure at {t0}");
        assert!(t1 - t0 < t0, "gaps must shrink during the ramp");
        // Total bits emitted by the end of the ramp equal rate * ramp / 2.
        let ramp_packets = (150_000_000u64 * 60 / 1000 / 2) / (1200 * 8);
        let after = p.departure_at(ramp_packets + 100).as_ns();
        let after_next = p.departure_at(ramp_packets + 101).as_ns();
        assert_eq!(after_next - after, 64_000);
        // Departures stay strictly increasing across the ramp boundary.
        let mut prev = 0;
        for k in 0..ramp_packets + 10 {
            let t = p.departure_at(k).as_ns();
            assert!(t > prev, "k={k}");
            prev = t;
        }
    }

    #[test]
    fn source_respects_packet_limit() {
        let p = CbrProfile::new(100_000_000, 1200, SimTime::ZERO, 0);
        let mut src = CbrSource::new(FlowId::MobileV1, p, Some(2));
        assert!(src.emit().is_some());
        assert!(src.emit().is_some());
        assert!(src.emit().is_none());
        assert!(src.next_departure().is_none());
    }

    #[test]
    fn probe_book_matches_and_flags_strays() {
        let mut book = ProbeBook::default();
        book.record_sent(0, SimTime::ZERO);
        book.record_sent(1, SimTime::from_ms(10));
        book.record_echo(0, SimTime::from_us(400));
        book.record_echo(0, SimTime::from_us(500)); // duplicate
        book.record_echo(7, SimTime::from_us(600)); // never sent
        assert_eq!(book.completed(), 1);
        assert_eq!(book.unmatched_echoes, 2);
        assert_eq!(book.rtts_ns(), vec![400_000]);
    }
}
