//! Per-T-CONT upstream queues.

use std::collections::VecDeque;

use crate::pon::dba::TContProfile;
use crate::traffic::Packet;

#[derive(Debug)]
pub struct TContQueue {
    pub profile: TContProfile,
    queue: VecDeque<Packet>,
    occupancy_bytes: u64,
    pub drops: u64,
    pub enqueued: u64,
}

impl TContQueue {
    pub fn new(profile: TContProfile) -> Self {
        TContQueue {
            profile,
            queue: VecDeque::new(),
            occupancy_bytes: 0,
            drops: 0,
            enqueued: 0,
        }
    }

    pub fn occupancy_bytes(&self) -> u64 {
        self.occupancy_bytes
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    /// Tail-drop enqueue against the configured byte capacity.
    pub fn offer(&mut self, packet: Packet) -> bool {
        if self.occupancy_bytes + packet.size_u64() > self.profile.queue_capacity_bytes {
            self.drops += 1;
            return false;
        }
        self.occupancy_bytes += packet.size_u64();
        self.enqueued += 1;
        self.queue.push_back(packet);
        true
    }

    /// Dequeue in FIFO order while the next whole packet fits in the grant.
    /// Packets are never fragmented; whatever the grant cannot cover stays
    /// queued, and the unused tail of the grant is forfeited.
    pub fn drain(&mut self, grant_bytes: u64) -> Vec<Packet> {
        let mut served = Vec::new();
        let mut used = 0u64;
        while let Some(head) = self.queue.front() {
            let next = used + head.size_u64();
            if next > grant_bytes {
                break;
            }
            used = next;
            let p = self.queue.pop_front().expect("front exists");
            self.occupancy_bytes -= p.size_u64();
            served.push(p);
        }
        served
    }

    pub fn drain_all(&mut self) -> Vec<Packet> {
        self.occupancy_bytes = 0;
        self.queue.drain(..).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pon::dba::{TContProfile, TcontId};
    use crate::sim::SimTime;
    use crate::traffic::FlowId;

    fn queue(cap: u64) -> TContQueue {
        TContQueue::new(TContProfile {
            id: TcontId(0),
            assured_bps: 150_000_000,
            max_bps: u64::MAX,
            queue_capacity_bytes: cap,
        })
    }

    fn pkt(seq: u64, size: u32) -> Packet {
        Packet::new(FlowId::MobileV1, seq, size, SimTime::ZERO)
    }

    #[test]
    fn grant_serves_whole_packets_only() {
        let mut q = queue(1_000_000);
        for s in 0..3 {
            assert!(q.offer(pkt(s, 1200)));
        }
        // 2500 B covers two 1200 B packets; the third stays queued and the
        // spare 100 B of grant is forfeited.
        let served = q.drain(2500);
        assert_eq!(served.len(), 2);
        assert_eq!(served[0].seq, 0);
        assert_eq!(served[1].seq, 1);
        assert_eq!(q.len(), 1);
        assert_eq!(q.occupancy_bytes(), 1200);
    }

    #[test]
    fn occupancy_tracks_offers_and_drains() {
        let mut q = queue(3000);
        assert!(q.offer(pkt(0, 1200)));
        assert!(q.offer(pkt(1, 1200)));
        assert_eq!(q.occupancy_bytes(), 2400);
        // 1200 + 1200 + 1200 exceeds 3000: tail drop.
        assert!(!q.offer(pkt(2, 1200)));
        assert_eq!(q.drops, 1);
        let served = q.drain(10_000);
        assert_eq!(served.len(), 2);
        assert_eq!(q.occupancy_bytes(), 0);
    }

    #[test]
    fn zero_grant_serves_nothing() {
        let mut q = queue(10_000);
        q.offer(pkt(0, 64));
        assert!(q.drain(0).is_empty());
        assert_eq!(q.len(), 1);
    }
}
