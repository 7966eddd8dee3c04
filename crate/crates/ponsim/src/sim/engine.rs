//! Event queue and dispatch loop.
//!
//! Events are closures over a world type `W`; the engine owns the queue and
//! the clock, the world owns everything else, so a handler can freely borrow
//! both. Two events at the same instant dispatch in insertion order, which
//! keeps runs reproducible without any reliance on allocator or hash-map
//! ordering.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::time::SimTime;

type Action<W> = Box<dyn FnOnce(&mut W, &mut Engine<W>)>;

struct Scheduled<W> {
    at: SimTime,
    seq: u64,
    action: Action<W>,
}

impl<W> PartialEq for Scheduled<W> {
    fn eq(&self, other: &Self) -> bool {
        self.at == other.at && self.seq == other.seq
    }
}
impl<W> Eq for Scheduled<W> {}
impl<W> PartialOrd for Scheduled<W> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<W> Ord for Scheduled<W> {
    // Reversed so the BinaryHeap pops the earliest (then lowest-seq) event.
    fn cmp(&self, other: &Self) -> Ordering {
        (other.at, other.seq).cmp(&(self.at, self.seq))
    }
}

pub struct Engine<W> {
    now: SimTime,
    queue: BinaryHeap<Scheduled<W>>,
    next_seq: u64,
    dispatched: u64,
}

impl<W> Default for Engine<W> {
    fn default() -> Self {
        Self::new()
    }
}

impl<W> Engine<W> {
    pub fn new() -> Self {
        Engine {
            now: SimTime::ZERO,
            queue: BinaryHeap::new(),
            next_seq: 0,
            dispatched: 0,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn dispatched(&self) -> u64 {
        self.dispatched
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    /// Schedule `action` at absolute time `at`. Scheduling into the past is
    /// a programming error and aborts the run.
    pub fn schedule_at<F>(&mut self, at: SimTime, action: F)
    where
        F: FnOnce(&mut W, &mut Engine<W>) + 'static,
    {
        assert!(
            at >= self.now,
            "event scheduled into the past: {at:?} < {:?}",
            self.now
        );
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Scheduled {
            at,
            seq,
            action: Box::new(action),
        });
    }

    /// Schedule `action` after `delay_ns` relative to the current clock.
    pub fn schedule_in<F>(&mut self, delay_ns: u64, action: F)
    where
        F: FnOnce(&mut W, &mut Engine<W>) + 'static,
    {
        let at = self.now + delay_ns;
        self.schedule_at(at, action);
    }

    /// Dispatch every event with fire time <= `t_end` (inclusive) and return
    /// the number dispatched. The clock never moves backwards; it lands on
    /// `t_end` unless the queue empties first, in which case it stays at the
    /// last dispatched instant.
    pub fn run_until(&mut self, world: &mut W, t_end: SimTime) -> u64 {
        let before = self.dispatched;
        while let Some(head) = self.queue.peek() {
            if head.at > t_end {
                break;
            }
            let ev = self.queue.pop().expect("peeked event vanished");
            debug_assert!(ev.at >= self.now);
            self.now = ev.at;
            self.dispatched += 1;
            (ev.action)(world, self);
        }
        if !self.queue.is_empty() && t_end > self.now {
            self.now = t_end;
        }
        self.dispatched - before
    }
}
