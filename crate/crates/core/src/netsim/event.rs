use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::Micros;

/// A scheduled action. Ordered by `(at, sequence)`; sequence numbers follow creation order.
#[derive(Debug, Clone)]
pub struct Event<A> {
    pub at: Micros,
    pub sequence: u64,
    pub action: A,
}

impl<A> PartialEq for Event<A> {
    fn eq(&self, other: &Self) -> bool {
        self.at == other.at && self.sequence == other.sequence
    }
}

impl<A> Eq for Event<A> {}

impl<A> PartialOrd for Event<A> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<A> Ord for Event<A> {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        (other.at, other.sequence).cmp(&(self.at, self.sequence))
    }
}

/// Monotone virtual clock.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VirtualClock {
    now: Micros,
}

impl VirtualClock {
    pub fn now(&self) -> Micros {
        self.now
    }

    fn advance_to(&mut self, at: Micros) {
        assert!(at >= self.now, "clock moved backwards: {} -> {at}", self.now);
        self.now = at;
    }
}

#[derive(Debug)]
pub struct EventQueue<A> {
    heap: BinaryHeap<Event<A>>,
    next_sequence: u64,
    clock: VirtualClock,
}

impl<A> Default for EventQueue<A> {
    fn default() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            next_sequence: 0,
            clock: VirtualClock::default(),
        }
    }
}

impl<A> EventQueue<A> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> Micros {
        self.clock.now()
    }

    /// Schedules `action` at absolute time `at`. Scheduling in the past is a bug.
    pub fn schedule(&mut self, at: Micros, action: A) -> u64 {
        assert!(
            at >= self.clock.now(),
            "event scheduled at {at} before now {}",
            self.clock.now()
        );
        let sequence = self.next_sequence;
        self.next_sequence += 1;
        self.heap.push(Event { at, sequence, action });
        sequence
    }

    pub fn schedule_in(&mut self, delay: Micros, action: A) -> u64 {
        self.schedule(self.clock.now() + delay, action)
    }

    /// Pops the next event and advances the clock to it.
    pub fn pop(&mut self) -> Option<Event<A>> {
        let ev = self.heap.pop()?;
        self.clock.advance_to(ev.at);
        Some(ev)
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }
}
