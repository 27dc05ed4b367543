//! Discrete-event core: the simulation clock, the pending-event queue and the
//! dispatch loop.
//!
//! Events are ordered by `(time, seq)`, where `seq` is assigned by the queue
//! at scheduling time. Events at the same instant therefore dispatch in the
//! order they were scheduled, which keeps every run reproducible.
//!
//! The queue never deletes events. Components that invalidate a pending event
//! (a flow whose rate changed, say) leave it in place and recognise it as
//! stale when it is popped.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("event scheduled at {at} but the clock is already at {now}")]
    SchedulingInPast { at: SimTime, now: SimTime },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event<P> {
    pub time: SimTime,
    pub seq: u64,
    pub payload: P,
}

struct Entry<P>(Event<P>);

impl<P> Entry<P> {
    fn key(&self) -> (SimTime, u64) {
        (self.0.time, self.0.seq)
    }
}

impl<P> PartialEq for Entry<P> {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl<P> Eq for Entry<P> {}

impl<P> PartialOrd for Entry<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<P> Ord for Entry<P> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

/// Pending events plus the clock they are measured against.
pub struct EventQueue<P> {
    heap: BinaryHeap<Reverse<Entry<P>>>,
    clock: SimTime,
    next_seq: u64,
    high_water: usize,
    dispatched: u64,
}

impl<P> Default for EventQueue<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> EventQueue<P> {
    pub fn new() -> Self {
        Self { heap: BinaryHeap::new(), clock: SimTime::ZERO, next_seq: 0, high_water: 0, dispatched: 0 }
    }

    /// Current simulation time: the time of the last event popped.
    pub fn now(&self) -> SimTime {
        self.clock
    }

    /// Enqueues `payload` at `time` and returns the sequence number assigned
    /// to it.
    pub fn schedule(&mut self, time: SimTime, payload: P) -> Result<u64, EngineError> {
        if time < self.clock {
            return Err(EngineError::SchedulingInPast { at: time, now: self.clock });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(Entry(Event { time, seq, payload })));
        self.high_water = self.high_water.max(self.heap.len());
        Ok(seq)
    }

    /// Removes the earliest event and advances the clock to its time.
    pub fn next_event(&mut self) -> Option<Event<P>> {
        let Reverse(Entry(event)) = self.heap.pop()?;
        debug_assert!(event.time >= self.clock);
        self.clock = event.time;
        self.dispatched += 1;
        Some(event)
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|Reverse(e)| e.0.time)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn high_water_mark(&self) -> usize {
        self.high_water
    }

    pub fn scheduled_count(&self) -> u64 {
        self.next_seq
    }

    pub fn dispatched_count(&self) -> u64 {
        self.dispatched
    }

    pub fn summary(&self) -> RunSummary {
        RunSummary { events: self.dispatched, final_clock: self.clock, high_water_mark: self.high_water }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub events: u64,
    pub final_clock: SimTime,
    pub high_water_mark: usize,
}

/// Receives every dispatched event. Handlers may schedule follow-up events on
/// the queue they are handed.
pub trait Handler<P> {
    type Error;

    fn handle(&mut self, event: Event<P>, queue: &mut EventQueue<P>) -> Result<(), Self::Error>;
}

/// A handler failure, together with the counters as they stood when the run
/// was aborted.
#[derive(Debug, Error)]
#[error("run aborted at {} after {} events: {source}", .summary.final_clock, .summary.events)]
pub struct RunError<E: std::error::Error + 'static> {
    pub summary: RunSummary,
    #[source]
    pub source: E,
}

/// Dispatches events until the queue is empty.
pub fn run<P, H>(queue: &mut EventQueue<P>, handler: &mut H) -> Result<RunSummary, RunError<H::Error>>
where
    H: Handler<P>,
    H::Error: std::error::Error + 'static,
{
    while let Some(event) = queue.next_event() {
        if let Err(source) = handler.handle(event, queue) {
            return Err(RunError { summary: queue.summary(), source });
        }
    }
    Ok(queue.summary())
}
