//! Discrete-event core: a future-event list with deterministic tie-breaking,
//! the CPU pool and the single FIFO GPU stream, and latest-value topics.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::{Duration, Instant};

/// Ordering class of an event among others at the same instant. Sensor samples
/// fire before anything else scheduled for that instant, so a job released at
/// `t` observes sensor data stamped `t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Tier {
    Sensor = 0,
    Job = 1,
}

pub trait EventAction {
    fn tier(&self) -> Tier {
        Tier::Job
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EventHandle(u64);

struct Entry<A> {
    time: Instant,
    tier: Tier,
    seq: u64,
    action: A,
}

impl<A> Entry<A> {
    fn key(&self) -> (Instant, Tier, u64) {
        (self.time, self.tier, self.seq)
    }
}

impl<A> PartialEq for Entry<A> {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}
impl<A> Eq for Entry<A> {}
impl<A> PartialOrd for Entry<A> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<A> Ord for Entry<A> {
    // BinaryHeap is a max-heap; reverse so the earliest key pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.key().cmp(&self.key())
    }
}

/// Future-event list. Events pop in `(time, tier, insertion order)` order.
pub struct EventQueue<A> {
    now: Instant,
    next_seq: u64,
    heap: BinaryHeap<Entry<A>>,
    cancelled: HashSet<u64>,
}

impl<A: EventAction> Default for EventQueue<A> {
    fn default() -> Self {
        Self::new()
    }
}

impl<A: EventAction> EventQueue<A> {
    pub fn new() -> Self {
        Self { now: Instant::ZERO, next_seq: 0, heap: BinaryHeap::new(), cancelled: HashSet::new() }
    }

    pub fn now(&self) -> Instant {
        self.now
    }

    pub fn schedule(&mut self, time: Instant, action: A) -> Result<EventHandle> {
        if time < self.now {
            return Err(Error::EventInPast { at: time, now: self.now });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        let tier = action.tier();
        self.heap.push(Entry { time, tier, seq, action });
        Ok(EventHandle(seq))
    }

    /// Cancels a pending event. Returns false if it already fired or was cancelled.
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        if handle.0 >= self.next_seq || !self.heap.iter().any(|e| e.seq == handle.0) {
            return false;
        }
        self.cancelled.insert(handle.0)
    }

    /// Pops the next live event and advances the clock to its time.
    pub fn pop(&mut self) -> Option<(Instant, A)> {
        while let Some(entry) = self.heap.pop() {
            if self.cancelled.remove(&entry.seq) {
                continue;
            }
            self.now = entry.time;
            return Some((entry.time, entry.action));
        }
        None
    }

    /// Time of the next live event, without popping it.
    pub fn peek_time(&mut self) -> Option<Instant> {
        while let Some(top) = self.heap.peek() {
            if self.cancelled.contains(&top.seq) {
                let seq = top.seq;
                self.heap.pop();
                self.cancelled.remove(&seq);
                continue;
            }
            return Some(top.time);
        }
        None
    }

    pub fn len(&self) -> usize {
        self.heap.len() - self.cancelled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceKind {
    Cpu,
    GpuStream,
}

/// When a job actually runs on a resource.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grant<T> {
    pub arrival: Instant,
    pub start: Instant,
    pub finish: Instant,
    /// The GPU job this one queued behind, if it had to wait.
    pub blocked_by: Option<T>,
}

impl<T> Grant<T> {
    pub fn wait(&self) -> Duration {
        self.start - self.arrival
    }
}

/// Every CPU task has its own worker, so CPU jobs never queue.
#[derive(Clone, Copy, Debug, Default)]
pub struct CpuPool;

impl CpuPool {
    pub fn acquire<T>(&self, arrival: Instant, exec: Duration) -> Grant<T> {
        Grant { arrival, start: arrival, finish: arrival + exec, blocked_by: None }
    }
}

/// A single non-preemptive GPU stream. Jobs are served in arrival order, one at a time.
#[derive(Clone, Debug)]
pub struct GpuStream<T> {
    free_at: Instant,
    last_arrival: Instant,
    last_job: Option<T>,
    busy: Duration,
}

impl<T: Copy> Default for GpuStream<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Copy> GpuStream<T> {
    pub fn new() -> Self {
        Self { free_at: Instant::ZERO, last_arrival: Instant::ZERO, last_job: None, busy: Duration::ZERO }
    }

    /// Enqueue `job` arriving at `arrival`. Arrivals must be submitted in
    /// non-decreasing time order, which the event loop guarantees.
    pub fn acquire(&mut self, job: T, arrival: Instant, exec: Duration) -> Grant<T> {
        debug_assert!(arrival >= self.last_arrival, "GPU arrivals out of order");
        self.last_arrival = arrival;
        let (start, blocked_by) =
            if self.free_at > arrival { (self.free_at, self.last_job) } else { (arrival, None) };
        let finish = start + exec;
        self.free_at = finish;
        self.last_job = Some(job);
        self.busy += exec;
        Grant { arrival, start, finish, blocked_by }
    }

    pub fn free_at(&self) -> Instant {
        self.free_at
    }

    pub fn busy_time(&self) -> Duration {
        self.busy
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Published<T> {
    pub at: Instant,
    pub payload: T,
}

/// Latest-value topic with a bounded history.
#[derive(Clone, Debug)]
pub struct Topic<T> {
    name: String,
    depth: usize,
    latest: Option<Published<T>>,
    history: VecDeque<Published<T>>,
}

pub const DEFAULT_HISTORY_DEPTH: usize = 1024;

impl<T: Clone> Topic<T> {
    pub fn new(name: impl Into<String>) -> Self {
        Self::with_depth(name, DEFAULT_HISTORY_DEPTH)
    }

    pub fn with_depth(name: impl Into<String>, depth: usize) -> Self {
        Self { name: name.into(), depth, latest: None, history: VecDeque::new() }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn publish(&mut self, at: Instant, payload: T) -> Result<()> {
        if let Some(last) = &self.latest {
            if at < last.at {
                return Err(Error::NonMonotonePublish { topic: self.name.clone(), at, last: last.at });
            }
        }
        let entry = Published { at, payload };
        if self.depth > 0 {
            if self.history.len() == self.depth {
                self.history.pop_front();
            }
            self.history.push_back(entry.clone());
        }
        self.latest = Some(entry);
        Ok(())
    }

    /// The most recent payload, or `None` ("no data yet") if nothing has been published.
    pub fn read_latest(&self) -> Option<&Published<T>> {
        self.latest.as_ref()
    }

    pub fn history(&self) -> impl Iterator<Item = &Published<T>> {
        self.history.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, PartialEq)]
    enum Act {
        Sample(u32),
        Release(u32),
    }

    impl EventAction for Act {
        fn tier(&self) -> Tier {
            match self {
                Act::Sample(_) => Tier::Sensor,
                Act::Release(_) => Tier::Job,
            }
        }
    }

    #[test]
    fn equal_time_events_fire_in_insertion_order() {
        let mut q = EventQueue::new();
        q.schedule(Instant(0), Act::Release(1)).unwrap();
        q.schedule(Instant(0), Act::Release(2)).unwrap();
        assert_eq!(q.pop(), Some((Instant(0), Act::Release(1))));
        assert_eq!(q.pop(), Some((Instant(0), Act::Release(2))));
        assert_eq!(q.pop(), None);
    }

    #[test]
    fn sensor_samples_precede_releases_at_same_instant() {
        let mut q = EventQueue::new();
        q.schedule(Instant(10), Act::Release(1)).unwrap();
        q.schedule(Instant(10), Act::Sample(1)).unwrap();
        assert_eq!(q.pop().unwrap().1, Act::Sample(1));
        assert_eq!(q.pop().unwrap().1, Act::Release(1));
    }

    #[test]
    fn future_event_fires_when_clock_reaches_it() {
        let mut q = EventQueue::new();
        q.schedule(Instant(50), Act::Release(0)).unwrap();
        q.pop();
        assert_eq!(q.now(), Instant(50));
        q.schedule(Instant(100), Act::Release(1)).unwrap();
        assert_eq!(q.pop(), Some((Instant(100), Act::Release(1))));
        assert_eq!(q.now(), Instant(100));
    }

    #[test]
    fn past_events_rejected() {
        let mut q = EventQueue::new();
        q.schedule(Instant(50), Act::Release(0)).unwrap();
        q.pop();
        assert!(matches!(q.schedule(Instant(49), Act::Release(1)), Err(Error::EventInPast { .. })));
    }

    #[test]
    fn cancelled_event_never_fires() {
        let mut q = EventQueue::new();
        let h = q.schedule(Instant(5), Act::Release(1)).unwrap();
        q.schedule(Instant(6), Act::Release(2)).unwrap();
        assert!(q.cancel(h));
        assert!(!q.cancel(h));
        assert_eq!(q.len(), 1);
        assert_eq!(q.pop(), Some((Instant(6), Act::Release(2))));
        assert_eq!(q.pop(), None);
    }

    #[test]
    fn gpu_is_fifo() {
        let mut gpu = GpuStream::new();
        let a = gpu.acquire('A', Instant(0), Duration(4));
        let b = gpu.acquire('B', Instant(1), Duration(2));
        assert_eq!((a.start, a.finish), (Instant(0), Instant(4)));
        assert_eq!((b.start, b.finish), (Instant(4), Instant(6)));
        assert_eq!(b.blocked_by, Some('A'));
        assert_eq!(b.wait(), Duration(3));
    }

    #[test]
    fn cpu_runs_concurrently() {
        let cpu = CpuPool;
        let _a: Grant<()> = cpu.acquire(Instant(0), Duration(4));
        let b: Grant<()> = cpu.acquire(Instant(1), Duration(2));
        assert_eq!((b.start, b.finish), (Instant(1), Instant(3)));
    }

    #[test]
    fn zero_duration_gpu_job_finishes_at_start() {
        let mut gpu = GpuStream::new();
        let g = gpu.acquire((), Instant(10), Duration::ZERO);
        assert_eq!(g.finish, Instant(10));
    }

    #[test]
    fn topic_latest_wins() {
        let mut t = Topic::new("pose");
        assert!(t.read_latest().is_none());
        t.publish(Instant(1), "P1").unwrap();
        t.publish(Instant(1), "P2").unwrap();
        assert_eq!(t.read_latest().unwrap().payload, "P2");
        assert!(t.publish(Instant(0), "P0").is_err());
    }

    #[test]
    fn topic_history_is_bounded() {
        let mut t = Topic::with_depth("x", 3);
        for i in 0..10 {
            t.publish(Instant(i), i).unwrap();
        }
        let h: Vec<_> = t.history().map(|p| p.payload).collect();
        assert_eq!(h, vec![7, 8, 9]);
    }
}
