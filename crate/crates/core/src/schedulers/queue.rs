use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use ordered_float::OrderedFloat;

use crate::domain::{TaskId, TaskSpec};

/// Order in which ready tasks are offered to a policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueueOrder {
    /// Arrival order; a task that fails placement goes to the back.
    Fifo,
    /// Largest memory request first, then earliest arrival, then task id.
    LargestMemoryFirst,
}

/// Retry delay for tasks that found no node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Backoff {
    pub initial_seconds: f64,
    pub max_seconds: f64,
}

impl Default for Backoff {
    fn default() -> Self {
        Backoff {
            initial_seconds: 10.0,
            max_seconds: 300.0,
        }
    }
}

impl Backoff {
    /// Delay before the attempt following `retry_count` failures.
    pub fn delay(&self, retry_count: u32) -> f64 {
        let exp = retry_count.saturating_sub(1).min(30) as i32;
        (self.initial_seconds * 2f64.powi(exp)).min(self.max_seconds)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PendingEntry {
    pub task: TaskSpec,
    pub enqueue_time: f64,
    pub retry_count: u32,
    pub next_eligible_time: f64,
}

type ReadyKey = (OrderedFloat<f64>, OrderedFloat<f64>, u64);

/// Tasks waiting for placement. Ready entries are kept in policy order;
/// entries serving a backoff wait in a heap keyed by their eligibility time.
#[derive(Debug, Clone)]
pub struct PendingQueue {
    order: QueueOrder,
    ready: BTreeMap<ReadyKey, PendingEntry>,
    waiting: BinaryHeap<Reverse<(OrderedFloat<f64>, u64, TaskId)>>,
    parked: BTreeMap<TaskId, PendingEntry>,
    seq: u64,
}

impl PendingQueue {
    pub fn new(order: QueueOrder) -> Self {
        PendingQueue {
            order,
            ready: BTreeMap::new(),
            waiting: BinaryHeap::new(),
            parked: BTreeMap::new(),
            seq: 0,
        }
    }

    /// Builds a queue holding `tasks`, enqueued in the given order at time 0.
    pub fn from_tasks(order: QueueOrder, tasks: impl IntoIterator<Item = TaskSpec>) -> Self {
        let mut q = PendingQueue::new(order);
        for task in tasks {
            q.push(task, 0.0);
        }
        q
    }

    pub fn order(&self) -> QueueOrder {
        self.order
    }

    pub fn len(&self) -> usize {
        self.ready.len() + self.parked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ready_len(&self) -> usize {
        self.ready.len()
    }

    fn key(&mut self, task: &TaskSpec) -> ReadyKey {
        self.seq += 1;
        match self.order {
            QueueOrder::Fifo => (OrderedFloat(0.0), OrderedFloat(0.0), self.seq),
            QueueOrder::LargestMemoryFirst => (
                OrderedFloat(-task.request.mem),
                OrderedFloat(task.arrival_time),
                task.task_id.0,
            ),
        }
    }

    /// OnJobArrival: enqueue a new task, eligible immediately.
    pub fn push(&mut self, task: TaskSpec, now: f64) {
        let entry = PendingEntry {
            task,
            enqueue_time: now,
            retry_count: 0,
            next_eligible_time: now,
        };
        self.insert_ready(entry);
    }

    fn insert_ready(&mut self, entry: PendingEntry) {
        let key = self.key(&entry.task);
        self.ready.insert(key, entry);
    }

    /// Puts a task that could not be placed back at the end of the queue,
    /// ineligible until its backoff expires.
    pub fn requeue(&mut self, mut entry: PendingEntry, now: f64, backoff: &Backoff) {
        entry.retry_count += 1;
        entry.next_eligible_time = now + backoff.delay(entry.retry_count);
        self.seq += 1;
        self.waiting.push(Reverse((
            OrderedFloat(entry.next_eligible_time),
            self.seq,
            entry.task.task_id,
        )));
        self.parked.insert(entry.task.task_id, entry);
    }

    /// Moves every entry whose backoff has expired by `now` into the ready set.
    pub fn release(&mut self, now: f64) {
        while let Some(Reverse((at, _, id))) = self.waiting.peek().copied() {
            if at.0 > now {
                break;
            }
            self.waiting.pop();
            if let Some(entry) = self.parked.remove(&id) {
                self.insert_ready(entry);
            }
        }
    }

    pub fn head(&self) -> Option<&PendingEntry> {
        self.ready.values().next()
    }

    pub fn pop_ready(&mut self) -> Option<PendingEntry> {
        self.ready.pop_first().map(|(_, e)| e)
    }

    /// Ready entries in policy order.
    pub fn ready_entries(&self) -> impl Iterator<Item = &PendingEntry> {
        self.ready.values()
    }

    /// All entries, ready first in policy order, then waiting ones by task id.
    pub fn entries(&self) -> impl Iterator<Item = &PendingEntry> {
        self.ready.values().chain(self.parked.values())
    }
}
