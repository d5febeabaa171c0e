//! Placement policies and the shared pending-queue driver.
//!
//! Every policy answers one question: given the head task and the current
//! node states, which node (if any) takes it. [`schedule_pending`] drains the
//! ready part of a [`PendingQueue`] one head at a time, applying placements
//! to the node states as it goes and sending failures back with a backoff.

mod flex;
mod oracle;
mod queue;

use std::fmt;
use std::str::FromStr;

pub use flex::{flex_filter, flex_fits, flex_score, flex_select, planning_load, ScoreWeights};
pub use oracle::{optimal_max_load, ORACLE_MAX_NODES, ORACLE_MAX_TASKS};
pub use queue::{Backoff, PendingEntry, PendingQueue, QueueOrder};

use crate::domain::{dominant_fraction, resource_le, NodeState, TaskId, TaskSpec};
use crate::estimation::PenaltyController;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchedulerKind {
    /// Least estimated load, arrival order.
    Fifo,
    /// Least estimated load, largest memory request first.
    Lrf,
    /// Least requested resources, requests capped at capacity.
    LeastFit,
    /// LeastFit with requests capped at `theta` times capacity.
    Oversub { theta: f64 },
    /// Penalized usage filter and score, arrival order.
    FlexF,
    /// Penalized usage filter and score, largest memory request first.
    FlexL,
}

impl SchedulerKind {
    pub const DEFAULT_OVERSUB_THETA: f64 = 2.0;

    pub fn queue_order(&self) -> QueueOrder {
        match self {
            SchedulerKind::Lrf | SchedulerKind::FlexL => QueueOrder::LargestMemoryFirst,
            _ => QueueOrder::Fifo,
        }
    }

    /// Oversubscription factor for request-based policies.
    pub fn theta(&self) -> Option<f64> {
        match self {
            SchedulerKind::LeastFit => Some(1.0),
            SchedulerKind::Oversub { theta } => Some(*theta),
            _ => None,
        }
    }

    /// Whether the policy is driven by the estimation penalty.
    pub fn uses_penalty(&self) -> bool {
        matches!(self, SchedulerKind::FlexF | SchedulerKind::FlexL)
    }

    pub fn name(&self) -> &'static str {
        match self {
            SchedulerKind::Fifo => "fifo",
            SchedulerKind::Lrf => "lrf",
            SchedulerKind::LeastFit => "leastfit",
            SchedulerKind::Oversub { .. } => "oversub",
            SchedulerKind::FlexF => "flexf",
            SchedulerKind::FlexL => "flexl",
        }
    }

    /// Parses a policy name; `theta` applies to `oversub` only.
    pub fn parse_with_theta(name: &str, theta: f64) -> Result<Self, String> {
        let kind = name.parse::<SchedulerKind>()?;
        Ok(match kind {
            SchedulerKind::Oversub { .. } => SchedulerKind::Oversub { theta },
            other => other,
        })
    }
}

impl FromStr for SchedulerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fifo" => Ok(SchedulerKind::Fifo),
            "lrf" => Ok(SchedulerKind::Lrf),
            "leastfit" => Ok(SchedulerKind::LeastFit),
            "oversub" => Ok(SchedulerKind::Oversub {
                theta: Self::DEFAULT_OVERSUB_THETA,
            }),
            "flexf" => Ok(SchedulerKind::FlexF),
            "flexl" => Ok(SchedulerKind::FlexL),
            other => Err(format!(
                "unknown scheduler '{other}' (expected fifo, lrf, leastfit, oversub, flexf or flexl)"
            )),
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlacementOutcome {
    Placed(usize),
    /// No node passed this round; the task was requeued.
    Deferred,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlacementDecision {
    pub task_id: TaskId,
    pub outcome: PlacementOutcome,
}

impl PlacementDecision {
    pub fn node(&self) -> Option<usize> {
        match self.outcome {
            PlacementOutcome::Placed(n) => Some(n),
            PlacementOutcome::Deferred => None,
        }
    }
}

fn fraction(node: &NodeState, v: &crate::domain::ResourceVector) -> f64 {
    dominant_fraction(v, &node.capacity).unwrap_or(f64::INFINITY)
}

/// Load the load-balancing policies see: last estimate plus the requests of
/// tasks placed since that estimate was taken.
fn balancing_load(node: &NodeState) -> crate::domain::ResourceVector {
    node.estimated_load() + node.unsampled_requests()
}

/// Picks the least loaded node and takes it only if the request fits there.
pub fn least_loaded_select(task: &TaskSpec, nodes: &[NodeState]) -> Option<usize> {
    let (idx, node) = nodes.iter().enumerate().min_by(|(_, a), (_, b)| {
        fraction(a, &balancing_load(a))
            .total_cmp(&fraction(b, &balancing_load(b)))
            .then(a.node_id.cmp(&b.node_id))
    })?;
    least_loaded_fits(task, node).then_some(idx)
}

pub fn least_loaded_fits(task: &TaskSpec, node: &NodeState) -> bool {
    resource_le(&(balancing_load(node) + task.request), &node.capacity)
}

/// Picks the node minimizing the requested fraction after placement, subject
/// to `R_i + r_j <= theta * C`.
pub fn least_fit_select(task: &TaskSpec, nodes: &[NodeState], theta: f64) -> Option<usize> {
    let (idx, node) = nodes.iter().enumerate().min_by(|(_, a), (_, b)| {
        fraction(a, &(a.requested() + task.request))
            .total_cmp(&fraction(b, &(b.requested() + task.request)))
            .then(a.node_id.cmp(&b.node_id))
    })?;
    least_fit_fits(task, node, theta).then_some(idx)
}

pub fn least_fit_fits(task: &TaskSpec, node: &NodeState, theta: f64) -> bool {
    resource_le(
        &(node.requested() + task.request),
        &node.capacity.scale(theta),
    )
}

/// A configured policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scheduler {
    pub kind: SchedulerKind,
    pub weights: ScoreWeights,
}

impl Scheduler {
    pub fn new(kind: SchedulerKind) -> Self {
        Scheduler {
            kind,
            weights: ScoreWeights::default(),
        }
    }

    pub fn with_weights(kind: SchedulerKind, weights: ScoreWeights) -> Self {
        Scheduler { kind, weights }
    }

    /// Index into `nodes` chosen for `task`, if any.
    pub fn select(&self, task: &TaskSpec, nodes: &[NodeState], penalty: f64) -> Option<usize> {
        match self.kind {
            SchedulerKind::Fifo | SchedulerKind::Lrf => least_loaded_select(task, nodes),
            SchedulerKind::LeastFit => least_fit_select(task, nodes, 1.0),
            SchedulerKind::Oversub { theta } => least_fit_select(task, nodes, theta),
            SchedulerKind::FlexF | SchedulerKind::FlexL => {
                flex_select(task, nodes, penalty, &self.weights)
            }
        }
    }

    /// The policy's capacity predicate for placing `task` on `node`.
    pub fn admits(&self, task: &TaskSpec, node: &NodeState, penalty: f64) -> bool {
        match self.kind {
            SchedulerKind::Fifo | SchedulerKind::Lrf => least_loaded_fits(task, node),
            SchedulerKind::LeastFit => least_fit_fits(task, node, 1.0),
            SchedulerKind::Oversub { theta } => least_fit_fits(task, node, theta),
            SchedulerKind::FlexF | SchedulerKind::FlexL => flex_fits(task, node, penalty),
        }
    }
}

/// ScheduleOne: pops the queue head and places it, or requeues it with backoff.
/// Returns `None` when no entry is ready.
pub fn schedule_one(
    scheduler: &Scheduler,
    queue: &mut PendingQueue,
    nodes: &mut [NodeState],
    penalty: f64,
    now: f64,
    backoff: &Backoff,
) -> Option<(PlacementDecision, PendingEntry)> {
    let entry = queue.pop_ready()?;
    let task_id = entry.task.task_id;
    match scheduler.select(&entry.task, nodes, penalty) {
        Some(idx) => {
            nodes[idx].place(&entry.task, now);
            let decision = PlacementDecision {
                task_id,
                outcome: PlacementOutcome::Placed(nodes[idx].node_id),
            };
            Some((decision, entry))
        }
        None => {
            let snapshot = entry.clone();
            queue.requeue(entry, now, backoff);
            let decision = PlacementDecision {
                task_id,
                outcome: PlacementOutcome::Deferred,
            };
            Some((decision, snapshot))
        }
    }
}

/// Releases expired backoffs, then runs [`schedule_one`] until no entry is ready.
pub fn schedule_pending(
    scheduler: &Scheduler,
    queue: &mut PendingQueue,
    nodes: &mut [NodeState],
    penalty: f64,
    now: f64,
    backoff: &Backoff,
) -> Vec<PlacementDecision> {
    queue.release(now);
    let mut decisions = Vec::new();
    while let Some((decision, _)) = schedule_one(scheduler, queue, nodes, penalty, now, backoff) {
        decisions.push(decision);
    }
    decisions
}

/// Least-load placement of a FIFO queue.
pub fn schedule_fifo(
    queue: &mut PendingQueue,
    nodes: &mut [NodeState],
    now: f64,
) -> Vec<PlacementDecision> {
    debug_assert_eq!(queue.order(), QueueOrder::Fifo);
    schedule_pending(
        &Scheduler::new(SchedulerKind::Fifo),
        queue,
        nodes,
        1.0,
        now,
        &Backoff::default(),
    )
}

/// Least-load placement of a largest-memory-first queue.
pub fn schedule_lrf(
    queue: &mut PendingQueue,
    nodes: &mut [NodeState],
    now: f64,
) -> Vec<PlacementDecision> {
    debug_assert_eq!(queue.order(), QueueOrder::LargestMemoryFirst);
    schedule_pending(
        &Scheduler::new(SchedulerKind::Lrf),
        queue,
        nodes,
        1.0,
        now,
        &Backoff::default(),
    )
}

/// Request-based placement; `theta == 1` is LeastFit, larger values oversubscribe.
pub fn schedule_leastfit(
    queue: &mut PendingQueue,
    nodes: &mut [NodeState],
    theta: f64,
    now: f64,
) -> Vec<PlacementDecision> {
    let kind = if theta == 1.0 {
        SchedulerKind::LeastFit
    } else {
        SchedulerKind::Oversub { theta }
    };
    schedule_pending(
        &Scheduler::new(kind),
        queue,
        nodes,
        1.0,
        now,
        &Backoff::default(),
    )
}

/// Usage-based placement at the controller's current penalty. The queue's
/// order selects FlexF (FIFO) or FlexL (largest memory first).
pub fn schedule_flex(
    queue: &mut PendingQueue,
    nodes: &mut [NodeState],
    controller: &PenaltyController,
    now: f64,
) -> Vec<PlacementDecision> {
    let kind = match queue.order() {
        QueueOrder::Fifo => SchedulerKind::FlexF,
        QueueOrder::LargestMemoryFirst => SchedulerKind::FlexL,
    };
    schedule_pending(
        &Scheduler::new(kind),
        queue,
        nodes,
        controller.p(),
        now,
        &Backoff::default(),
    )
}
