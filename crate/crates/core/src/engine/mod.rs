//! Discrete-time simulation loop.
//!
//! Time advances in fixed ticks. Within a tick the phases run in the order of
//! [`EventKind`]: arrivals join the pending queue, the scheduler drains every
//! ready queue entry, monitors refresh node load samples (at their own
//! cadence, from the previous tick's usage), each node splits its capacity
//! among its tasks, cluster QoS is evaluated, the estimation penalty is
//! updated (usage-based policies only, at their own cadence), tasks that
//! have run their full duration leave, and a [`TickMetrics`] row is emitted.
//!
//! A task's usage in a tick is its allocation; demand above it is dropped.

mod metrics;

use std::collections::BTreeMap;

pub use metrics::{
    std_over_mean, summarize, write_metrics_csv, write_summary_csv, SummaryReport, TickMetrics,
    METRICS_HEADER, SUMMARY_HEADER,
};

use crate::allocation::{allocate_node, AllocationInput};
use crate::domain::{
    dominant_fraction, ClusterConfig, DemandSeries, NodeState, ResourceVector, TaskId, TaskSpec,
};
use crate::error::{Error, Result};
use crate::estimation::{CurrentUsage, LoadEstimator, PenaltyController};
use crate::qos::{cluster_qos, task_qos};
use crate::schedulers::{
    schedule_pending, Backoff, PendingQueue, Scheduler, SchedulerKind, ScoreWeights,
};
use crate::workload::Workload;

/// Phases of a tick, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    Arrival,
    Schedule,
    Monitor,
    Allocate,
    PenaltyUpdate,
    Completion,
    MetricsTick,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEvent {
    pub time: f64,
    pub kind: EventKind,
}

/// Everything a run needs besides the workload and the policy.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub cluster: ClusterConfig,
    /// Multiplies every demand sample; requests are unchanged.
    pub demand_scale: f64,
    /// Stop before this simulated time. `None` runs until the workload drains.
    pub horizon_seconds: Option<f64>,
    pub backoff: Backoff,
    pub score_weights: ScoreWeights,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            cluster: ClusterConfig::default(),
            demand_scale: 1.0,
            horizon_seconds: None,
            backoff: Backoff::default(),
            score_weights: ScoreWeights::default(),
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        self.cluster.validate()?;
        if !(self.demand_scale >= 0.0 && self.demand_scale.is_finite()) {
            return Err(Error::InvalidConfig("demand scale must be >= 0".into()));
        }
        if let Some(h) = self.horizon_seconds {
            if !(h >= 0.0 && h.is_finite()) {
                return Err(Error::InvalidConfig("horizon must be >= 0".into()));
            }
        }
        if !(self.backoff.initial_seconds > 0.0
            && self.backoff.max_seconds >= self.backoff.initial_seconds)
        {
            return Err(Error::InvalidConfig(
                "backoff must satisfy 0 < initial <= max".into(),
            ));
        }
        Ok(())
    }
}

/// Lifetime of one admitted task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskRecord {
    pub task_id: TaskId,
    pub node_id: usize,
    pub arrival_time: f64,
    pub placed_at: f64,
    /// End of the last tick the task ran in.
    pub completed_at: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub metrics: Vec<TickMetrics>,
    pub summary: SummaryReport,
    pub tasks: Vec<TaskRecord>,
    /// Tasks whose request exceeds a node's capacity in some dimension.
    pub unschedulable: Vec<TaskId>,
}

struct Running<'w> {
    node: usize,
    start: f64,
    duration: f64,
    request: ResourceVector,
    series: &'w DemandSeries,
    record: usize,
}

// Guards against float drift when comparing elapsed time to durations.
const TIME_EPS: f64 = 1e-9;

/// Runs one policy over a workload. Deterministic in its inputs.
pub fn run_simulation(
    config: &SimulationConfig,
    workload: &Workload,
    kind: SchedulerKind,
) -> Result<SimulationOutput> {
    config.validate()?;
    let cluster = &config.cluster;
    let cap = cluster.node_capacity;
    let tick = cluster.tick_seconds;
    let scheduler = Scheduler::with_weights(kind, config.score_weights);
    let estimator = CurrentUsage;

    let mut arrivals: Vec<&TaskSpec> = workload.tasks().iter().collect();
    arrivals.sort_by(|a, b| {
        a.arrival_time
            .total_cmp(&b.arrival_time)
            .then(a.task_id.cmp(&b.task_id))
    });
    let specs: BTreeMap<TaskId, &TaskSpec> =
        workload.tasks().iter().map(|t| (t.task_id, t)).collect();

    let mut nodes: Vec<NodeState> = (0..cluster.n_nodes)
        .map(|i| NodeState::new(i, cap))
        .collect();
    let mut queue = PendingQueue::new(kind.queue_order());
    let mut controller = kind
        .uses_penalty()
        .then(|| PenaltyController::from_config(cluster))
        .transpose()?;
    let mut running: BTreeMap<TaskId, Running<'_>> = BTreeMap::new();
    let mut records: Vec<TaskRecord> = Vec::new();
    let mut unschedulable = Vec::new();
    let mut metrics = Vec::new();

    let mut last_usage: Option<(f64, Vec<ResourceVector>)> = None;
    let mut next_arrival = 0usize;
    let mut next_monitor = 0.0;
    let mut next_penalty = cluster.penalty_interval_seconds;
    let mut completed = 0usize;

    for step in 0u64.. {
        let now = step as f64 * tick;
        if let Some(h) = config.horizon_seconds {
            if now >= h - TIME_EPS {
                break;
            }
        }

        // arrivals
        while let Some(task) = arrivals.get(next_arrival) {
            if task.arrival_time > now + TIME_EPS {
                break;
            }
            next_arrival += 1;
            if !task.request.le(&cap) {
                unschedulable.push(task.task_id);
                continue;
            }
            queue.push((*task).clone(), now);
        }

        // scheduling
        let penalty = controller.as_ref().map_or(1.0, PenaltyController::p);
        for decision in schedule_pending(
            &scheduler,
            &mut queue,
            &mut nodes,
            penalty,
            now,
            &config.backoff,
        ) {
            let Some(node) = decision.node() else {
                continue;
            };
            let spec = specs[&decision.task_id];
            let series = workload.demand(spec.task_id).ok_or_else(|| {
                Error::InvalidWorkload(format!("task {} has no demand series", spec.task_id))
            })?;
            records.push(TaskRecord {
                task_id: spec.task_id,
                node_id: node,
                arrival_time: spec.arrival_time,
                placed_at: now,
                completed_at: None,
            });
            running.insert(
                spec.task_id,
                Running {
                    node,
                    start: now,
                    duration: spec.duration,
                    request: spec.request,
                    series,
                    record: records.len() - 1,
                },
            );
        }

        // monitoring
        if now + TIME_EPS >= next_monitor {
            if let Some((usage_time, usage)) = &last_usage {
                for (node, load) in nodes.iter_mut().zip(usage) {
                    node.record_sample(*load, *usage_time);
                }
            }
            for node in nodes.iter_mut() {
                let est = estimator.estimate(node);
                node.set_estimate(est.l_hat);
            }
            next_monitor += cluster.monitor_interval_seconds;
        }

        // allocation and QoS
        let mut usage = vec![ResourceVector::ZERO; nodes.len()];
        let mut q_values: Vec<f64> = Vec::with_capacity(running.len());
        let mut total_request = ResourceVector::ZERO;
        let mut n_running = 0usize;
        for (node, node_usage) in nodes.iter().zip(usage.iter_mut()) {
            if node.n_tasks() == 0 {
                continue;
            }
            let inputs: Vec<AllocationInput> = node
                .placed_tasks()
                .map(|p| {
                    let r = &running[&p.task_id];
                    AllocationInput {
                        task_id: p.task_id,
                        request: r.request,
                        demand: r.series.at(now - r.start).scale(config.demand_scale),
                    }
                })
                .collect();
            let result = allocate_node(cap, &inputs)?;
            for input in &inputs {
                let a = result.allocations[&input.task_id];
                q_values.push(f64::from(task_qos(&input.request, &input.demand, &a)));
            }
            *node_usage = result.total().min(&cap);
            total_request += node.requested();
            n_running += inputs.len();
        }
        let q_now = cluster_qos(&q_values, cluster.per_task_qos_target);

        // penalty feedback
        if let Some(c) = controller.as_mut() {
            if now + TIME_EPS >= next_penalty {
                c.update(q_now);
                next_penalty += cluster.penalty_interval_seconds;
            }
        }

        // completions
        let tick_end = now + tick;
        let done: Vec<TaskId> = running
            .iter()
            .filter(|(_, r)| tick_end - r.start + TIME_EPS >= r.duration)
            .map(|(id, _)| *id)
            .collect();
        for id in done {
            if let Some(r) = running.remove(&id) {
                nodes[r.node].remove(id);
                records[r.record].completed_at = Some(tick_end);
                completed += 1;
            }
        }

        // metrics
        let total_usage: ResourceVector = usage.iter().sum();
        let max_load = usage
            .iter()
            .map(|u| dominant_fraction(u, &cap).unwrap_or(0.0))
            .fold(0.0, f64::max);
        let cpu: Vec<f64> = usage.iter().map(|u| u.cpu).collect();
        let mem: Vec<f64> = usage.iter().map(|u| u.mem).collect();
        metrics.push(TickMetrics {
            time: now,
            total_request,
            total_usage,
            cluster_q: q_now,
            penalty_p: controller.as_ref().map_or(1.0, PenaltyController::p),
            max_node_load_fraction: max_load,
            usage_std_over_mean: ResourceVector::new(std_over_mean(&cpu), std_over_mean(&mem)),
            n_running,
            n_pending: queue.len(),
            violated: q_now < cluster.qos_target,
        });
        last_usage = Some((now, usage));

        if config.horizon_seconds.is_none()
            && next_arrival == arrivals.len()
            && queue.is_empty()
            && running.is_empty()
        {
            break;
        }
    }

    let mut summary = summarize(
        &metrics,
        cluster.qos_target,
        cap.scale(cluster.n_nodes as f64),
    );
    summary.scheduler = kind.name().to_string();
    summary.n_nodes = cluster.n_nodes;
    summary.admitted = records.len();
    summary.completed = completed;
    summary.unschedulable = unschedulable.len();
    summary.demand_scale = config.demand_scale;
    summary.mean_pending_delay = if records.is_empty() {
        0.0
    } else {
        records
            .iter()
            .map(|r| r.placed_at - r.arrival_time)
            .sum::<f64>()
            / records.len() as f64
    };

    Ok(SimulationOutput {
        metrics,
        summary,
        tasks: records,
        unschedulable,
    })
}
