//! Value types shared by every part of the simulator: resource vectors, tasks,
//! demand traces, node state and cluster configuration.
//!
//! Two resource dimensions are modelled, CPU (cores) and memory (GB), both in
//! absolute units. Every capacity check in the crate is applied per dimension.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Sub};

use crate::error::{Error, Result};

/// A quantity of CPU cores and memory.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResourceVector {
    pub cpu: f64,
    pub mem: f64,
}

impl ResourceVector {
    pub const ZERO: ResourceVector = ResourceVector { cpu: 0.0, mem: 0.0 };

    pub const fn new(cpu: f64, mem: f64) -> Self {
        ResourceVector { cpu, mem }
    }

    /// Same as [`ResourceVector::new`] but rejects negative or non-finite components.
    pub fn try_new(cpu: f64, mem: f64) -> Result<Self> {
        let v = ResourceVector { cpu, mem };
        if v.is_valid() {
            Ok(v)
        } else {
            Err(Error::InvalidWorkload(format!(
                "resource vector ({cpu}, {mem}) must be finite and non-negative"
            )))
        }
    }

    pub fn is_valid(&self) -> bool {
        self.cpu.is_finite() && self.mem.is_finite() && self.cpu >= 0.0 && self.mem >= 0.0
    }

    /// Component-wise `self <= other`.
    pub fn le(&self, other: &ResourceVector) -> bool {
        resource_le(self, other)
    }

    pub fn is_zero(&self) -> bool {
        self.cpu == 0.0 && self.mem == 0.0
    }

    pub fn any_positive(&self) -> bool {
        self.cpu > 0.0 || self.mem > 0.0
    }

    pub fn scale(&self, factor: f64) -> Self {
        ResourceVector::new(self.cpu * factor, self.mem * factor)
    }

    pub fn min(&self, other: &ResourceVector) -> Self {
        ResourceVector::new(self.cpu.min(other.cpu), self.mem.min(other.mem))
    }

    pub fn max(&self, other: &ResourceVector) -> Self {
        ResourceVector::new(self.cpu.max(other.cpu), self.mem.max(other.mem))
    }

    pub fn get(&self, dim: Dim) -> f64 {
        match dim {
            Dim::Cpu => self.cpu,
            Dim::Mem => self.mem,
        }
    }

    pub fn set(&mut self, dim: Dim, value: f64) {
        match dim {
            Dim::Cpu => self.cpu = value,
            Dim::Mem => self.mem = value,
        }
    }

    pub fn from_fn(mut f: impl FnMut(Dim) -> f64) -> Self {
        ResourceVector::new(f(Dim::Cpu), f(Dim::Mem))
    }
}

impl Add for ResourceVector {
    type Output = ResourceVector;
    fn add(self, rhs: Self) -> Self {
        ResourceVector::new(self.cpu + rhs.cpu, self.mem + rhs.mem)
    }
}

impl AddAssign for ResourceVector {
    fn add_assign(&mut self, rhs: Self) {
        self.cpu += rhs.cpu;
        self.mem += rhs.mem;
    }
}

impl Sub for ResourceVector {
    type Output = ResourceVector;
    fn sub(self, rhs: Self) -> Self {
        ResourceVector::new(self.cpu - rhs.cpu, self.mem - rhs.mem)
    }
}

impl Mul<f64> for ResourceVector {
    type Output = ResourceVector;
    fn mul(self, rhs: f64) -> Self {
        self.scale(rhs)
    }
}

impl std::iter::Sum for ResourceVector {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(ResourceVector::ZERO, |acc, v| acc + v)
    }
}

impl<'a> std::iter::Sum<&'a ResourceVector> for ResourceVector {
    fn sum<I: Iterator<Item = &'a ResourceVector>>(iter: I) -> Self {
        iter.fold(ResourceVector::ZERO, |acc, v| acc + *v)
    }
}

impl fmt::Display for ResourceVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.cpu, self.mem)
    }
}

/// Resource dimension selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dim {
    Cpu,
    Mem,
}

impl Dim {
    pub const ALL: [Dim; 2] = [Dim::Cpu, Dim::Mem];
}

/// True iff `a <= b` in every dimension.
pub fn resource_le(a: &ResourceVector, b: &ResourceVector) -> bool {
    a.cpu <= b.cpu && a.mem <= b.mem
}

/// Largest per-dimension fraction of `v` relative to `cap`.
pub fn dominant_fraction(v: &ResourceVector, cap: &ResourceVector) -> Result<f64> {
    if !(cap.cpu > 0.0 && cap.mem > 0.0) {
        return Err(Error::DegenerateCapacity);
    }
    Ok((v.cpu / cap.cpu).max(v.mem / cap.mem))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TaskId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JobId(pub u64);

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Display for JobId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Static description of a submitted task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub task_id: TaskId,
    /// Submitting job; tasks of one job tend to peak together.
    pub job_id: JobId,
    pub arrival_time: f64,
    pub duration: f64,
    pub request: ResourceVector,
}

impl TaskSpec {
    pub fn new(
        task_id: TaskId,
        job_id: JobId,
        arrival_time: f64,
        duration: f64,
        request: ResourceVector,
    ) -> Result<Self> {
        let invalid = |reason: &str| Error::InvalidTask {
            task_id: task_id.0,
            reason: reason.to_string(),
        };
        if !(duration.is_finite() && duration > 0.0) {
            return Err(invalid("duration must be positive"));
        }
        if !(arrival_time.is_finite() && arrival_time >= 0.0) {
            return Err(invalid("arrival time must be non-negative"));
        }
        if !request.is_valid() {
            return Err(invalid("request must be finite and non-negative"));
        }
        if !request.any_positive() {
            return Err(invalid(
                "request must be positive in at least one dimension",
            ));
        }
        Ok(TaskSpec {
            task_id,
            job_id,
            arrival_time,
            duration,
            request,
        })
    }
}

/// Piecewise-constant demand trace of one task, offsets relative to its start.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandSeries {
    pub task_id: TaskId,
    samples: Vec<(f64, ResourceVector)>,
}

impl DemandSeries {
    pub fn new(task_id: TaskId, samples: Vec<(f64, ResourceVector)>) -> Result<Self> {
        let invalid = |reason: String| Error::InvalidTask {
            task_id: task_id.0,
            reason,
        };
        match samples.first() {
            None => return Err(invalid("demand series is empty".into())),
            Some((offset, _)) if *offset != 0.0 => {
                return Err(invalid(format!(
                    "first demand offset is {offset}, expected 0"
                )))
            }
            _ => {}
        }
        for pair in samples.windows(2) {
            if pair[1].0.is_nan() || pair[1].0 <= pair[0].0 {
                return Err(invalid(format!(
                    "demand offsets must be strictly increasing ({} after {})",
                    pair[1].0, pair[0].0
                )));
            }
        }
        if let Some((offset, v)) = samples
            .iter()
            .find(|(o, v)| !o.is_finite() || !v.is_valid())
        {
            return Err(invalid(format!(
                "invalid demand sample {v} at offset {offset}"
            )));
        }
        Ok(DemandSeries { task_id, samples })
    }

    /// Constant demand over the whole lifetime.
    pub fn constant(task_id: TaskId, demand: ResourceVector) -> Self {
        DemandSeries {
            task_id,
            samples: vec![(0.0, demand)],
        }
    }

    pub fn samples(&self) -> &[(f64, ResourceVector)] {
        &self.samples
    }

    /// Demand at `offset` seconds after start: the last sample at or before it.
    pub fn at(&self, offset: f64) -> ResourceVector {
        let idx = self.samples.partition_point(|(o, _)| *o <= offset);
        // offset < 0 falls back to the first sample
        self.samples[idx.saturating_sub(1)].1
    }

    /// Time-weighted mean demand over `[0, duration)`.
    pub fn mean_over(&self, duration: f64) -> ResourceVector {
        let mut total = ResourceVector::ZERO;
        for (i, (offset, v)) in self.samples.iter().enumerate() {
            if *offset >= duration {
                break;
            }
            let end = self
                .samples
                .get(i + 1)
                .map_or(duration, |(next, _)| next.min(duration));
            total += v.scale(end - offset);
        }
        total.scale(1.0 / duration)
    }
}

/// A task currently resident on a node.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacedTask {
    pub task_id: TaskId,
    pub job_id: JobId,
    pub request: ResourceVector,
    pub placed_at: f64,
    /// Whether the node's measured load already reflects this task.
    pub sampled: bool,
}

/// Scheduler-visible state of one node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub node_id: usize,
    pub capacity: ResourceVector,
    placed: BTreeMap<TaskId, PlacedTask>,
    job_counts: BTreeMap<JobId, usize>,
    requested: ResourceVector,
    unsampled: ResourceVector,
    measured_load: Option<ResourceVector>,
    measured_at: Option<f64>,
    estimated_load: ResourceVector,
}

impl NodeState {
    pub fn new(node_id: usize, capacity: ResourceVector) -> Self {
        NodeState {
            node_id,
            capacity,
            placed: BTreeMap::new(),
            job_counts: BTreeMap::new(),
            requested: ResourceVector::ZERO,
            unsampled: ResourceVector::ZERO,
            measured_load: None,
            measured_at: None,
            estimated_load: ResourceVector::ZERO,
        }
    }

    /// Rebuilds a node from a list of resident tasks.
    pub fn with_tasks(
        node_id: usize,
        capacity: ResourceVector,
        tasks: impl IntoIterator<Item = PlacedTask>,
    ) -> Self {
        let mut node = NodeState::new(node_id, capacity);
        for task in tasks {
            *node.job_counts.entry(task.job_id).or_default() += 1;
            node.placed.insert(task.task_id, task);
        }
        node.recompute();
        node
    }

    /// Sum of requests of resident tasks (R_i).
    pub fn requested(&self) -> ResourceVector {
        self.requested
    }

    /// Last monitor sample, if any (L_i).
    pub fn measured_load(&self) -> Option<ResourceVector> {
        self.measured_load
    }

    pub fn measured_at(&self) -> Option<f64> {
        self.measured_at
    }

    /// Current load estimate used by usage-based policies.
    pub fn estimated_load(&self) -> ResourceVector {
        self.estimated_load
    }

    /// Requests of tasks placed after the last monitor sample was taken.
    pub fn unsampled_requests(&self) -> ResourceVector {
        self.unsampled
    }

    pub fn placed_tasks(&self) -> impl Iterator<Item = &PlacedTask> {
        self.placed.values()
    }

    pub fn n_tasks(&self) -> usize {
        self.placed.len()
    }

    pub fn contains(&self, task_id: TaskId) -> bool {
        self.placed.contains_key(&task_id)
    }

    /// Resident tasks belonging to `job`.
    pub fn same_job_count(&self, job: JobId) -> usize {
        self.job_counts.get(&job).copied().unwrap_or(0)
    }

    pub fn place(&mut self, task: &TaskSpec, now: f64) {
        let placed = PlacedTask {
            task_id: task.task_id,
            job_id: task.job_id,
            request: task.request,
            placed_at: now,
            sampled: false,
        };
        if self.placed.insert(task.task_id, placed).is_none() {
            *self.job_counts.entry(task.job_id).or_default() += 1;
        }
        self.recompute();
    }

    pub fn remove(&mut self, task_id: TaskId) -> Option<PlacedTask> {
        let removed = self.placed.remove(&task_id)?;
        if let Some(count) = self.job_counts.get_mut(&removed.job_id) {
            *count -= 1;
            if *count == 0 {
                self.job_counts.remove(&removed.job_id);
            }
        }
        self.recompute();
        Some(removed)
    }

    /// Stores a monitor sample. `usage_time` is the instant the sampled usage
    /// was realized; tasks placed at or before it are covered by the sample.
    pub fn record_sample(&mut self, load: ResourceVector, usage_time: f64) {
        self.measured_load = Some(load.min(&self.capacity));
        self.measured_at = Some(usage_time);
        for task in self.placed.values_mut() {
            if task.placed_at <= usage_time {
                task.sampled = true;
            }
        }
        self.recompute();
    }

    pub fn set_estimate(&mut self, l_hat: ResourceVector) {
        self.estimated_load = l_hat;
    }

    fn recompute(&mut self) {
        self.requested = self.placed.values().map(|t| &t.request).sum();
        self.unsampled = self
            .placed
            .values()
            .filter(|t| !t.sampled)
            .map(|t| &t.request)
            .sum();
    }
}

/// Cluster shape and controller constants.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterConfig {
    pub n_nodes: usize,
    pub node_capacity: ResourceVector,
    /// Oversubscription factor used by the request-based policies.
    pub theta: f64,
    /// Cluster QoS target.
    pub qos_target: f64,
    /// Per-task QoS target, shared by every task.
    pub per_task_qos_target: f64,
    pub tick_seconds: f64,
    pub monitor_interval_seconds: f64,
    pub penalty_interval_seconds: f64,
    pub alpha: f64,
    pub beta: f64,
    pub p0: f64,
    pub p_min: f64,
    pub seed: u64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            n_nodes: 4000,
            node_capacity: ResourceVector::new(64.0, 128.0),
            theta: 2.0,
            qos_target: 0.99,
            per_task_qos_target: 1.0,
            tick_seconds: 10.0,
            monitor_interval_seconds: 60.0,
            penalty_interval_seconds: 60.0,
            alpha: 0.99,
            beta: 1.0,
            p0: 1.5,
            p_min: 1.0,
            seed: 0,
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.n_nodes == 0 {
            return fail("n_nodes must be positive");
        }
        if !(self.node_capacity.cpu > 0.0 && self.node_capacity.mem > 0.0)
            || !self.node_capacity.is_valid()
        {
            return fail("node capacity must be positive in every dimension");
        }
        if self.theta.is_nan() || self.theta < 1.0 {
            return fail("theta must be >= 1");
        }
        if !(self.qos_target > 0.0 && self.qos_target <= 1.0) {
            return fail("qos_target must be in (0, 1]");
        }
        if !(self.per_task_qos_target > 0.0 && self.per_task_qos_target <= 1.0) {
            return fail("per_task_qos_target must be in (0, 1]");
        }
        for (name, v) in [
            ("tick_seconds", self.tick_seconds),
            ("monitor_interval_seconds", self.monitor_interval_seconds),
            ("penalty_interval_seconds", self.penalty_interval_seconds),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail("alpha must be in (0, 1)");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return fail("beta must be positive");
        }
        if !(self.p_min >= 1.0 && self.p0 >= self.p_min && self.p0.is_finite()) {
            return fail("require p0 >= p_min >= 1");
        }
        Ok(())
    }
}
