//! Workloads: a list of tasks plus a demand trace per task.
//!
//! Workloads come either from the two-file CSV exchange format (see
//! [`load_workload`]) or from the seeded generator in [`synthetic`].

mod files;
pub mod synthetic;

use std::collections::{BTreeMap, BTreeSet};

pub use files::{load_workload, write_workload, TASKS_HEADER, USAGE_HEADER};
pub use synthetic::{generate_synthetic, SyntheticSpec};

use crate::domain::{DemandSeries, TaskId, TaskSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Workload {
    tasks: Vec<TaskSpec>,
    demands: BTreeMap<TaskId, DemandSeries>,
}

impl Workload {
    pub fn empty() -> Self {
        Workload::default()
    }

    /// Validates that tasks and demand series match one-to-one and that every
    /// series fits inside its task's lifetime.
    pub fn new(tasks: Vec<TaskSpec>, demands: BTreeMap<TaskId, DemandSeries>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for task in &tasks {
            if !seen.insert(task.task_id) {
                return Err(Error::InvalidWorkload(format!(
                    "duplicate task {}",
                    task.task_id
                )));
            }
            let series = demands.get(&task.task_id).ok_or_else(|| {
                Error::InvalidWorkload(format!("task {} has no demand series", task.task_id))
            })?;
            if let Some((offset, _)) = series.samples().last() {
                if *offset >= task.duration {
                    return Err(Error::InvalidWorkload(format!(
                        "task {}: demand offset {offset} outside lifetime {}",
                        task.task_id, task.duration
                    )));
                }
            }
        }
        if let Some(orphan) = demands.keys().find(|id| !seen.contains(id)) {
            return Err(Error::InvalidWorkload(format!(
                "demand series for unknown task {orphan}"
            )));
        }
        Ok(Workload { tasks, demands })
    }

    pub fn tasks(&self) -> &[TaskSpec] {
        &self.tasks
    }

    pub fn demands(&self) -> &BTreeMap<TaskId, DemandSeries> {
        &self.demands
    }

    pub fn demand(&self, id: TaskId) -> Option<&DemandSeries> {
        self.demands.get(&id)
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    /// Mean over tasks of (time-averaged demand / request), per dimension.
    /// Dimensions with a zero request are skipped.
    pub fn mean_demand_ratio(&self) -> (f64, f64) {
        let mut sums = [(0.0, 0usize); 2];
        for task in &self.tasks {
            let mean = self.demands[&task.task_id].mean_over(task.duration);
            for (slot, (d, r)) in sums
                .iter_mut()
                .zip([(mean.cpu, task.request.cpu), (mean.mem, task.request.mem)])
            {
                if r > 0.0 {
                    slot.0 += d / r;
                    slot.1 += 1;
                }
            }
        }
        let avg = |(s, n): (f64, usize)| if n == 0 { 0.0 } else { s / n as f64 };
        (avg(sums[0]), avg(sums[1]))
    }
}
