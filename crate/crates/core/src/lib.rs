//! Cluster scheduling simulator.
//!
//! Compares request-based schedulers (LeastFit, Oversub) with usage-based
//! schedulers (FlexF, FlexL) whose load estimates are scaled by a penalty
//! that reacts to cluster QoS. Also provides the underlying least-load
//! balancers (FIFO, LRF), a weighted fair share allocator that turns
//! per-task demand into realized usage, and workload ingestion/generation.

pub mod allocation;
pub mod domain;
pub mod engine;
pub mod error;
pub mod estimation;
pub mod qos;
pub mod schedulers;
pub mod workload;

pub use domain::{ClusterConfig, DemandSeries, JobId, NodeState, ResourceVector, TaskId, TaskSpec};
pub use engine::{run_simulation, SimulationConfig, SimulationOutput, SummaryReport, TickMetrics};
pub use error::{Error, Result};
pub use schedulers::{Scheduler, SchedulerKind};
pub use workload::{generate_synthetic, load_workload, write_workload, SyntheticSpec, Workload};
