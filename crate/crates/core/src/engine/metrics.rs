use std::io::Write;

use crate::domain::ResourceVector;
use crate::error::Result;

pub const METRICS_HEADER: [&str; 13] = [
    "time_s",
    "total_req_cpu",
    "total_req_mem",
    "total_use_cpu",
    "total_use_mem",
    "cluster_q",
    "penalty_p",
    "max_load_frac",
    "std_over_mean_cpu",
    "std_over_mean_mem",
    "n_running",
    "n_pending",
    "violated",
];

pub const SUMMARY_HEADER: [&str; 20] = [
    "scheduler",
    "n_nodes",
    "cluster_cpu",
    "cluster_mem",
    "ticks",
    "avg_req_cpu",
    "avg_req_mem",
    "avg_use_cpu",
    "avg_use_mem",
    "violation_frac",
    "mean_q",
    "mean_p",
    "max_p",
    "median_std_over_mean_cpu",
    "median_std_over_mean_mem",
    "admitted",
    "completed",
    "unschedulable",
    "mean_pending_delay_s",
    "demand_scale",
];

/// One row of `metrics.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct TickMetrics {
    pub time: f64,
    pub total_request: ResourceVector,
    pub total_usage: ResourceVector,
    pub cluster_q: f64,
    pub penalty_p: f64,
    /// Largest dominant usage fraction over nodes.
    pub max_node_load_fraction: f64,
    /// Population std of per-node usage over its mean, per dimension.
    pub usage_std_over_mean: ResourceVector,
    pub n_running: usize,
    pub n_pending: usize,
    pub violated: bool,
}

impl TickMetrics {
    fn record(&self) -> [String; 13] {
        [
            self.time.to_string(),
            self.total_request.cpu.to_string(),
            self.total_request.mem.to_string(),
            self.total_usage.cpu.to_string(),
            self.total_usage.mem.to_string(),
            self.cluster_q.to_string(),
            self.penalty_p.to_string(),
            self.max_node_load_fraction.to_string(),
            self.usage_std_over_mean.cpu.to_string(),
            self.usage_std_over_mean.mem.to_string(),
            self.n_running.to_string(),
            self.n_pending.to_string(),
            u8::from(self.violated).to_string(),
        ]
    }
}

/// Population standard deviation divided by the mean; 0 when the mean is 0.
pub fn std_over_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return 0.0;
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SummaryReport {
    pub scheduler: String,
    pub n_nodes: usize,
    /// Total cluster capacity, the divisor of the normalized averages.
    pub cluster_capacity: ResourceVector,
    pub ticks: usize,
    /// Time-averaged total request over cluster capacity.
    pub avg_request: ResourceVector,
    /// Time-averaged total usage over cluster capacity.
    pub avg_usage: ResourceVector,
    /// Fraction of ticks with cluster QoS below target.
    pub violation_fraction: f64,
    pub mean_q: f64,
    pub mean_p: f64,
    pub max_p: f64,
    pub median_std_over_mean: ResourceVector,
    pub admitted: usize,
    pub completed: usize,
    pub unschedulable: usize,
    pub mean_pending_delay: f64,
    pub demand_scale: f64,
}

fn median(mut values: Vec<f64>) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

/// Aggregates tick metrics. Admission counters are left at zero; the engine
/// fills them in from its own bookkeeping.
pub fn summarize(
    metrics: &[TickMetrics],
    rho: f64,
    cluster_capacity: ResourceVector,
) -> SummaryReport {
    let mut report = SummaryReport {
        cluster_capacity,
        ticks: metrics.len(),
        demand_scale: 1.0,
        ..Default::default()
    };
    if metrics.is_empty() {
        return report;
    }
    let n = metrics.len() as f64;
    let norm = |v: ResourceVector| {
        ResourceVector::new(
            if cluster_capacity.cpu > 0.0 {
                v.cpu / cluster_capacity.cpu
            } else {
                0.0
            },
            if cluster_capacity.mem > 0.0 {
                v.mem / cluster_capacity.mem
            } else {
                0.0
            },
        )
    };
    let req: ResourceVector = metrics.iter().map(|m| &m.total_request).sum();
    let use_: ResourceVector = metrics.iter().map(|m| &m.total_usage).sum();
    report.avg_request = norm(req.scale(1.0 / n));
    report.avg_usage = norm(use_.scale(1.0 / n));
    report.violation_fraction = metrics.iter().filter(|m| m.cluster_q < rho).count() as f64 / n;
    report.mean_q = metrics.iter().map(|m| m.cluster_q).sum::<f64>() / n;
    report.mean_p = metrics.iter().map(|m| m.penalty_p).sum::<f64>() / n;
    report.max_p = metrics
        .iter()
        .map(|m| m.penalty_p)
        .fold(f64::NEG_INFINITY, f64::max);
    report.median_std_over_mean = ResourceVector::new(
        median(metrics.iter().map(|m| m.usage_std_over_mean.cpu).collect()),
        median(metrics.iter().map(|m| m.usage_std_over_mean.mem).collect()),
    );
    report
}

impl SummaryReport {
    fn record(&self) -> [String; 20] {
        [
            self.scheduler.clone(),
            self.n_nodes.to_string(),
            self.cluster_capacity.cpu.to_string(),
            self.cluster_capacity.mem.to_string(),
            self.ticks.to_string(),
            self.avg_request.cpu.to_string(),
            self.avg_request.mem.to_string(),
            self.avg_usage.cpu.to_string(),
            self.avg_usage.mem.to_string(),
            self.violation_fraction.to_string(),
            self.mean_q.to_string(),
            self.mean_p.to_string(),
            self.max_p.to_string(),
            self.median_std_over_mean.cpu.to_string(),
            self.median_std_over_mean.mem.to_string(),
            self.admitted.to_string(),
            self.completed.to_string(),
            self.unschedulable.to_string(),
            self.mean_pending_delay.to_string(),
            self.demand_scale.to_string(),
        ]
    }
}

pub fn write_metrics_csv<W: Write>(out: W, metrics: &[TickMetrics]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRICS_HEADER)?;
    for m in metrics {
        w.write_record(m.record())?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(out: W, summary: &SummaryReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    w.write_record(summary.record())?;
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
