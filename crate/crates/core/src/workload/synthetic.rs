//! Seeded synthetic workloads.
//!
//! Tasks arrive as a Poisson process and are grouped into jobs of
//! consecutive arrivals. Durations are lognormal, requests uniform. Each task
//! draws a demand/request ratio per dimension from a normal distribution
//! truncated at zero; every sample interval the demand is that ratio times
//! the request, multiplied by `burst_scale` when the task's job is bursting.
//! Bursts are decided per job and sample index, so tasks of one job that
//! start together also peak together. The base ratio is scaled down so the
//! long-run mean including bursts stays at `demand_ratio_mean`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal, Normal, Uniform};

use crate::domain::{DemandSeries, JobId, ResourceVector, TaskId, TaskSpec};
use crate::error::{Error, Result};
use crate::workload::Workload;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_tasks: usize,
    /// Mean task arrivals per second.
    pub arrival_rate: f64,
    /// Location of ln(duration seconds).
    pub duration_log_mean: f64,
    pub duration_log_std: f64,
    pub cpu_request_range: (f64, f64),
    pub mem_request_range: (f64, f64),
    pub demand_ratio_mean: f64,
    pub demand_ratio_std: f64,
    pub burst_prob: f64,
    pub burst_scale: f64,
    pub sample_interval: f64,
    /// Largest number of consecutive tasks sharing a job id.
    pub max_job_size: usize,
    /// Demand samples are clipped to this.
    pub node_capacity: ResourceVector,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_tasks: 1000,
            arrival_rate: 1.0,
            duration_log_mean: 1800f64.ln(),
            duration_log_std: 0.8,
            cpu_request_range: (0.5, 8.0),
            mem_request_range: (1.0, 16.0),
            demand_ratio_mean: 0.45,
            demand_ratio_std: 0.25,
            burst_prob: 0.05,
            burst_scale: 2.0,
            sample_interval: 300.0,
            max_job_size: 8,
            node_capacity: ResourceVector::new(64.0, 128.0),
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConfig(format!("synthetic workload: {m}")));
        if !(self.arrival_rate.is_finite() && self.arrival_rate > 0.0) {
            return fail(format!(
                "arrival rate {} must be positive",
                self.arrival_rate
            ));
        }
        if !(self.duration_log_mean.is_finite()
            && self.duration_log_std.is_finite()
            && self.duration_log_std >= 0.0)
        {
            return fail("duration log-normal parameters must be finite, std >= 0".into());
        }
        for (name, (lo, hi), cap) in [
            ("cpu", self.cpu_request_range, self.node_capacity.cpu),
            ("mem", self.mem_request_range, self.node_capacity.mem),
        ] {
            if !(lo > 0.0 && lo <= hi && hi <= cap) {
                return fail(format!(
                    "{name} request range [{lo}, {hi}] must satisfy 0 < lo <= hi <= {cap}"
                ));
            }
        }
        if !(self.demand_ratio_mean >= 0.0 && self.demand_ratio_mean.is_finite()) {
            return fail("demand ratio mean must be >= 0".into());
        }
        if !(self.demand_ratio_std >= 0.0 && self.demand_ratio_std.is_finite()) {
            return fail("demand ratio std must be >= 0".into());
        }
        if !(0.0..=1.0).contains(&self.burst_prob) {
            return fail("burst probability must be in [0, 1]".into());
        }
        if !(self.burst_scale > 0.0 && self.burst_scale.is_finite()) {
            return fail("burst scale must be positive".into());
        }
        if !(self.sample_interval > 0.0 && self.sample_interval.is_finite()) {
            return fail("sample interval must be positive".into());
        }
        if self.max_job_size == 0 {
            return fail("max job size must be >= 1".into());
        }
        Ok(())
    }

    /// Mean of the per-task base ratio before bursts are applied.
    fn base_ratio_mean(&self) -> f64 {
        self.demand_ratio_mean / (1.0 + self.burst_prob * (self.burst_scale - 1.0))
    }
}

fn uniform(lo: f64, hi: f64) -> Result<Uniform<f64>> {
    Uniform::new_inclusive(lo, hi)
        .map_err(|e| Error::InvalidConfig(format!("uniform [{lo}, {hi}]: {e}")))
}

/// Generates a workload; a pure function of `spec`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Workload> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let inter_arrival =
        Exp::new(spec.arrival_rate).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let duration = LogNormal::new(spec.duration_log_mean, spec.duration_log_std)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let ratio = Normal::new(spec.base_ratio_mean(), spec.demand_ratio_std)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let cpu_req = uniform(spec.cpu_request_range.0, spec.cpu_request_range.1)?;
    let mem_req = uniform(spec.mem_request_range.0, spec.mem_request_range.1)?;

    let mut tasks = Vec::with_capacity(spec.n_tasks);
    let mut demands = std::collections::BTreeMap::new();
    let mut clock = 0.0;
    let mut job = 0u64;
    let mut left_in_job = 0usize;
    let mut job_bursts: Vec<bool> = Vec::new();

    for i in 0..spec.n_tasks {
        if left_in_job == 0 {
            job += 1;
            left_in_job = rng.random_range(1..=spec.max_job_size);
            job_bursts.clear();
        }
        left_in_job -= 1;

        clock += inter_arrival.sample(&mut rng);
        let life = duration.sample(&mut rng).max(1.0);
        let request = ResourceVector::new(cpu_req.sample(&mut rng), mem_req.sample(&mut rng));
        let base = ResourceVector::new(
            ratio.sample(&mut rng).max(0.0),
            ratio.sample(&mut rng).max(0.0),
        );

        let n_samples = (life / spec.sample_interval).ceil().max(1.0) as usize;
        while job_bursts.len() < n_samples {
            job_bursts.push(rng.random_bool(spec.burst_prob));
        }
        let samples: Vec<(f64, ResourceVector)> = (0..n_samples)
            .map(|k| {
                let scale = if job_bursts[k] { spec.burst_scale } else { 1.0 };
                let d = ResourceVector::new(request.cpu * base.cpu, request.mem * base.mem)
                    .scale(scale);
                (k as f64 * spec.sample_interval, d.min(&spec.node_capacity))
            })
            .collect();

        let id = TaskId(i as u64);
        tasks.push(TaskSpec::new(id, JobId(job), clock, life, request)?);
        demands.insert(id, DemandSeries::new(id, samples)?);
    }
    Workload::new(tasks, demands)
}

impl fmt::Display for SyntheticSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n={},rate={},dur_mu={},dur_sigma={},cpu={}:{},mem={}:{},ratio={},ratio_std={},burst_p={},burst_scale={},interval={},job_max={},seed={}",
            self.n_tasks,
            self.arrival_rate,
            self.duration_log_mean,
            self.duration_log_std,
            self.cpu_request_range.0,
            self.cpu_request_range.1,
            self.mem_request_range.0,
            self.mem_request_range.1,
            self.demand_ratio_mean,
            self.demand_ratio_std,
            self.burst_prob,
            self.burst_scale,
            self.sample_interval,
            self.max_job_size,
            self.seed,
        )
    }
}

/// `key=value` pairs separated by commas, e.g. `n=5000,rate=1.2,ratio=0.45`.
/// Unspecified keys keep their defaults. Ranges are written `lo:hi`.
impl FromStr for SyntheticSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut spec = SyntheticSpec::default();
        let bad = |m: String| Error::InvalidConfig(format!("--synthetic: {m}"));
        for pair in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| bad(format!("'{pair}' is not key=value")))?;
            let num = |v: &str| {
                v.parse::<f64>()
                    .map_err(|_| bad(format!("{key}: '{v}' is not a number")))
            };
            let int = |v: &str| {
                v.parse::<u64>()
                    .map_err(|_| bad(format!("{key}: '{v}' is not an integer")))
            };
            let range = |v: &str| -> Result<(f64, f64)> {
                let (lo, hi) = v
                    .split_once(':')
                    .ok_or_else(|| bad(format!("{key}: expected lo:hi")))?;
                Ok((num(lo)?, num(hi)?))
            };
            match key {
                "n" => spec.n_tasks = int(value)? as usize,
                "rate" => spec.arrival_rate = num(value)?,
                "dur_mu" => spec.duration_log_mean = num(value)?,
                "dur_median" => spec.duration_log_mean = num(value)?.ln(),
                "dur_sigma" => spec.duration_log_std = num(value)?,
                "cpu" => spec.cpu_request_range = range(value)?,
                "mem" => spec.mem_request_range = range(value)?,
                "ratio" => spec.demand_ratio_mean = num(value)?,
                "ratio_std" => spec.demand_ratio_std = num(value)?,
                "burst_p" => spec.burst_prob = num(value)?,
                "burst_scale" => spec.burst_scale = num(value)?,
                "interval" => spec.sample_interval = num(value)?,
                "job_max" => spec.max_job_size = int(value)? as usize,
                "seed" => spec.seed = int(value)?,
                other => return Err(bad(format!("unknown key '{other}'"))),
            }
        }
        Ok(spec)
    }
}
