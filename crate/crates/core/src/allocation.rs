//! Per-node weighted fair share allocation.
//!
//! Each resource dimension is allocated independently:
//!
//! 1. total demand fits: every task gets its demand;
//! 2. total demand exceeds capacity but total request fits: every task is
//!    guaranteed `min(request, demand)` and the leftover is water-filled over
//!    the excess demand, weighted by request;
//! 3. total request exceeds capacity: capacity is water-filled by request up
//!    to `min(request, demand)`, then whatever remains is water-filled again
//!    over the still-unmet demand.

use std::collections::BTreeMap;

use crate::domain::{Dim, ResourceVector, TaskId};
use crate::error::{Error, Result};

/// Weight given to a task whose request is zero in the dimension being shared.
pub const ZERO_REQUEST_WEIGHT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AllocationResult {
    pub allocations: BTreeMap<TaskId, ResourceVector>,
    /// Portion of each allocation above the task's request.
    pub surplus_share: BTreeMap<TaskId, ResourceVector>,
}

impl AllocationResult {
    pub fn total(&self) -> ResourceVector {
        self.allocations.values().sum()
    }
}

/// One task's inputs to [`allocate_node`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocationInput {
    pub task_id: TaskId,
    pub request: ResourceVector,
    pub demand: ResourceVector,
}

/// Splits `budget` proportionally to `weights`, never giving an entry more
/// than its cap. Entries that would exceed their cap are frozen there and the
/// rest is redistributed; at most `n` rounds.
pub fn water_fill(budget: f64, weights: &[f64], caps: &[f64]) -> Result<Vec<f64>> {
    if weights.len() != caps.len() {
        return Err(Error::InvalidWaterFill(format!(
            "{} weights but {} caps",
            weights.len(),
            caps.len()
        )));
    }
    if !(budget.is_finite() && budget >= 0.0) {
        return Err(Error::InvalidWaterFill(format!("budget {budget}")));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(Error::InvalidWaterFill(format!("weight {w}")));
    }
    if let Some(c) = caps.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
        return Err(Error::InvalidWaterFill(format!("cap {c}")));
    }

    let n = weights.len();
    let mut shares = vec![0.0; n];
    let mut active: Vec<usize> = (0..n).filter(|&k| caps[k] > 0.0).collect();
    let mut remaining = budget;

    while !active.is_empty() && remaining > 0.0 {
        let weight_sum: f64 = active.iter().map(|&k| weights[k]).sum();
        let level = remaining / weight_sum;
        let (capped, free): (Vec<usize>, Vec<usize>) =
            active.iter().partition(|&&k| level * weights[k] >= caps[k]);
        if capped.is_empty() {
            for &k in &free {
                shares[k] = level * weights[k];
            }
            break;
        }
        for &k in &capped {
            shares[k] = caps[k];
            remaining -= caps[k];
        }
        remaining = remaining.max(0.0);
        active = free;
    }
    Ok(shares)
}

fn share_weights(requests: &[f64]) -> Vec<f64> {
    requests
        .iter()
        .map(|&r| if r > 0.0 { r } else { ZERO_REQUEST_WEIGHT })
        .collect()
}

/// Allocates one dimension of one node.
fn allocate_dimension(capacity: f64, requests: &[f64], demands: &[f64]) -> Result<Vec<f64>> {
    let total_demand: f64 = demands.iter().sum();
    if total_demand <= capacity {
        return Ok(demands.to_vec());
    }
    let weights = share_weights(requests);
    let guaranteed: Vec<f64> = requests
        .iter()
        .zip(demands)
        .map(|(r, d)| r.min(*d))
        .collect();
    let total_request: f64 = requests.iter().sum();

    if total_request <= capacity {
        let leftover = (capacity - guaranteed.iter().sum::<f64>()).max(0.0);
        let excess: Vec<f64> = demands
            .iter()
            .zip(&guaranteed)
            .map(|(d, g)| (d - g).max(0.0))
            .collect();
        let extra = water_fill(leftover, &weights, &excess)?;
        return Ok(clamp_to_demand(
            guaranteed.iter().zip(extra).map(|(g, e)| g + e),
            demands,
        ));
    }

    let first = water_fill(capacity, &weights, &guaranteed)?;
    let remaining = (capacity - first.iter().sum::<f64>()).max(0.0);
    let unmet: Vec<f64> = demands
        .iter()
        .zip(&first)
        .map(|(d, a)| (d - a).max(0.0))
        .collect();
    let second = water_fill(remaining, &weights, &unmet)?;
    Ok(clamp_to_demand(
        first.iter().zip(second).map(|(a, b)| a + b),
        demands,
    ))
}

// Summing two passes can round one ulp past the demand.
fn clamp_to_demand(shares: impl Iterator<Item = f64>, demands: &[f64]) -> Vec<f64> {
    shares.zip(demands).map(|(a, d)| a.min(*d)).collect()
}

/// Splits a node's capacity among its running tasks.
pub fn allocate_node(
    capacity: ResourceVector,
    tasks: &[AllocationInput],
) -> Result<AllocationResult> {
    if !(capacity.cpu > 0.0 && capacity.mem > 0.0) {
        return Err(Error::DegenerateCapacity);
    }
    if let Some(t) = tasks
        .iter()
        .find(|t| !t.request.is_valid() || !t.demand.is_valid())
    {
        return Err(Error::InvalidTask {
            task_id: t.task_id.0,
            reason: "request and demand must be non-negative".into(),
        });
    }

    let mut per_task = vec![ResourceVector::ZERO; tasks.len()];
    for dim in Dim::ALL {
        let requests: Vec<f64> = tasks.iter().map(|t| t.request.get(dim)).collect();
        let demands: Vec<f64> = tasks.iter().map(|t| t.demand.get(dim)).collect();
        let shares = allocate_dimension(capacity.get(dim), &requests, &demands)?;
        for (alloc, share) in per_task.iter_mut().zip(shares) {
            alloc.set(dim, share);
        }
    }

    let mut result = AllocationResult::default();
    for (task, alloc) in tasks.iter().zip(per_task) {
        let surplus = ResourceVector::from_fn(|d| (alloc.get(d) - task.request.get(d)).max(0.0));
        result.allocations.insert(task.task_id, alloc);
        result.surplus_share.insert(task.task_id, surplus);
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent oracle: bisect for the water level `l` such that
    /// `sum(min(cap, l * w)) == min(budget, sum(caps))`.
    fn oracle_water_fill(budget: f64, weights: &[f64], caps: &[f64]) -> Vec<f64> {
        let target = budget.min(caps.iter().sum());
        let filled =
            |l: f64| -> f64 { weights.iter().zip(caps).map(|(w, c)| (l * w).min(*c)).sum() };
        let mut lo = 0.0;
        let mut hi = 1.0;
        while filled(hi) < target && hi < 1e300 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if filled(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        weights
            .iter()
            .zip(caps)
            .map(|(w, c)| (hi * w).min(*c))
            .collect()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn water_fill_examples() {
        let got = water_fill(1.0, &[5.0, 4.0], &[3.0, 2.0]).unwrap();
        let oracle = oracle_water_fill(1.0, &[5.0, 4.0], &[3.0, 2.0]);
        assert!(close(&got, &[5.0 / 9.0, 4.0 / 9.0], 1e-12));
        assert!(close(&got, &oracle, 1e-9));

        let got = water_fill(10.0, &[1.0, 1.0], &[2.0, 100.0]).unwrap();
        assert!(close(&got, &[2.0, 8.0], 1e-12));
        assert!(close(
            &got,
            &oracle_water_fill(10.0, &[1.0, 1.0], &[2.0, 100.0]),
            1e-9
        ));

        assert_eq!(
            water_fill(0.0, &[1.0, 2.0], &[3.0, 4.0]).unwrap(),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn water_fill_rejects_invalid_input() {
        assert!(matches!(
            water_fill(-1.0, &[1.0], &[1.0]),
            Err(Error::InvalidWaterFill(_))
        ));
        assert!(matches!(
            water_fill(1.0, &[-1.0], &[1.0]),
            Err(Error::InvalidWaterFill(_))
        ));
        assert!(matches!(
            water_fill(1.0, &[0.0], &[1.0]),
            Err(Error::InvalidWaterFill(_))
        ));
        assert!(matches!(
            water_fill(1.0, &[1.0], &[-1.0]),
            Err(Error::InvalidWaterFill(_))
        ));
        assert!(matches!(
            water_fill(1.0, &[1.0, 1.0], &[1.0]),
            Err(Error::InvalidWaterFill(_))
        ));
    }

    fn single(r: f64, d: f64) -> (ResourceVector, ResourceVector) {
        (ResourceVector::new(r, r), ResourceVector::new(d, d))
    }

    fn run(cap: f64, tasks: &[(f64, f64)]) -> Vec<f64> {
        let inputs: Vec<AllocationInput> = tasks
            .iter()
            .enumerate()
            .map(|(i, &(r, d))| {
                let (request, demand) = single(r, d);
                AllocationInput {
                    task_id: TaskId(i as u64),
                    request,
                    demand,
                }
            })
            .collect();
        let res = allocate_node(ResourceVector::new(cap, cap), &inputs).unwrap();
        res.allocations.values().map(|a| a.cpu).collect()
    }

    #[test]
    fn case_one_gives_demand() {
        assert_eq!(run(10.0, &[(5.0, 6.0), (3.0, 2.0)]), vec![6.0, 2.0]);
    }

    #[test]
    fn case_two_guarantees_then_shares() {
        let a = run(10.0, &[(5.0, 8.0), (4.0, 6.0)]);
        assert!((a[0] - (5.0 + 5.0 / 9.0)).abs() < 1e-9);
        assert!((a[1] - (4.0 + 4.0 / 9.0)).abs() < 1e-9);
    }

    #[test]
    fn case_three_shares_by_request() {
        let a = run(10.0, &[(8.0, 12.0), (6.0, 5.0)]);
        assert!((a[0] - 80.0 / 14.0).abs() < 1e-9);
        assert!((a[1] - 60.0 / 14.0).abs() < 1e-9);
    }

    #[test]
    fn case_three_second_pass_uses_leftover() {
        // first pass caps the small task at its demand, the rest spills over
        let a = run(10.0, &[(8.0, 12.0), (6.0, 1.0)]);
        assert!((a[1] - 1.0).abs() < 1e-12);
        assert!((a[0] - 9.0).abs() < 1e-9);
    }

    #[test]
    fn zero_request_task_is_not_starved() {
        let inputs = [
            AllocationInput {
                task_id: TaskId(1),
                request: ResourceVector::new(0.0, 4.0),
                demand: ResourceVector::new(2.0, 4.0),
            },
            AllocationInput {
                task_id: TaskId(2),
                request: ResourceVector::new(4.0, 4.0),
                demand: ResourceVector::new(4.0, 4.0),
            },
        ];
        let res = allocate_node(ResourceVector::new(5.0, 8.0), &inputs).unwrap();
        let a1 = res.allocations[&TaskId(1)];
        assert!(a1.cpu > 0.0);
        assert!((res.total().cpu - 5.0).abs() < 1e-9);
    }

    #[test]
    fn surplus_share_is_allocation_above_request() {
        let inputs = [AllocationInput {
            task_id: TaskId(1),
            request: ResourceVector::new(5.0, 4.0),
            demand: ResourceVector::new(6.0, 2.0),
        }];
        let res = allocate_node(ResourceVector::new(10.0, 10.0), &inputs).unwrap();
        assert_eq!(res.surplus_share[&TaskId(1)], ResourceVector::new(1.0, 0.0));
    }

    proptest! {
        #[test]
        fn water_fill_matches_oracle(
            budget in 0.0..100.0f64,
            entries in proptest::collection::vec((0.01..10.0f64, 0.0..20.0f64), 1..10),
        ) {
            let (w, c): (Vec<f64>, Vec<f64>) = entries.into_iter().unzip();
            let got = water_fill(budget, &w, &c).unwrap();
            let oracle = oracle_water_fill(budget, &w, &c);
            prop_assert!(close(&got, &oracle, 1e-7), "{:?} vs {:?}", got, oracle);
            let total: f64 = got.iter().sum();
            prop_assert!((total - budget.min(c.iter().sum())).abs() < 1e-9);
        }

        #[test]
        fn water_fill_is_scale_invariant(
            budget in 0.0..100.0f64,
            k in 0.01..100.0f64,
            entries in proptest::collection::vec((0.01..10.0f64, 0.0..20.0f64), 1..10),
        ) {
            let (w, c): (Vec<f64>, Vec<f64>) = entries.into_iter().unzip();
            let scaled: Vec<f64> = w.iter().map(|x| x * k).collect();
            let a = water_fill(budget, &w, &c).unwrap();
            let b = water_fill(budget, &scaled, &c).unwrap();
            prop_assert!(close(&a, &b, 1e-9));
        }

        #[test]
        fn water_fill_is_monotone_in_budget(
            budget in 0.0..100.0f64,
            more in 0.0..50.0f64,
            entries in proptest::collection::vec((0.01..10.0f64, 0.0..20.0f64), 1..10),
        ) {
            let (w, c): (Vec<f64>, Vec<f64>) = entries.into_iter().unzip();
            let a = water_fill(budget, &w, &c).unwrap();
            let b = water_fill(budget + more, &w, &c).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!(*y >= *x - 1e-9);
            }
        }
    }
}
