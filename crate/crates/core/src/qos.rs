//! Task-level and cluster-level quality of service.

use std::collections::BTreeMap;

use crate::domain::{ResourceVector, TaskId};

/// Slack for floating-point round-off when comparing an allocation against
/// the demand or request it was derived from.
const QOS_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct QosSample {
    pub time: f64,
    pub q_per_task: BTreeMap<TaskId, u8>,
    pub cluster_q: f64,
    pub violated: bool,
}

impl QosSample {
    pub fn new(time: f64, q_per_task: BTreeMap<TaskId, u8>, rho_j: f64, rho: f64) -> Self {
        let qs: Vec<f64> = q_per_task.values().map(|&q| f64::from(q)).collect();
        let cluster_q = cluster_qos(&qs, rho_j);
        QosSample {
            time,
            q_per_task,
            cluster_q,
            violated: cluster_q < rho,
        }
    }
}

fn covers(have: &ResourceVector, need: &ResourceVector) -> bool {
    have.cpu + QOS_EPS >= need.cpu && have.mem + QOS_EPS >= need.mem
}

/// 1 when the allocation meets either the full demand or the full request.
pub fn task_qos(
    request: &ResourceVector,
    demand: &ResourceVector,
    allocated: &ResourceVector,
) -> u8 {
    u8::from(covers(allocated, demand) || covers(allocated, request))
}

/// Fraction of tasks whose QoS reaches `rho_j`; an empty set counts as satisfied.
pub fn cluster_qos(q_values: &[f64], rho_j: f64) -> f64 {
    if q_values.is_empty() {
        return 1.0;
    }
    let satisfied = q_values.iter().filter(|&&q| q >= rho_j).count();
    satisfied as f64 / q_values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation::{allocate_node, AllocationInput};
    use proptest::prelude::*;

    fn rv(cpu: f64, mem: f64) -> ResourceVector {
        ResourceVector::new(cpu, mem)
    }

    #[test]
    fn task_qos_examples() {
        assert_eq!(task_qos(&rv(5.0, 4.0), &rv(6.0, 2.0), &rv(6.0, 2.0)), 1);
        assert_eq!(task_qos(&rv(5.0, 4.0), &rv(8.0, 6.0), &rv(5.0, 4.0)), 1);
        assert_eq!(task_qos(&rv(5.0, 4.0), &rv(8.0, 6.0), &rv(4.9, 4.0)), 0);
    }

    #[test]
    fn mixed_shortfall_is_a_violation() {
        // demand below request on cpu, above on mem, mem only partly served
        assert_eq!(task_qos(&rv(4.0, 4.0), &rv(2.0, 8.0), &rv(2.0, 3.0)), 0);
    }

    #[test]
    fn cluster_qos_examples() {
        let mut qs = vec![1.0; 99];
        qs.push(0.0);
        assert!((cluster_qos(&qs, 1.0) - 0.99).abs() < 1e-15);
        assert_eq!(cluster_qos(&[], 1.0), 1.0);
        assert_eq!(cluster_qos(&[1.0, 1.0, 1.0], 1.0), 1.0);
    }

    #[test]
    fn sample_flags_violation() {
        let q: BTreeMap<TaskId, u8> = (0..10).map(|i| (TaskId(i), u8::from(i != 0))).collect();
        let s = QosSample::new(0.0, q, 1.0, 0.99);
        assert!((s.cluster_q - 0.9).abs() < 1e-12);
        assert!(s.violated);
    }

    proptest! {
        #[test]
        fn task_qos_monotone_in_allocation(
            r in (0.0..10.0f64, 0.0..10.0f64),
            d in (0.0..10.0f64, 0.0..10.0f64),
            a in (0.0..10.0f64, 0.0..10.0f64),
            extra in (0.0..5.0f64, 0.0..5.0f64),
        ) {
            let (r, d, a) = (rv(r.0, r.1), rv(d.0, d.1), rv(a.0, a.1));
            let more = a + rv(extra.0, extra.1);
            prop_assert!(task_qos(&r, &d, &more) >= task_qos(&r, &d, &a));
        }

        #[test]
        fn cluster_qos_bounded_and_monotone(qs in proptest::collection::vec(0u8..=1, 0..50)) {
            let qs: Vec<f64> = qs.into_iter().map(f64::from).collect();
            let q = cluster_qos(&qs, 1.0);
            prop_assert!((0.0..=1.0).contains(&q));
            let mut more = qs.clone();
            more.push(1.0);
            prop_assert!(cluster_qos(&more, 1.0) >= q);
        }

        #[test]
        fn case_one_satisfies_everyone(
            tasks in proptest::collection::vec(((0.0..10.0f64, 0.0..10.0f64), (0.0..6.0f64, 0.0..12.0f64)), 1..10),
        ) {
            let cap = rv(64.0, 128.0);
            let inputs: Vec<AllocationInput> = tasks.iter().enumerate().map(|(i, (r, d))| AllocationInput {
                task_id: TaskId(i as u64),
                request: rv(r.0, r.1),
                demand: rv(d.0, d.1),
            }).collect();
            let res = allocate_node(cap, &inputs).unwrap();
            for t in &inputs {
                prop_assert_eq!(task_qos(&t.request, &t.demand, &res.allocations[&t.task_id]), 1);
            }
        }
    }
}
