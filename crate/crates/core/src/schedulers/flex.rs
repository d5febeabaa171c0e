//! Usage-based placement: filter nodes on penalized estimated load, score the
//! survivors on headroom and job spread, take the best.

use crate::domain::{dominant_fraction, resource_le, NodeState, ResourceVector, TaskSpec};

/// Relative weight of the two scoring terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreWeights {
    pub load: f64,
    pub spread: f64,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        ScoreWeights {
            load: 0.7,
            spread: 0.3,
        }
    }
}

/// Penalized planning load of a node: `p * L_hat` plus the requests of tasks
/// the last sample has not seen yet.
pub fn planning_load(node: &NodeState, p: f64) -> ResourceVector {
    node.estimated_load().scale(p) + node.unsampled_requests()
}

/// Capacity predicate of the usage-based policies.
pub fn flex_fits(task: &TaskSpec, node: &NodeState, p: f64) -> bool {
    resource_le(&(planning_load(node, p) + task.request), &node.capacity)
}

/// Ids of every node whose penalized load leaves room for the task's request.
pub fn flex_filter(task: &TaskSpec, nodes: &[NodeState], p: f64) -> Vec<usize> {
    nodes
        .iter()
        .filter(|n| flex_fits(task, n, p))
        .map(|n| n.node_id)
        .collect()
}

/// Higher is better. Prefers lightly loaded nodes and nodes running few
/// tasks of the same job.
pub fn flex_score(task: &TaskSpec, node: &NodeState, p: f64, weights: &ScoreWeights) -> f64 {
    let load = dominant_fraction(&planning_load(node, p), &node.capacity).unwrap_or(f64::INFINITY);
    let same = node.same_job_count(task.job_id) as f64;
    weights.load * (1.0 - load) + weights.spread / (1.0 + same)
}

/// Index into `nodes` of the best passing node; ties go to the lowest node id.
pub fn flex_select(
    task: &TaskSpec,
    nodes: &[NodeState],
    p: f64,
    weights: &ScoreWeights,
) -> Option<usize> {
    let mut best: Option<(f64, usize, usize)> = None;
    for (idx, node) in nodes.iter().enumerate() {
        if !flex_fits(task, node, p) {
            continue;
        }
        let score = flex_score(task, node, p, weights);
        let better = match best {
            None => true,
            Some((s, id, _)) => score > s || (score == s && node.node_id < id),
        };
        if better {
            best = Some((score, node.node_id, idx));
        }
    }
    best.map(|(_, _, idx)| idx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{JobId, TaskId};

    fn cap() -> ResourceVector {
        ResourceVector::new(64.0, 128.0)
    }

    fn node_with_load(id: usize, load: ResourceVector) -> NodeState {
        let mut n = NodeState::new(id, cap());
        n.record_sample(load, 0.0);
        n.set_estimate(load);
        n
    }

    fn task(job: u64, r: ResourceVector) -> TaskSpec {
        TaskSpec::new(TaskId(100), JobId(job), 0.0, 60.0, r).unwrap()
    }

    #[test]
    fn filter_examples() {
        let n = node_with_load(0, ResourceVector::new(30.0, 60.0));
        let nodes = [n];
        assert_eq!(
            flex_filter(&task(1, ResourceVector::new(10.0, 20.0)), &nodes, 1.5),
            vec![0]
        );
        assert!(flex_filter(&task(1, ResourceVector::new(20.0, 20.0)), &nodes, 1.5).is_empty());

        let empty = [NodeState::new(4, cap())];
        assert_eq!(flex_filter(&task(1, cap()), &empty, 1.0), vec![4]);
    }

    #[test]
    fn score_examples() {
        let w = ScoreWeights::default();
        let empty = NodeState::new(0, cap());
        assert!(
            (flex_score(&task(1, ResourceVector::new(1.0, 1.0)), &empty, 1.5, &w) - 1.0).abs()
                < 1e-12
        );

        // p * L_hat = (32, 40): cpu dominates at 0.5
        let half = node_with_load(1, ResourceVector::new(16.0, 20.0));
        let s = flex_score(&task(1, ResourceVector::new(1.0, 1.0)), &half, 2.0, &w);
        // independent recomputation: 0.7 * (1 - 32/64) + 0.3 * 1/(1+0)
        let by_hand = 0.7 * (1.0 - 32.0 / 64.0) + 0.3 * (1.0 / (1.0 + 0.0));
        assert!((s - 0.65).abs() < 1e-12);
        assert!((s - by_hand).abs() < 1e-15);
    }

    #[test]
    fn spread_term_breaks_equal_load() {
        let w = ScoreWeights::default();
        let load = ResourceVector::new(16.0, 32.0);
        let mut crowded = node_with_load(0, load);
        for i in 0..2 {
            let t = TaskSpec::new(
                TaskId(i),
                JobId(9),
                0.0,
                10.0,
                ResourceVector::new(1.0, 1.0),
            )
            .unwrap();
            crowded.place(&t, 0.0);
            crowded.record_sample(load, 0.0);
        }
        let fresh = node_with_load(1, load);
        let t = task(9, ResourceVector::new(1.0, 1.0));
        let s0 = flex_score(&t, &crowded, 1.0, &w);
        let s1 = flex_score(&t, &fresh, 1.0, &w);
        assert!((s0 - (0.7 * 0.75 + 0.1)).abs() < 1e-12);
        assert!((s1 - (0.7 * 0.75 + 0.3)).abs() < 1e-12);
        assert_eq!(flex_select(&t, &[crowded, fresh], 1.0, &w), Some(1));
    }

    #[test]
    fn ties_go_to_lowest_id() {
        let w = ScoreWeights::default();
        let nodes = [NodeState::new(0, cap()), NodeState::new(1, cap())];
        assert_eq!(
            flex_select(&task(1, ResourceVector::new(1.0, 1.0)), &nodes, 1.0, &w),
            Some(0)
        );
    }

    #[test]
    fn unsampled_requests_count_unpenalized() {
        let mut n = node_with_load(0, ResourceVector::new(20.0, 0.0));
        let t = TaskSpec::new(
            TaskId(1),
            JobId(1),
            0.0,
            10.0,
            ResourceVector::new(10.0, 1.0),
        )
        .unwrap();
        n.place(&t, 5.0);
        assert_eq!(planning_load(&n, 2.0), ResourceVector::new(50.0, 1.0));
        assert!(flex_fits(&task(2, ResourceVector::new(14.0, 1.0)), &n, 2.0));
        assert!(!flex_fits(
            &task(2, ResourceVector::new(14.5, 1.0)),
            &n,
            2.0
        ));
    }
}
