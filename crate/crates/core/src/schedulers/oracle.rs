use crate::error::{Error, Result};

pub const ORACLE_MAX_TASKS: usize = 12;
pub const ORACLE_MAX_NODES: usize = 4;

/// Exact minimum, over every assignment of `demands` to `n_nodes` nodes, of
/// the largest per-node sum. Exhaustive, so only for tiny instances.
pub fn optimal_max_load(demands: &[f64], n_nodes: usize) -> Result<f64> {
    if demands.len() > ORACLE_MAX_TASKS || n_nodes > ORACLE_MAX_NODES || n_nodes == 0 {
        return Err(Error::OracleLimitExceeded {
            tasks: demands.len(),
            nodes: n_nodes,
        });
    }
    if demands.is_empty() {
        return Ok(0.0);
    }
    let k = demands.len();
    let total = n_nodes.pow(k as u32);
    let mut best = f64::INFINITY;
    let mut assignment = vec![0usize; k];
    for _ in 0..total {
        let mut loads = [0.0f64; ORACLE_MAX_NODES];
        for (d, &node) in demands.iter().zip(&assignment) {
            loads[node] += d;
        }
        let worst = loads[..n_nodes].iter().copied().fold(0.0, f64::max);
        best = best.min(worst);

        // odometer increment over base-n digits
        for digit in assignment.iter_mut() {
            *digit += 1;
            if *digit < n_nodes {
                break;
            }
            *digit = 0;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(
            optimal_max_load(&[3.0, 3.0, 2.0, 2.0, 2.0], 2).unwrap(),
            6.0
        );
        assert_eq!(optimal_max_load(&[5.0], 3).unwrap(), 5.0);
        assert_eq!(optimal_max_load(&[1.0, 1.0, 1.0, 1.0], 2).unwrap(), 2.0);
        assert_eq!(optimal_max_load(&[], 2).unwrap(), 0.0);
    }

    #[test]
    fn limits() {
        assert!(matches!(
            optimal_max_load(&[1.0; 13], 2),
            Err(Error::OracleLimitExceeded { .. })
        ));
        assert!(optimal_max_load(&[1.0; 3], 5).is_err());
        assert!(optimal_max_load(&[1.0; 3], 0).is_err());
    }

    #[test]
    fn lower_bounds_hold() {
        let d = [7.0, 5.0, 4.0, 4.0, 3.0, 3.0, 1.0];
        let opt = optimal_max_load(&d, 3).unwrap();
        let total: f64 = d.iter().sum();
        assert!(opt >= total / 3.0);
        assert!(opt >= 7.0);
        assert_eq!(opt, 10.0);
    }
}
