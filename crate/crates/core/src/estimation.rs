//! Node load estimation and the QoS-driven estimation penalty.
//!
//! Usage-based policies plan against `P * L_hat`, where `L_hat` comes from a
//! [`LoadEstimator`] and `P` is tuned by a [`PenaltyController`]: while the
//! cluster meets its QoS target `P` decays geometrically towards `p_min`, and
//! when QoS drops below target and keeps falling the margin `P - 1` grows by
//! a factor of `1 + beta`.

use crate::domain::{ClusterConfig, NodeState, ResourceVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadEstimate {
    pub node_id: usize,
    pub l_hat: ResourceVector,
    pub sampled_at: Option<f64>,
}

pub trait LoadEstimator {
    fn estimate(&self, node: &NodeState) -> LoadEstimate;
}

/// Uses the last measured usage as the estimate.
#[derive(Debug, Clone, Copy, Default)]
pub struct CurrentUsage;

impl LoadEstimator for CurrentUsage {
    fn estimate(&self, node: &NodeState) -> LoadEstimate {
        estimate_load(node)
    }
}

/// Current-usage estimate; a node without any sample yet reads as idle.
pub fn estimate_load(node: &NodeState) -> LoadEstimate {
    LoadEstimate {
        node_id: node.node_id,
        l_hat: node.measured_load().unwrap_or(ResourceVector::ZERO),
        sampled_at: node.measured_at(),
    }
}

/// Planning load `p * L_hat`. Not capped at capacity.
pub fn effective_load(estimate: &LoadEstimate, p: f64) -> ResourceVector {
    estimate.l_hat.scale(p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyController {
    p: f64,
    p_min: f64,
    alpha: f64,
    beta: f64,
    last_q: f64,
    rho: f64,
}

impl PenaltyController {
    pub fn new(p0: f64, p_min: f64, alpha: f64, beta: f64, rho: f64) -> Result<Self> {
        if !(p_min >= 1.0 && p0 >= p_min && p0.is_finite()) {
            return Err(Error::InvalidConfig("require p0 >= p_min >= 1".into()));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidConfig("alpha must be in (0, 1)".into()));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidConfig("beta must be positive".into()));
        }
        Ok(PenaltyController {
            p: p0,
            p_min,
            alpha,
            beta,
            last_q: 1.0,
            rho,
        })
    }

    pub fn from_config(config: &ClusterConfig) -> Result<Self> {
        Self::new(
            config.p0,
            config.p_min,
            config.alpha,
            config.beta,
            config.qos_target,
        )
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn p_min(&self) -> f64 {
        self.p_min
    }

    pub fn last_q(&self) -> f64 {
        self.last_q
    }

    /// Feeds the latest cluster QoS and returns the new penalty.
    pub fn update(&mut self, q_now: f64) -> f64 {
        if q_now > self.rho {
            self.p = (self.p * self.alpha).max(self.p_min);
        } else if q_now < self.rho && q_now < self.last_q {
            self.p += self.beta * (self.p - 1.0);
        }
        self.last_q = q_now;
        self.p
    }
}

/// Functional form of [`PenaltyController::update`].
pub fn update_penalty(controller: &mut PenaltyController, q_now: f64) -> f64 {
    controller.update(q_now)
}
