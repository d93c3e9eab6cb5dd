//! Proximal policy optimization over whole-population daily decisions.

mod adam;
mod rollout;
mod train;
mod update;

pub use adam::Adam;
pub use rollout::{collect_rollout, Rollout, RolloutBuffer, Step};
pub use train::{evaluate_policy, train, CurveRow, TrainOutcome};
pub use update::{ppo_update, UpdateStats};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub theta_i: f64,
    pub theta_q: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_eps: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub learning_rate: f64,
    pub max_grad_norm: f64,
    /// Environment days to consume.
    pub total_steps: u64,
    pub epochs_per_update: usize,
    pub minibatch_days: usize,
    /// Daily new infections above which the episode is cut short.
    pub guard_threshold: u64,
    pub guard_penalty: f64,
    pub guard_enabled: bool,
    /// Evaluate every this many updates.
    pub eval_interval: usize,
    pub eval_seeds: Vec<u64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            theta_i: 500.0,
            theta_q: 10_000.0,
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_eps: 0.2,
            entropy_coef: 0.01,
            value_coef: 0.5,
            learning_rate: 1e-4,
            max_grad_norm: 0.5,
            total_steps: 200_000,
            epochs_per_update: 4,
            minibatch_days: 16,
            guard_threshold: 250,
            guard_penalty: -100.0,
            guard_enabled: true,
            eval_interval: 10,
            eval_seeds: vec![101, 102, 103],
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("theta_i", self.theta_i),
            ("theta_q", self.theta_q),
            ("learning_rate", self.learning_rate),
            ("max_grad_norm", self.max_grad_norm),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(field, format!("{v} must be positive")));
            }
        }
        if !(self.clip_eps > 0.0 && self.clip_eps < 1.0) {
            return Err(Error::config("clip_eps", "must lie in (0, 1)"));
        }
        for (field, v) in [("gamma", self.gamma), ("gae_lambda", self.gae_lambda)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(field, "must lie in [0, 1]"));
            }
        }
        for (field, v) in [
            ("entropy_coef", self.entropy_coef),
            ("value_coef", self.value_coef),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(field, "must be non-negative"));
            }
        }
        if self.epochs_per_update == 0 {
            return Err(Error::config("epochs_per_update", "must be at least 1"));
        }
        if self.minibatch_days == 0 {
            return Err(Error::config("minibatch_days", "must be at least 1"));
        }
        if self.eval_interval == 0 {
            return Err(Error::config("eval_interval", "must be at least 1"));
        }
        if self.eval_seeds.is_empty() {
            return Err(Error::config("eval_seeds", "need at least one seed"));
        }
        if !self.guard_penalty.is_finite() {
            return Err(Error::config("guard_penalty", "must be finite"));
        }
        Ok(())
    }
}

/// Daily reward `−exp(ΔI/θ_I) − exp(ΔQ/θ_Q)`.
pub fn compute_reward(delta_i: f64, delta_q: f64, cfg: &TrainConfig) -> f64 {
    -(delta_i / cfg.theta_i).exp() - (delta_q / cfg.theta_q).exp()
}

/// Generalized advantage estimates and returns. `dones[t]` stops
/// bootstrapping from step `t + 1`; the last step is always treated as
/// terminal.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut running = 0.0;
    for t in (0..n).rev() {
        let terminal = dones[t] || t + 1 == n;
        let next_value = if terminal { 0.0 } else { values[t + 1] };
        if terminal {
            running = 0.0;
        }
        let delta = rewards[t] + gamma * next_value - values[t];
        running = delta + gamma * lambda * running;
        adv[t] = running;
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, returns)
}

/// Zero mean, unit variance; left centred only when the spread is zero.
pub fn normalize(xs: &[f64]) -> Vec<f64> {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return Vec::new();
    }
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    xs.iter()
        .map(|x| {
            if sd > 1e-12 {
                (x - mean) / sd
            } else {
                x - mean
            }
        })
        .collect()
}
