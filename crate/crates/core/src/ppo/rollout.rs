use crate::error::Result;
use crate::gnn::{build_features, evaluate, GnnParams, StateFeatures};
use crate::metrics::{EpisodeMetrics, ScoreConfig};
use crate::policy::{select_actions, ThresholdMatrix};
use crate::risk::{estimate_risk, RiskConfig};
use crate::sim::{InterventionAction, WorldState};

use super::{compute_gae, compute_reward, TrainConfig};

/// One controlled day.
#[derive(Debug, Clone)]
pub struct Step {
    pub features: StateFeatures,
    pub actions: Vec<InterventionAction>,
    /// Sum of per-individual log-probabilities of `actions`.
    pub log_prob: f64,
    pub entropy: f64,
    pub value: f64,
    pub reward: f64,
    pub done: bool,
}

#[derive(Debug, Clone, Default)]
pub struct RolloutBuffer {
    pub steps: Vec<Step>,
    /// Raw (unnormalized) advantages, filled by [`RolloutBuffer::finish`].
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn finish(&mut self, gamma: f64, lambda: f64) {
        let rewards: Vec<f64> = self.steps.iter().map(|s| s.reward).collect();
        let values: Vec<f64> = self.steps.iter().map(|s| s.value).collect();
        let dones: Vec<bool> = self.steps.iter().map(|s| s.done).collect();
        let (adv, ret) = compute_gae(&rewards, &values, &dones, gamma, lambda);
        self.advantages = adv;
        self.returns = ret;
    }

    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }
}

#[derive(Debug, Clone)]
pub struct Rollout {
    pub buffer: RolloutBuffer,
    pub metrics: EpisodeMetrics,
    pub guard_triggered: bool,
}

/// Plays `world` to the horizon (or until the guard fires) under the
/// learned policy. Only days on which interventions are active enter the
/// buffer.
pub fn collect_rollout(
    world: &mut WorldState,
    params: &GnnParams,
    risk_cfg: &RiskConfig,
    score_cfg: &ScoreConfig,
    cfg: &TrainConfig,
) -> Result<Rollout> {
    let m = world.population();
    let mut buffer = RolloutBuffer::default();
    let mut metrics = EpisodeMetrics::new(*score_cfg);
    let mut guard_triggered = false;
    while !world.is_done() {
        let obs = world.observe();
        let mut pending = None;
        let actions = if obs.intervention_active {
            let risk = estimate_risk(&obs, risk_cfg)?;
            let features = build_features(&obs, &risk, params.config.layers)?;
            let eval = evaluate(params, &features)?;
            let thr = ThresholdMatrix::from_values(&eval.raw)?;
            let decision = select_actions(&risk, &thr)?;
            let actions = decision.actions.clone();
            pending = Some(Step {
                features,
                log_prob: decision.total_log_prob(),
                entropy: decision.mean_entropy(),
                actions: decision.actions,
                value: eval.value,
                reward: 0.0,
                done: false,
            });
            actions
        } else {
            vec![InterventionAction::NoIntervention; m]
        };
        let outcome = world.step_day(&actions)?;
        let delta_q = metrics.accumulate_day(&outcome);
        let guard = cfg.guard_enabled && outcome.new_infections > cfg.guard_threshold;
        if let Some(mut step) = pending {
            step.reward = compute_reward(outcome.new_infections as f64, delta_q, cfg);
            step.done = world.is_done();
            buffer.steps.push(step);
        }
        if guard {
            guard_triggered = true;
            if let Some(last) = buffer.steps.last_mut() {
                last.reward += cfg.guard_penalty;
                last.done = true;
            }
            break;
        }
    }
    if let Some(last) = buffer.steps.last_mut() {
        last.done = true;
    }
    buffer.finish(cfg.gamma, cfg.gae_lambda);
    Ok(Rollout {
        buffer,
        metrics,
        guard_triggered,
    })
}
