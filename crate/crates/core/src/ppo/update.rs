use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::gnn::{backward, evaluate, GnnParams};
use crate::policy::{log_prob_entropy_grad, ThresholdMatrix};
use crate::rng::{self, Domain};

use super::{normalize, Adam, RolloutBuffer, TrainConfig};

/// Loss terms averaged over every minibatch of an update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    /// Largest |ratio − 1| over all days before any parameter change.
    pub initial_ratio_error: f64,
    pub max_grad_norm: f64,
    pub minibatches: usize,
}

impl UpdateStats {
    pub fn is_finite(&self) -> bool {
        [
            self.policy_loss,
            self.value_loss,
            self.entropy,
            self.initial_ratio_error,
            self.max_grad_norm,
        ]
        .iter()
        .all(|x| x.is_finite())
    }
}

struct DayEval {
    log_prob: f64,
    entropy: f64,
    value: f64,
}

fn day_terms(
    params: &GnnParams,
    buffer: &RolloutBuffer,
    t: usize,
) -> Result<(DayEval, ThresholdMatrix, crate::gnn::Evaluation)> {
    let step = &buffer.steps[t];
    let eval = evaluate(params, &step.features)?;
    let thr = ThresholdMatrix::from_values(&eval.raw)?;
    let m = step.actions.len();
    let mut log_prob = 0.0;
    let mut entropy = 0.0;
    for (i, a) in step.actions.iter().enumerate() {
        let c = thr.masses(i);
        log_prob += c[a.index()].ln();
        entropy += crate::policy::categorical_entropy(c);
    }
    let value = eval.value;
    Ok((
        DayEval {
            log_prob,
            entropy: entropy / m as f64,
            value,
        },
        thr,
        eval,
    ))
}

/// Clipped-surrogate PPO over the buffer's days. `update_index` keys the
/// minibatch shuffling.
pub fn ppo_update(
    params: &mut GnnParams,
    adam: &mut Adam,
    buffer: &RolloutBuffer,
    cfg: &TrainConfig,
    seed: u64,
    update_index: u64,
) -> Result<UpdateStats> {
    let n = buffer.len();
    let mut stats = UpdateStats::default();
    if n == 0 {
        return Ok(stats);
    }
    if buffer.advantages.len() != n || buffer.returns.len() != n {
        return Err(Error::contract("advantages have not been computed"));
    }
    let adv = normalize(&buffer.advantages);

    for t in 0..n {
        let (day, _, _) = day_terms(params, buffer, t)?;
        let err = ((day.log_prob - buffer.steps[t].log_prob).exp() - 1.0).abs();
        stats.initial_ratio_error = stats.initial_ratio_error.max(err);
    }

    let mut rng = rng::stream(seed, Domain::Training, update_index, 1);
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..cfg.epochs_per_update {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.minibatch_days) {
            let b = batch.len() as f64;
            let mut grads = params.zeros_like();
            let (mut pl, mut vl, mut ent) = (0.0, 0.0, 0.0);
            for &t in batch {
                let step = &buffer.steps[t];
                let (day, thr, eval) = day_terms(params, buffer, t)?;
                let ratio = (day.log_prob - step.log_prob).exp();
                let a = adv[t];
                let unclipped = ratio * a;
                let clipped = ratio.clamp(1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * a;
                pl += -unclipped.min(clipped);
                let d_logp = if unclipped <= clipped {
                    -a * ratio
                } else {
                    0.0
                };
                let verr = day.value - buffer.returns[t];
                vl += verr * verr;
                ent += day.entropy;

                let m = step.actions.len() as f64;
                let d_raw = log_prob_entropy_grad(
                    &thr,
                    &step.actions,
                    d_logp / b,
                    -cfg.entropy_coef / (m * b),
                );
                let d_value = 2.0 * cfg.value_coef * verr / b;
                let g = backward(params, &eval.cache, Some(&d_raw), d_value)?;
                grads.add_assign(&g)?;
            }
            let loss = (pl + cfg.value_coef * vl - cfg.entropy_coef * ent) / b;
            if !loss.is_finite() || !grads.is_finite() {
                return Err(Error::numeric(format!(
                    "non-finite loss {loss} in update {update_index}"
                )));
            }
            let norm = grads.norm_sqr().sqrt();
            stats.max_grad_norm = stats.max_grad_norm.max(norm);
            if norm > cfg.max_grad_norm {
                grads.scale(cfg.max_grad_norm / norm);
            }
            adam.step(params, &grads)?;
            stats.policy_loss += pl / b;
            stats.value_loss += vl / b;
            stats.entropy += ent / b;
            stats.minibatches += 1;
        }
    }
    let k = stats.minibatches as f64;
    stats.policy_loss /= k;
    stats.value_loss /= k;
    stats.entropy /= k;
    if !stats.is_finite() || !params.is_finite() {
        return Err(Error::numeric(format!(
            "non-finite state after update {update_index}"
        )));
    }
    Ok(stats)
}
