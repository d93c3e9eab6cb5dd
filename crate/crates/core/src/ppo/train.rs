use std::io::Write;

use rand::Rng;

use crate::config::RunConfig;
use crate::error::Result;
use crate::gnn::{init_params, GnnParams};
use crate::metrics::{EpisodeSummary, SeedAverage};
use crate::policy::{run_episode, Controller};
use crate::rng::{self, Domain};
use crate::sim::build_world;

use super::{collect_rollout, ppo_update, Adam, UpdateStats};

/// One line of the training curve. Evaluation fields are present only on
/// updates where an evaluation ran.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub update_index: u64,
    pub env_days: u64,
    pub episode_reward: Option<f64>,
    pub eval: Option<SeedAverage>,
}

impl CurveRow {
    pub const CSV_HEADER: &'static str =
        "update_index,env_days_consumed,mean_episode_reward,eval_I,eval_Q,eval_Score";

    pub fn write_csv<W: Write>(rows: &[CurveRow], mut w: W, preamble: &[String]) -> Result<()> {
        for line in preamble {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in rows {
            let reward = r.episode_reward.map(|x| x.to_string()).unwrap_or_default();
            let (i, q, s) = match &r.eval {
                Some(e) => (
                    e.infections.to_string(),
                    e.cost.to_string(),
                    e.score.to_string(),
                ),
                None => Default::default(),
            };
            writeln!(w, "{},{},{reward},{i},{q},{s}", r.update_index, r.env_days)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub initial: GnnParams,
    pub initial_eval: SeedAverage,
    /// Parameters with the lowest evaluation Score seen.
    pub best: GnnParams,
    pub best_eval: SeedAverage,
    pub last: GnnParams,
    pub curve: Vec<CurveRow>,
    pub updates: Vec<UpdateStats>,
    pub env_days: u64,
    pub guard_triggers: u64,
}

/// Runs the learned policy on each evaluation seed for a full horizon.
pub fn evaluate_policy(
    params: &GnnParams,
    cfg: &RunConfig,
    seeds: &[u64],
) -> Result<(SeedAverage, Vec<EpisodeSummary>)> {
    let mut summaries = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let mut world = cfg.world.clone();
        world.rng_seed = seed;
        let r = run_episode(
            &world,
            Controller::Learned(params),
            &cfg.risk,
            &cfg.score,
            |_| Ok(()),
        )?;
        summaries.push(r.metrics.summary("", seed, false));
    }
    Ok((SeedAverage::of(&summaries), summaries))
}

/// Trains from a seed-determined initialization until `total_steps`
/// environment days have been simulated.
pub fn train(cfg: &RunConfig, seed: u64) -> Result<TrainOutcome> {
    cfg.validate()?;
    let tc = &cfg.train;
    let initial = init_params(seed, &cfg.model)?;
    let mut params = initial.clone();
    let mut adam = Adam::new(&params, tc.learning_rate);

    let (initial_eval, _) = evaluate_policy(&params, cfg, &tc.eval_seeds)?;
    let mut best = params.clone();
    let mut best_eval = initial_eval;
    let mut curve = vec![CurveRow {
        update_index: 0,
        env_days: 0,
        episode_reward: None,
        eval: Some(initial_eval),
    }];
    let mut updates = Vec::new();
    let mut env_days = 0u64;
    let mut guard_triggers = 0;
    let mut update = 0u64;
    while env_days < tc.total_steps {
        let episode_seed: u64 = rng::stream(seed, Domain::Training, update, 0).random();
        let mut world_cfg = cfg.world.clone();
        world_cfg.rng_seed = episode_seed;
        let mut world = build_world(&world_cfg)?;
        let rollout = collect_rollout(&mut world, &params, &cfg.risk, &cfg.score, tc)?;
        env_days += rollout.metrics.days_simulated() as u64;
        guard_triggers += rollout.guard_triggered as u64;
        update += 1;
        updates.push(ppo_update(
            &mut params,
            &mut adam,
            &rollout.buffer,
            tc,
            seed,
            update,
        )?);

        let last = env_days >= tc.total_steps;
        let eval = if update.is_multiple_of(tc.eval_interval as u64) || last {
            let (avg, _) = evaluate_policy(&params, cfg, &tc.eval_seeds)?;
            if avg.score < best_eval.score {
                best_eval = avg;
                best = params.clone();
            }
            Some(avg)
        } else {
            None
        };
        curve.push(CurveRow {
            update_index: update,
            env_days,
            episode_reward: Some(rollout.buffer.total_reward()),
            eval,
        });
    }
    Ok(TrainOutcome {
        initial,
        initial_eval,
        best,
        best_eval,
        last: params,
        curve,
        updates,
        env_days,
        guard_triggers,
    })
}
