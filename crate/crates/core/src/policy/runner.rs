use crate::config::WorldConfig;
use crate::error::Result;
use crate::gnn::{build_features, evaluate, GnnParams};
use crate::metrics::{EpisodeMetrics, ScoreConfig};
use crate::risk::{estimate_risk, RiskConfig, RiskVector};
use crate::sim::{build_world, DayOutcome, InterventionAction, WorldState};

use super::{select_actions, Baseline, ThresholdMatrix};

/// What chooses the daily actions.
#[derive(Debug, Clone, Copy)]
pub enum Controller<'a> {
    Baseline(Baseline),
    Learned(&'a GnnParams),
}

/// Everything decided on one day, handed to the runner's observer.
#[derive(Debug, Clone)]
pub struct DayTrace {
    pub day: u32,
    pub intervention_active: bool,
    pub risk: RiskVector,
    /// Present only for a learned controller on active days.
    pub thresholds: Option<ThresholdMatrix>,
    pub actions: Vec<InterventionAction>,
}

/// Chooses today's actions. Before interventions start everyone is left
/// alone regardless of controller.
pub fn decide(
    world: &WorldState,
    controller: Controller<'_>,
    risk_cfg: &RiskConfig,
) -> Result<DayTrace> {
    let obs = world.observe();
    let risk = estimate_risk(&obs, risk_cfg)?;
    let m = world.population();
    let mut trace = DayTrace {
        day: obs.day,
        intervention_active: obs.intervention_active,
        risk,
        thresholds: None,
        actions: vec![InterventionAction::NoIntervention; m],
    };
    if !obs.intervention_active {
        return Ok(trace);
    }
    match controller {
        Controller::Baseline(b) => {
            trace.actions = b.actions(&obs, &trace.risk, world.config().rng_seed)?;
        }
        Controller::Learned(params) => {
            let feats = build_features(&obs, &trace.risk, params.config.layers)?;
            let eval = evaluate(params, &feats)?;
            let thr = ThresholdMatrix::from_values(&eval.raw)?;
            trace.actions = select_actions(&trace.risk, &thr)?.actions;
            trace.thresholds = Some(thr);
        }
    }
    Ok(trace)
}

#[derive(Debug, Clone)]
pub struct EpisodeResult {
    pub metrics: EpisodeMetrics,
    pub outcomes: Vec<DayOutcome>,
    pub world: WorldState,
}

/// Runs one full episode on a fresh world built from `world_cfg`, calling
/// `on_day` with each day's decisions before they are applied.
pub fn run_episode(
    world_cfg: &WorldConfig,
    controller: Controller<'_>,
    risk_cfg: &RiskConfig,
    score_cfg: &ScoreConfig,
    mut on_day: impl FnMut(&DayTrace) -> Result<()>,
) -> Result<EpisodeResult> {
    let mut world = build_world(world_cfg)?;
    let mut metrics = EpisodeMetrics::new(*score_cfg);
    let mut outcomes = Vec::new();
    while !world.is_done() {
        let trace = decide(&world, controller, risk_cfg)?;
        on_day(&trace)?;
        let outcome = world.step_day(&trace.actions)?;
        metrics.accumulate_day(&outcome);
        outcomes.push(outcome);
    }
    Ok(EpisodeResult {
        metrics,
        outcomes,
        world,
    })
}
