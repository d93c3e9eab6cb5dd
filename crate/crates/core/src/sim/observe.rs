use super::{is_weekend, HealthState, InterventionAction, SocialGraph, VisitHistory, WorldState};

/// Health as the policy maker sees it. Asymptomatic infections are
/// indistinguishable from susceptible individuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VisibleHealth {
    NotDiscovered,
    /// Symptomatic and hospitalized.
    Discovered,
    Recovered,
}

impl VisibleHealth {
    pub fn index(self) -> usize {
        match self {
            VisibleHealth::NotDiscovered => 0,
            VisibleHealth::Discovered => 1,
            VisibleHealth::Recovered => 2,
        }
    }

    /// Whether the individual is a known (current or past) case.
    pub fn ever_discovered(self) -> bool {
        self != VisibleHealth::NotDiscovered
    }
}

impl From<HealthState> for VisibleHealth {
    fn from(h: HealthState) -> Self {
        match h {
            HealthState::Susceptible | HealthState::Asymptomatic { .. } => {
                VisibleHealth::NotDiscovered
            }
            HealthState::Symptomatic { .. } => VisibleHealth::Discovered,
            HealthState::Recovered => VisibleHealth::Recovered,
        }
    }
}

/// Policy-visible snapshot taken at the start of a day.
#[derive(Debug, Clone)]
pub struct Observation<'a> {
    pub day: u32,
    pub weekend: bool,
    pub intervention_active: bool,
    pub n_areas: usize,
    pub health: Vec<VisibleHealth>,
    pub actions: Vec<InterventionAction>,
    pub history: &'a VisitHistory,
    pub social: &'a SocialGraph,
}

impl<'a> Observation<'a> {
    pub fn population(&self) -> usize {
        self.health.len()
    }
}

impl WorldState {
    pub fn observe(&self) -> Observation<'_> {
        Observation {
            day: self.day(),
            weekend: is_weekend(self.day()),
            intervention_active: self.intervention_active(),
            n_areas: self.n_areas(),
            health: self.individuals().iter().map(|p| p.health.into()).collect(),
            actions: self
                .individuals()
                .iter()
                .map(|p| p.current_action)
                .collect(),
            history: self.history(),
            social: self.social(),
        }
    }
}
