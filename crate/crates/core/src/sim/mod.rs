//! Hourly agent-based simulation of commuting, contact and disease
//! progression, controlled by one intervention action per individual per day.

mod history;
mod mobility;
mod observe;
mod world;

pub use history::{DayVisits, VisitHistory};
pub use mobility::{intervention_contact_filter, ContactFilter, DayPlan};
pub use observe::{Observation, VisibleHealth};
pub use world::{
    build_world, index_case_secondary_infections, DayCounts, DayOutcome, SocialGraph, WorldState,
};

use serde::{Deserialize, Serialize};

pub type AreaId = u32;
pub type PersonId = u32;

pub const HOURS_PER_DAY: usize = 24;
/// First and one-past-last work hour on weekdays.
pub const WORK_HOURS: std::ops::Range<usize> = 9..17;
/// Hour of the optional after-work commercial visit.
pub const AFTER_WORK_HOUR: usize = 17;
/// Weekend commercial visits start in this hour range and last two hours.
pub const WEEKEND_VISIT_START: std::ops::Range<usize> = 10..20;
pub const WEEKEND_VISIT_HOURS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HealthState {
    Susceptible,
    /// Infections acquired during day `d` take hold at the end of it, so
    /// `infected_day` is `d + 1`: the first day the individual is infectious.
    Asymptomatic {
        infected_day: u32,
    },
    /// Symptomatic cases are hospitalized from onset until recovery.
    Symptomatic {
        onset_day: u32,
    },
    Recovered,
}

impl HealthState {
    /// Infected and not yet discovered, including infections that have not
    /// taken hold yet.
    pub fn is_infectious(self) -> bool {
        matches!(self, HealthState::Asymptomatic { .. })
    }

    pub fn is_infectious_on(self, day: u32) -> bool {
        matches!(self, HealthState::Asymptomatic { infected_day } if infected_day <= day)
    }

    pub fn is_hospitalized(self) -> bool {
        matches!(self, HealthState::Symptomatic { .. })
    }

    /// Position along Susceptible → Asymptomatic → Symptomatic → Recovered.
    pub fn stage(self) -> u8 {
        match self {
            HealthState::Susceptible => 0,
            HealthState::Asymptomatic { .. } => 1,
            HealthState::Symptomatic { .. } => 2,
            HealthState::Recovered => 3,
        }
    }
}

/// Daily intervention, ordered by stringency.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[repr(u8)]
pub enum InterventionAction {
    #[default]
    NoIntervention = 0,
    /// Stay in the residential area all day.
    Confine = 1,
    /// Stay in the residential area, no stranger contact.
    Quarantine = 2,
    /// No contact at all.
    Isolate = 3,
}

impl InterventionAction {
    pub const ALL: [InterventionAction; 4] = [
        InterventionAction::NoIntervention,
        InterventionAction::Confine,
        InterventionAction::Quarantine,
        InterventionAction::Isolate,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            InterventionAction::NoIntervention => "no_intervention",
            InterventionAction::Confine => "confine",
            InterventionAction::Quarantine => "quarantine",
            InterventionAction::Isolate => "isolate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AreaCategory {
    Residential,
    Working,
    Commercial,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Area {
    pub id: AreaId,
    pub category: AreaCategory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Location {
    Area(AreaId),
    Hospital,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Individual {
    pub id: PersonId,
    pub residential_area: AreaId,
    pub working_area: AreaId,
    /// Commercial area visited after work when mobility is not changeable.
    pub usual_commercial_area: AreaId,
    pub health: HealthState,
    /// Action in force during the most recent simulated day.
    pub current_action: InterventionAction,
    pub location: Location,
}

pub fn is_weekend(day: u32) -> bool {
    day % 7 >= 5
}
