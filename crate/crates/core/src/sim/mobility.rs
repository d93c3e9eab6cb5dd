use rand::Rng;

use crate::config::WorldConfig;
use crate::rng::{self, Domain};

use super::{
    is_weekend, AreaId, Individual, InterventionAction, AFTER_WORK_HOUR, WEEKEND_VISIT_HOURS,
    WEEKEND_VISIT_START, WORK_HOURS,
};

/// One individual's unrestricted itinerary for one day.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DayPlan {
    pub weekend: bool,
    pub home: AreaId,
    pub work: AreaId,
    /// Commercial area of the day's visit, if any.
    pub commercial: Option<AreaId>,
    pub weekend_start: usize,
}

impl DayPlan {
    /// Draws the plan from the individual's mobility stream for `day`. The
    /// draws are made in a fixed order whatever the day type so that plans
    /// never depend on anything but (seed, day, individual).
    pub fn draw(
        cfg: &WorldConfig,
        commercial_areas: &[AreaId],
        person: &Individual,
        day: u32,
    ) -> Self {
        let mut rng = rng::stream(cfg.rng_seed, Domain::Mobility, day as u64, person.id as u64);
        let visit_roll: f64 = rng.random();
        let random_commercial = commercial_areas[rng.random_range(0..commercial_areas.len())];
        let weekend_start = rng.random_range(WEEKEND_VISIT_START);
        let weekend = is_weekend(day);
        let commercial = if weekend {
            Some(random_commercial)
        } else if visit_roll < cfg.commercial_visit_prob {
            Some(if cfg.changeable_mobility {
                random_commercial
            } else {
                person.usual_commercial_area
            })
        } else {
            None
        };
        DayPlan {
            weekend,
            home: person.residential_area,
            work: person.working_area,
            commercial,
            weekend_start,
        }
    }

    /// Where the plan puts the individual at `hour` with no restriction.
    pub fn area_at(&self, hour: usize) -> AreaId {
        if self.weekend {
            match self.commercial {
                Some(c)
                    if (self.weekend_start..self.weekend_start + WEEKEND_VISIT_HOURS)
                        .contains(&hour) =>
                {
                    c
                }
                _ => self.home,
            }
        } else if WORK_HOURS.contains(&hour) {
            self.work
        } else if hour == AFTER_WORK_HOUR {
            self.commercial.unwrap_or(self.home)
        } else {
            self.home
        }
    }
}

/// Who an individual may meet during one hour under a given action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContactFilter {
    /// Physical whereabouts. Isolated individuals stay home but are
    /// unreachable.
    pub area: AreaId,
    pub acquaintances: bool,
    pub strangers: bool,
    /// Whether the hour enters the visit history.
    pub recorded: bool,
}

impl ContactFilter {
    pub fn has_contacts(&self) -> bool {
        self.acquaintances || self.strangers
    }
}

/// Applies `action` to the individual's plan for `hour`. Hospitalization is
/// handled by the caller and dominates every action.
pub fn intervention_contact_filter(
    plan: &DayPlan,
    action: InterventionAction,
    hour: usize,
) -> ContactFilter {
    match action {
        InterventionAction::NoIntervention => ContactFilter {
            area: plan.area_at(hour),
            acquaintances: true,
            strangers: true,
            recorded: true,
        },
        InterventionAction::Confine => ContactFilter {
            area: plan.home,
            acquaintances: true,
            strangers: true,
            recorded: true,
        },
        InterventionAction::Quarantine => ContactFilter {
            area: plan.home,
            acquaintances: true,
            strangers: false,
            recorded: true,
        },
        InterventionAction::Isolate => ContactFilter {
            area: plan.home,
            acquaintances: false,
            strangers: false,
            recorded: false,
        },
    }
}
