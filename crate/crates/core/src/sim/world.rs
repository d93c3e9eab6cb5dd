use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::config::WorldConfig;
use crate::error::{Error, Result};
use crate::rng::{self, Domain};

use super::{
    intervention_contact_filter, Area, AreaCategory, AreaId, DayPlan, DayVisits, HealthState,
    Individual, InterventionAction, Location, PersonId, VisitHistory, HOURS_PER_DAY,
};

const NOWHERE: u32 = u32::MAX;

/// Undirected acquaintance graph in compressed adjacency form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SocialGraph {
    offsets: Vec<u32>,
    neighbors: Vec<PersonId>,
}

impl SocialGraph {
    /// Builds the symmetric closure of `edges`, dropping self-loops and
    /// duplicates.
    pub fn from_edges(population: usize, edges: &[(PersonId, PersonId)]) -> Result<Self> {
        let mut pairs: Vec<(PersonId, PersonId)> = Vec::with_capacity(edges.len() * 2);
        for &(a, b) in edges {
            if a as usize >= population || b as usize >= population {
                return Err(Error::contract(format!(
                    "edge ({a}, {b}) outside population {population}"
                )));
            }
            if a != b {
                pairs.push((a, b));
                pairs.push((b, a));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        let mut offsets = vec![0u32; population + 1];
        for &(a, _) in &pairs {
            offsets[a as usize + 1] += 1;
        }
        for i in 0..population {
            offsets[i + 1] += offsets[i];
        }
        let neighbors = pairs.into_iter().map(|(_, b)| b).collect();
        Ok(Self { offsets, neighbors })
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sorted acquaintances of `person`.
    pub fn neighbors(&self, person: PersonId) -> &[PersonId] {
        let p = person as usize;
        &self.neighbors[self.offsets[p] as usize..self.offsets[p + 1] as usize]
    }

    pub fn degree(&self, person: PersonId) -> usize {
        self.neighbors(person).len()
    }

    pub fn are_acquainted(&self, a: PersonId, b: PersonId) -> bool {
        self.neighbors(a).binary_search(&b).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }
}

/// Headcounts used by the intervention cost for one day.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct DayCounts {
    pub hospitalized: u64,
    pub isolated: u64,
    pub quarantined: u64,
    pub confined: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DayOutcome {
    pub day: u32,
    /// Infections acquired during the day (initial seeds count on day 0).
    pub new_infections: u64,
    /// Individuals admitted to hospital at the start of the day.
    pub new_discoveries: u64,
    pub counts: DayCounts,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    config: WorldConfig,
    areas: Vec<Area>,
    commercial_areas: Vec<AreaId>,
    individuals: Vec<Individual>,
    social: SocialGraph,
    infected_by: Vec<Option<PersonId>>,
    day: u32,
    history: VisitHistory,
    first_discovery_day: Option<u32>,
    admitted_today: u64,
    unreported_infections: u64,
}

/// Splits `n` areas into residential, working and commercial blocks (in that
/// order), with at least one of each.
pub(crate) fn area_layout(n: usize) -> Vec<Area> {
    let residential = ((n as f64 * 0.5).round() as usize).clamp(1, n - 2);
    let commercial = ((n - residential) / 3).max(1);
    let working = n - residential - commercial;
    (0..n)
        .map(|i| Area {
            id: i as AreaId,
            category: if i < residential {
                AreaCategory::Residential
            } else if i < residential + working {
                AreaCategory::Working
            } else {
                AreaCategory::Commercial
            },
        })
        .collect()
}

fn areas_of(areas: &[Area], category: AreaCategory) -> Vec<AreaId> {
    areas
        .iter()
        .filter(|a| a.category == category)
        .map(|a| a.id)
        .collect()
}

/// Samples a city from `config`: homes, workplaces, the acquaintance graph
/// among co-residents, and the initial asymptomatic seeds.
pub fn build_world(config: &WorldConfig) -> Result<WorldState> {
    config.validate()?;
    let areas = area_layout(config.n_areas);
    let residential = areas_of(&areas, AreaCategory::Residential);
    let working = areas_of(&areas, AreaCategory::Working);
    let commercial = areas_of(&areas, AreaCategory::Commercial);
    let mut rng = rng::stream(config.rng_seed, Domain::Build, 0, 0);

    let m = config.population;
    let mut individuals = Vec::with_capacity(m);
    for id in 0..m {
        let home = residential[rng.random_range(0..residential.len())];
        individuals.push(Individual {
            id: id as PersonId,
            residential_area: home,
            working_area: working[rng.random_range(0..working.len())],
            usual_commercial_area: commercial[rng.random_range(0..commercial.len())],
            health: HealthState::Susceptible,
            current_action: InterventionAction::NoIntervention,
            location: Location::Area(home),
        });
    }

    // Each individual proposes Poisson(mean / 2) co-residents; the union of
    // proposals then has the configured mean degree.
    let mut residents: Vec<Vec<PersonId>> = vec![Vec::new(); config.n_areas];
    for p in &individuals {
        residents[p.residential_area as usize].push(p.id);
    }
    let mut edges = Vec::new();
    if config.mean_acquaintance_degree > 0.0 {
        let proposals = Poisson::new(config.mean_acquaintance_degree / 2.0)
            .map_err(|e| Error::config("mean_acquaintance_degree", e.to_string()))?;
        for p in &individuals {
            let group = &residents[p.residential_area as usize];
            let k = proposals.sample(&mut rng) as usize;
            if group.len() < 2 {
                continue;
            }
            for _ in 0..k {
                // Uniform over the group minus `p` itself.
                let mut j = rng.random_range(0..group.len() - 1);
                if group[j] == p.id {
                    j = group.len() - 1;
                }
                edges.push((p.id, group[j]));
            }
        }
    }
    let social = SocialGraph::from_edges(m, &edges)?;

    let seeds = index::sample(&mut rng, m, config.initial_seed_count);
    let mut seed_ids: Vec<usize> = seeds.into_vec();
    seed_ids.sort_unstable();
    for &s in &seed_ids {
        individuals[s].health = HealthState::Asymptomatic { infected_day: 0 };
    }

    let mut world = WorldState {
        config: config.clone(),
        commercial_areas: commercial,
        areas,
        individuals,
        social,
        infected_by: vec![None; m],
        day: 0,
        history: VisitHistory::new(config.history_days),
        first_discovery_day: None,
        admitted_today: 0,
        unreported_infections: seed_ids.len() as u64,
    };
    world.progress_disease();
    Ok(world)
}

/// Secondary infections caused by one index case in an otherwise susceptible
/// city without interventions, followed until the index case is admitted.
pub fn index_case_secondary_infections(config: &WorldConfig) -> Result<usize> {
    let mut cfg = config.clone();
    cfg.initial_seed_count = 1;
    let mut world = build_world(&cfg)?;
    let index = world
        .individuals
        .iter()
        .position(|p| p.health.is_infectious())
        .expect("one seed") as PersonId;
    let actions = vec![InterventionAction::NoIntervention; world.population()];
    while world.individuals[index as usize].health.is_infectious() && !world.is_done() {
        world.step_day(&actions)?;
    }
    Ok(world.secondary_infections(index))
}

impl WorldState {
    /// Assembles a world from explicit individuals and acquaintance pairs,
    /// with the standard area layout for `config.n_areas`.
    pub fn from_parts(
        config: &WorldConfig,
        individuals: Vec<Individual>,
        acquaintances: &[(PersonId, PersonId)],
    ) -> Result<Self> {
        config.validate()?;
        if individuals.len() != config.population {
            return Err(Error::config(
                "population",
                format!("{} individuals supplied", individuals.len()),
            ));
        }
        let areas = area_layout(config.n_areas);
        for (i, p) in individuals.iter().enumerate() {
            let category = |a: AreaId| areas.get(a as usize).map(|x| x.category);
            if p.id as usize != i {
                return Err(Error::contract(format!(
                    "individual at {i} has id {}",
                    p.id
                )));
            }
            if category(p.residential_area) != Some(AreaCategory::Residential)
                || category(p.working_area) != Some(AreaCategory::Working)
                || category(p.usual_commercial_area) != Some(AreaCategory::Commercial)
            {
                return Err(Error::contract(format!(
                    "individual {i} has areas of the wrong category"
                )));
            }
        }
        let seeds = individuals
            .iter()
            .filter(|p| p.health != HealthState::Susceptible)
            .count() as u64;
        let mut world = WorldState {
            config: config.clone(),
            commercial_areas: areas_of(&areas, AreaCategory::Commercial),
            areas,
            social: SocialGraph::from_edges(individuals.len(), acquaintances)?,
            infected_by: vec![None; individuals.len()],
            individuals,
            day: 0,
            history: VisitHistory::new(config.history_days),
            first_discovery_day: None,
            admitted_today: 0,
            unreported_infections: seeds,
        };
        for p in &mut world.individuals {
            p.location = match p.health {
                HealthState::Symptomatic { .. } => Location::Hospital,
                _ => Location::Area(p.residential_area),
            };
        }
        world.progress_disease();
        Ok(world)
    }

    pub fn config(&self) -> &WorldConfig {
        &self.config
    }

    pub fn areas(&self) -> &[Area] {
        &self.areas
    }

    pub fn individuals(&self) -> &[Individual] {
        &self.individuals
    }

    pub fn social(&self) -> &SocialGraph {
        &self.social
    }

    pub fn history(&self) -> &VisitHistory {
        &self.history
    }

    pub fn population(&self) -> usize {
        self.individuals.len()
    }

    pub fn n_areas(&self) -> usize {
        self.areas.len()
    }

    /// Index of the next day to simulate.
    pub fn day(&self) -> u32 {
        self.day
    }

    pub fn is_done(&self) -> bool {
        self.day >= self.config.horizon_days
    }

    pub fn first_discovery_day(&self) -> Option<u32> {
        self.first_discovery_day
    }

    /// Interventions are enforced from `t_start` days after the first
    /// discovered case onwards.
    pub fn intervention_active(&self) -> bool {
        self.intervention_start_day()
            .is_some_and(|start| self.day >= start)
    }

    pub fn intervention_start_day(&self) -> Option<u32> {
        self.first_discovery_day.map(|d| d + self.config.t_start)
    }

    pub fn infected_by(&self, person: PersonId) -> Option<PersonId> {
        self.infected_by[person as usize]
    }

    /// Number of individuals infected directly by `person` so far.
    pub fn secondary_infections(&self, person: PersonId) -> usize {
        self.infected_by
            .iter()
            .filter(|&&b| b == Some(person))
            .count()
    }

    /// Individuals per health stage (susceptible, asymptomatic, symptomatic,
    /// recovered).
    pub fn census(&self) -> [usize; 4] {
        let mut out = [0; 4];
        for p in &self.individuals {
            out[p.health.stage() as usize] += 1;
        }
        out
    }

    /// Individuals ever infected, including the initial seeds.
    pub fn cumulative_infected(&self) -> usize {
        self.individuals
            .iter()
            .filter(|p| p.health != HealthState::Susceptible)
            .count()
    }

    /// Overwrites one individual's health; for building test scenarios.
    pub fn set_health(&mut self, person: PersonId, health: HealthState) {
        let p = &mut self.individuals[person as usize];
        let was_infected = p.health != HealthState::Susceptible;
        p.health = health;
        p.location = match health {
            HealthState::Symptomatic { .. } => Location::Hospital,
            _ => Location::Area(p.residential_area),
        };
        if !was_infected && health != HealthState::Susceptible {
            self.unreported_infections += 1;
        }
        if health.is_hospitalized() && self.first_discovery_day.is_none() {
            self.first_discovery_day = Some(self.day);
        }
    }

    /// Simulates one day of 24 hourly ticks under `actions`, then advances
    /// disease progression to the start of the next day.
    pub fn step_day(&mut self, actions: &[InterventionAction]) -> Result<DayOutcome> {
        let m = self.population();
        if actions.len() != m {
            return Err(Error::contract(format!(
                "{} actions supplied for {m} individuals",
                actions.len()
            )));
        }
        if self.is_done() {
            return Err(Error::contract(format!(
                "day {} is past the horizon of {} days",
                self.day, self.config.horizon_days
            )));
        }
        let day = self.day;
        let n = self.n_areas();

        let mut counts = DayCounts::default();
        let mut effective = Vec::with_capacity(m);
        for (p, &a) in self.individuals.iter_mut().zip(actions) {
            if p.health.is_hospitalized() {
                counts.hospitalized += 1;
                p.current_action = InterventionAction::NoIntervention;
                effective.push(None);
                continue;
            }
            match a {
                InterventionAction::NoIntervention => {}
                InterventionAction::Confine => counts.confined += 1,
                InterventionAction::Quarantine => counts.quarantined += 1,
                InterventionAction::Isolate => counts.isolated += 1,
            }
            p.current_action = a;
            effective.push(Some(a));
        }

        let plans: Vec<DayPlan> = self
            .individuals
            .iter()
            .map(|p| DayPlan::draw(&self.config, &self.commercial_areas, p, day))
            .collect();

        let mut visits = DayVisits::new(day, m, n);
        let mut loc = vec![NOWHERE; m];
        let mut meets_acquaintances = vec![false; m];
        let mut meets_strangers = vec![false; m];
        let mut offsets = vec![0usize; n + 1];
        let mut members = vec![0 as PersonId; m];
        let mut pending = vec![false; m];
        let mut infections: Vec<(PersonId, PersonId)> = Vec::new();
        let mut chosen: Vec<PersonId> = Vec::new();
        let mut candidates: Vec<PersonId> = Vec::new();
        let mut new_infections = 0u64;

        for hour in 0..HOURS_PER_DAY {
            for (i, (plan, action)) in plans.iter().zip(&effective).enumerate() {
                match action {
                    None => {
                        loc[i] = NOWHERE;
                        meets_acquaintances[i] = false;
                        meets_strangers[i] = false;
                    }
                    Some(a) => {
                        let f = intervention_contact_filter(plan, *a, hour);
                        loc[i] = f.area;
                        meets_acquaintances[i] = f.acquaintances;
                        meets_strangers[i] = f.strangers;
                        if f.recorded {
                            visits.add_hour(i as PersonId, f.area);
                        }
                    }
                }
            }

            offsets.iter_mut().for_each(|o| *o = 0);
            for &l in &loc {
                if l != NOWHERE {
                    offsets[l as usize + 1] += 1;
                }
            }
            for a in 0..n {
                offsets[a + 1] += offsets[a];
            }
            let mut fill = offsets.clone();
            for (i, &l) in loc.iter().enumerate() {
                if l != NOWHERE {
                    members[fill[l as usize]] = i as PersonId;
                    fill[l as usize] += 1;
                }
            }

            let tick = day as u64 * HOURS_PER_DAY as u64 + hour as u64;
            for area in 0..n {
                let present = &members[offsets[area]..offsets[area + 1]];
                for &src in present {
                    let s = src as usize;
                    if !self.individuals[s].health.is_infectious_on(day)
                        || !(meets_acquaintances[s] || meets_strangers[s])
                    {
                        continue;
                    }
                    let mut rng =
                        rng::stream(self.config.rng_seed, Domain::Transmission, tick, src as u64);
                    let acquaintances = self.social.neighbors(src);
                    let mut acquaintances_here = 0;
                    for &dst in acquaintances {
                        // One draw per acquaintance whether or not they are
                        // reachable keeps the stream aligned across actions.
                        let u: f64 = rng.random();
                        let d = dst as usize;
                        if loc[d] != area as u32 {
                            continue;
                        }
                        acquaintances_here += 1;
                        if meets_acquaintances[s]
                            && meets_acquaintances[d]
                            && self.individuals[d].health == HealthState::Susceptible
                            && !pending[d]
                            && u < self.config.p_c
                        {
                            pending[d] = true;
                            infections.push((dst, src));
                        }
                    }

                    if !meets_strangers[s] {
                        continue;
                    }
                    let strangers = present.len() - 1 - acquaintances_here;
                    let take = self.config.strangers_per_hour.min(strangers);
                    if take == 0 {
                        continue;
                    }
                    chosen.clear();
                    if strangers >= 2 * take {
                        while chosen.len() < take {
                            let j = present[rng.random_range(0..present.len())];
                            if j == src || chosen.contains(&j) || self.social.are_acquainted(src, j)
                            {
                                continue;
                            }
                            chosen.push(j);
                        }
                    } else {
                        candidates.clear();
                        candidates.extend(
                            present
                                .iter()
                                .copied()
                                .filter(|&j| j != src && !self.social.are_acquainted(src, j)),
                        );
                        for k in index::sample(&mut rng, candidates.len(), take) {
                            chosen.push(candidates[k]);
                        }
                    }
                    for &dst in &chosen {
                        let u: f64 = rng.random();
                        let d = dst as usize;
                        if meets_strangers[d]
                            && self.individuals[d].health == HealthState::Susceptible
                            && !pending[d]
                            && u < self.config.p_s
                        {
                            pending[d] = true;
                            infections.push((dst, src));
                        }
                    }
                }
            }

            for &(dst, src) in &infections {
                let d = dst as usize;
                pending[d] = false;
                self.individuals[d].health = HealthState::Asymptomatic {
                    infected_day: day + 1,
                };
                self.infected_by[d] = Some(src);
            }
            new_infections += infections.len() as u64;
            infections.clear();
            debug_assert_eq!(self.census().iter().sum::<usize>(), m);
        }

        for (p, &l) in self.individuals.iter_mut().zip(&loc) {
            p.location = if l == NOWHERE {
                Location::Hospital
            } else {
                Location::Area(l)
            };
        }
        self.history.push(visits);

        let outcome = DayOutcome {
            day,
            new_infections: new_infections + std::mem::take(&mut self.unreported_infections),
            new_discoveries: self.admitted_today,
            counts,
        };
        self.day += 1;
        self.progress_disease();
        Ok(outcome)
    }

    /// Start-of-day transitions: incubation ends in hospital admission,
    /// treatment ends in recovery.
    fn progress_disease(&mut self) {
        let day = self.day;
        let mut admitted = 0;
        for p in &mut self.individuals {
            match p.health {
                HealthState::Asymptomatic { infected_day }
                    if day.saturating_sub(infected_day) >= self.config.incubation_days =>
                {
                    p.health = HealthState::Symptomatic { onset_day: day };
                    p.location = Location::Hospital;
                    admitted += 1;
                }
                HealthState::Symptomatic { onset_day }
                    if day.saturating_sub(onset_day) >= self.config.treatment_days =>
                {
                    p.health = HealthState::Recovered;
                    p.location = Location::Area(p.residential_area);
                }
                _ => {}
            }
        }
        if admitted > 0 && self.first_discovery_day.is_none() {
            self.first_discovery_day = Some(day);
        }
        self.admitted_today = admitted;
    }
}
