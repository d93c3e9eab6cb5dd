//! Per-individual infection probability from discovered co-visits.
//!
//! Starting from a healthy probability of one, every area-day an individual
//! visited in the lookback window multiplies it by
//! `1 - p_s * infected_visitors / visitors`, where infected visitors are the
//! currently hospitalized cases who were there that day (optionally also the
//! recovered ones). Having at
//! least one known-case acquaintance co-located in the window multiplies it
//! once more by `1 - p_c`. The infection probability is the complement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{Observation, VisibleHealth};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiskConfig {
    pub lookback_days: usize,
    pub p_s: f64,
    pub p_c: f64,
    /// Also treat recovered cases as sources of exposure. Their visits inside
    /// a lookback window shorter than treatment all happen after recovery.
    pub count_recovered: bool,
}

impl Default for RiskConfig {
    fn default() -> Self {
        Self {
            lookback_days: 5,
            p_s: 0.01,
            p_c: 0.05,
            count_recovered: false,
        }
    }
}

impl RiskConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lookback_days < 1 {
            return Err(Error::config("lookback_days", "must be at least 1"));
        }
        for (field, p) in [("p_s", self.p_s), ("p_c", self.p_c)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(field, format!("{p} is not a probability")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskVector {
    pub p_infe: Vec<f64>,
    pub p_hel: Vec<f64>,
}

impl RiskVector {
    pub fn len(&self) -> usize {
        self.p_infe.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_infe.is_empty()
    }
}

pub fn estimate_risk(obs: &Observation<'_>, cfg: &RiskConfig) -> Result<RiskVector> {
    let m = obs.population();
    let n = obs.n_areas;
    let window: Vec<_> = obs.history.last(cfg.lookback_days).collect();
    for day in &window {
        if day.population() != m || day.n_areas() != n {
            return Err(Error::contract(format!(
                "visit history for day {} is {}x{}, expected {m}x{n}",
                day.day,
                day.population(),
                day.n_areas()
            )));
        }
    }
    let known_case: Vec<bool> = obs
        .health
        .iter()
        .map(|&h| match h {
            VisibleHealth::Discovered => true,
            VisibleHealth::Recovered => cfg.count_recovered,
            VisibleHealth::NotDiscovered => false,
        })
        .collect();

    // Per area-day survival factor.
    let mut factors = Vec::with_capacity(window.len());
    for day in &window {
        let mut visitors = vec![0u32; n];
        let mut infected = vec![0u32; n];
        for p in 0..m {
            for (a, &h) in day.row(p as u32).iter().enumerate() {
                if h > 0 {
                    visitors[a] += 1;
                    if known_case[p] {
                        infected[a] += 1;
                    }
                }
            }
        }
        let f: Vec<f64> = visitors
            .iter()
            .zip(&infected)
            .map(|(&v, &k)| {
                if v == 0 {
                    1.0
                } else {
                    1.0 - cfg.p_s * k as f64 / v as f64
                }
            })
            .collect();
        factors.push(f);
    }

    let mut exposed = vec![false; m];
    for case in (0..m).filter(|&j| known_case[j]) {
        for &other in obs.social.neighbors(case as u32) {
            let o = other as usize;
            if exposed[o] {
                continue;
            }
            exposed[o] = window.iter().any(|day| {
                day.row(case as u32)
                    .iter()
                    .zip(day.row(other))
                    .any(|(&a, &b)| a > 0 && b > 0)
            });
        }
    }

    let mut p_hel = vec![1.0; m];
    for i in 0..m {
        p_hel[i] = match obs.health[i] {
            VisibleHealth::Discovered => 0.0,
            VisibleHealth::Recovered => 1.0,
            VisibleHealth::NotDiscovered => {
                let mut hel = 1.0;
                for (day, f) in window.iter().zip(&factors) {
                    for (a, &h) in day.row(i as u32).iter().enumerate() {
                        if h > 0 {
                            hel *= f[a];
                        }
                    }
                }
                if exposed[i] {
                    hel *= 1.0 - cfg.p_c;
                }
                hel
            }
        };
    }
    let p_infe = p_hel.iter().map(|h| 1.0 - h).collect();
    Ok(RiskVector { p_infe, p_hel })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{DayVisits, InterventionAction, SocialGraph, VisitHistory};

    fn obs<'a>(
        health: Vec<VisibleHealth>,
        history: &'a VisitHistory,
        social: &'a SocialGraph,
        n_areas: usize,
    ) -> Observation<'a> {
        Observation {
            day: history.len() as u32,
            weekend: false,
            intervention_active: true,
            n_areas,
            actions: vec![InterventionAction::NoIntervention; health.len()],
            health,
            history,
            social,
        }
    }

    /// Ten visitors to one area on one day; individual 1 is a known case.
    fn ten_visitors(acquainted: bool) -> (VisitHistory, SocialGraph, Vec<VisibleHealth>) {
        let mut day = DayVisits::new(0, 10, 3);
        for p in 0..10 {
            day.set_hours(p, 0, 8).unwrap();
        }
        let mut history = VisitHistory::new(5);
        history.push(day);
        let edges = if acquainted { vec![(0, 1)] } else { vec![] };
        let social = SocialGraph::from_edges(10, &edges).unwrap();
        let mut health = vec![VisibleHealth::NotDiscovered; 10];
        health[1] = VisibleHealth::Discovered;
        (history, social, health)
    }

    #[test]
    fn no_cases_means_no_risk() {
        let (history, social, _) = ten_visitors(true);
        let health = vec![VisibleHealth::NotDiscovered; 10];
        let r = estimate_risk(&obs(health, &history, &social, 3), &RiskConfig::default()).unwrap();
        assert!(r.p_infe.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn one_case_among_ten_visitors() {
        let (history, social, health) = ten_visitors(false);
        let r = estimate_risk(&obs(health, &history, &social, 3), &RiskConfig::default()).unwrap();
        assert!((r.p_hel[0] - 0.999).abs() < 1e-15);
        assert!((r.p_infe[0] - 0.001).abs() < 1e-15);
        assert_eq!(r.p_infe[1], 1.0);
    }

    #[test]
    fn co_located_case_acquaintance() {
        let (history, social, health) = ten_visitors(true);
        let r = estimate_risk(&obs(health, &history, &social, 3), &RiskConfig::default()).unwrap();
        assert!((r.p_infe[0] - 0.05095).abs() < 1e-15);
        // Not acquainted with the case.
        assert!((r.p_infe[2] - 0.001).abs() < 1e-15);
    }

    #[test]
    fn empty_history_gives_zero_risk() {
        let history = VisitHistory::new(5);
        let social = SocialGraph::from_edges(3, &[(0, 1)]).unwrap();
        let health = vec![
            VisibleHealth::NotDiscovered,
            VisibleHealth::Discovered,
            VisibleHealth::Recovered,
        ];
        let r = estimate_risk(&obs(health, &history, &social, 3), &RiskConfig::default()).unwrap();
        assert_eq!(r.p_infe, vec![0.0, 1.0, 0.0]);
        for (p, h) in r.p_infe.iter().zip(&r.p_hel) {
            assert_eq!(*p, 1.0 - h);
        }
    }

    #[test]
    fn acquaintance_not_co_located_is_ignored() {
        let mut day = DayVisits::new(0, 2, 3);
        day.set_hours(0, 0, 5).unwrap();
        day.set_hours(1, 1, 5).unwrap();
        let mut history = VisitHistory::new(5);
        history.push(day);
        let social = SocialGraph::from_edges(2, &[(0, 1)]).unwrap();
        let health = vec![VisibleHealth::NotDiscovered, VisibleHealth::Discovered];
        let r = estimate_risk(&obs(health, &history, &social, 3), &RiskConfig::default()).unwrap();
        assert_eq!(r.p_infe[0], 0.0);
    }

    #[test]
    fn recovered_cases_count_only_when_enabled() {
        let (history, social, mut health) = ten_visitors(true);
        health[1] = VisibleHealth::Recovered;
        let r = estimate_risk(
            &obs(health.clone(), &history, &social, 3),
            &RiskConfig::default(),
        )
        .unwrap();
        assert_eq!(r.p_infe[0], 0.0);
        assert_eq!(r.p_infe[1], 0.0);
        let cfg = RiskConfig {
            count_recovered: true,
            ..RiskConfig::default()
        };
        let r = estimate_risk(&obs(health, &history, &social, 3), &cfg).unwrap();
        assert!((r.p_infe[0] - 0.05095).abs() < 1e-15);
    }

    #[test]
    fn lookback_limits_the_window() {
        let (mut history, social, health) = ten_visitors(false);
        for d in 1..3 {
            history.push(DayVisits::new(d, 10, 3));
        }
        let cfg = RiskConfig {
            lookback_days: 2,
            ..RiskConfig::default()
        };
        let r = estimate_risk(&obs(health.clone(), &history, &social, 3), &cfg).unwrap();
        assert_eq!(r.p_infe[0], 0.0);
        let cfg = RiskConfig {
            lookback_days: 3,
            ..RiskConfig::default()
        };
        let r = estimate_risk(&obs(health, &history, &social, 3), &cfg).unwrap();
        assert!(r.p_infe[0] > 0.0);
    }

    #[test]
    fn history_shape_mismatch_is_rejected() {
        let (history, social, _) = ten_visitors(false);
        let health = vec![VisibleHealth::NotDiscovered; 4];
        let social4 = SocialGraph::from_edges(4, &[]).unwrap();
        let _ = social;
        assert!(matches!(
            estimate_risk(&obs(health, &history, &social4, 3), &RiskConfig::default()),
            Err(Error::Contract(_))
        ));
    }
}
