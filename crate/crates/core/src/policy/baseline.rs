use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::risk::RiskVector;
use crate::rng::{self, Domain};
use crate::sim::{InterventionAction, Observation};

/// Days of history counted by [`Baseline::DegreeOrder`].
const DEGREE_ORDER_DAYS: usize = 5;
const DEGREE_ORDER_FRACTION: f64 = 0.3;
const DEGREE_SAMPLE_FREE: usize = 4;

/// Fixed rule-based policies used for comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Baseline {
    NoIntervention,
    Lockdown,
    /// Isolate whoever has infection probability above the threshold.
    Expert(f64),
    /// Isolate with probability (n − 4)/n for acquaintance count n > 4.
    DegreeSample,
    /// Isolate the 30% with the most recent co-visits.
    DegreeOrder,
}

impl Baseline {
    pub const STANDARD: [Baseline; 6] = [
        Baseline::NoIntervention,
        Baseline::Lockdown,
        Baseline::Expert(0.01),
        Baseline::Expert(0.015),
        Baseline::DegreeSample,
        Baseline::DegreeOrder,
    ];

    pub const NAMES: &'static str =
        "no_intervention, lockdown, expert(<threshold>), degree_sample, degree_order";

    /// Actions for one day. `seed` keys the randomness of `DegreeSample`.
    pub fn actions(
        &self,
        obs: &Observation<'_>,
        risk: &RiskVector,
        seed: u64,
    ) -> Result<Vec<InterventionAction>> {
        let m = obs.population();
        if risk.len() != m {
            return Err(Error::contract(
                "risk vector length differs from population",
            ));
        }
        use InterventionAction::{Isolate, NoIntervention};
        Ok(match *self {
            Baseline::NoIntervention => vec![NoIntervention; m],
            Baseline::Lockdown => vec![Isolate; m],
            Baseline::Expert(theta) => risk
                .p_infe
                .iter()
                .map(|&p| if p > theta { Isolate } else { NoIntervention })
                .collect(),
            Baseline::DegreeSample => {
                let mut rng = rng::stream(seed, Domain::Policy, obs.day as u64, 0);
                (0..m)
                    .map(|i| {
                        let u: f64 = rng.random();
                        let n = obs.social.degree(i as u32);
                        if n > DEGREE_SAMPLE_FREE && u < (n - DEGREE_SAMPLE_FREE) as f64 / n as f64
                        {
                            Isolate
                        } else {
                            NoIntervention
                        }
                    })
                    .collect()
            }
            Baseline::DegreeOrder => {
                let counts = contact_counts(obs, DEGREE_ORDER_DAYS);
                let take = (DEGREE_ORDER_FRACTION * m as f64).floor() as usize;
                let mut order: Vec<usize> = (0..m).collect();
                order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
                let mut out = vec![NoIntervention; m];
                for &i in &order[..take] {
                    out[i] = Isolate;
                }
                out
            }
        })
    }
}

/// Co-visit incidences per individual over the last `days` recorded days:
/// for every day and area an individual visited, the number of other
/// visitors of that area on that day.
pub fn contact_counts(obs: &Observation<'_>, days: usize) -> Vec<u64> {
    let m = obs.population();
    let mut counts = vec![0u64; m];
    for day in obs.history.last(days) {
        let visitors = day.visitors_per_area();
        for (i, c) in counts.iter_mut().enumerate() {
            for (a, &h) in day.row(i as u32).iter().enumerate() {
                if h > 0 {
                    *c += visitors[a] as u64 - 1;
                }
            }
        }
    }
    counts
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Baseline::NoIntervention => f.write_str("no_intervention"),
            Baseline::Lockdown => f.write_str("lockdown"),
            Baseline::Expert(t) => write!(f, "expert({t})"),
            Baseline::DegreeSample => f.write_str("degree_sample"),
            Baseline::DegreeOrder => f.write_str("degree_order"),
        }
    }
}

impl FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || {
            Error::config(
                "baseline",
                format!(
                    "unknown baseline '{s}'; expected one of {}",
                    Baseline::NAMES
                ),
            )
        };
        Ok(match s {
            "no_intervention" => Baseline::NoIntervention,
            "lockdown" => Baseline::Lockdown,
            "degree_sample" => Baseline::DegreeSample,
            "degree_order" => Baseline::DegreeOrder,
            _ => {
                let inner = s
                    .strip_prefix("expert(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(unknown)?;
                let t: f64 = inner.parse().map_err(|_| unknown())?;
                if !(0.0..=1.0).contains(&t) {
                    return Err(Error::config(
                        "baseline",
                        format!("expert threshold {t} outside [0, 1]"),
                    ));
                }
                Baseline::Expert(t)
            }
        })
    }
}
