//! Infection and intervention-cost accounting, and the Score that combines
//! them.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{DayCounts, DayOutcome};

/// Scores above this are shown as ">10000" in comparison tables.
pub const SCORE_DISPLAY_CAP: f64 = 10_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreConfig {
    pub lambda_h: f64,
    pub lambda_i: f64,
    pub lambda_q: f64,
    pub lambda_c: f64,
    pub theta_i: f64,
    pub theta_q: f64,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self {
            lambda_h: 1.0,
            lambda_i: 0.5,
            lambda_q: 0.3,
            lambda_c: 0.2,
            theta_i: 500.0,
            theta_q: 10_000.0,
        }
    }
}

impl ScoreConfig {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("lambda_h", self.lambda_h),
            ("lambda_i", self.lambda_i),
            ("lambda_q", self.lambda_q),
            ("lambda_c", self.lambda_c),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(field, "must be finite and non-negative"));
            }
        }
        for (field, v) in [("theta_i", self.theta_i), ("theta_q", self.theta_q)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(field, "must be positive"));
            }
        }
        Ok(())
    }

    /// Weighted intervention cost of one day.
    pub fn daily_cost(&self, c: &DayCounts) -> f64 {
        self.lambda_h * c.hospitalized as f64
            + self.lambda_i * c.isolated as f64
            + self.lambda_q * c.quarantined as f64
            + self.lambda_c * c.confined as f64
    }

    pub fn score(&self, infections: f64, cost: f64) -> f64 {
        score(infections, cost, self.theta_i, self.theta_q)
    }
}

/// exp(I/θ_I) + exp(Q/θ_Q).
pub fn score(infections: f64, cost: f64, theta_i: f64, theta_q: f64) -> f64 {
    (infections / theta_i).exp() + (cost / theta_q).exp()
}

pub fn format_score(s: f64) -> String {
    if s > SCORE_DISPLAY_CAP {
        ">10000".to_string()
    } else {
        format!("{s:.2}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DayRecord {
    pub day: u32,
    pub new_infections: u64,
    pub cumulative_infections: u64,
    pub counts: DayCounts,
    pub daily_cost: f64,
}

/// Per-episode accumulator of infections (I) and intervention cost (Q).
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics {
    pub config: ScoreConfig,
    pub days: Vec<DayRecord>,
    infections: u64,
    cost: f64,
}

impl EpisodeMetrics {
    pub fn new(config: ScoreConfig) -> Self {
        Self {
            config,
            days: Vec::new(),
            infections: 0,
            cost: 0.0,
        }
    }

    /// Adds one day; returns that day's cost increment.
    pub fn accumulate_day(&mut self, outcome: &DayOutcome) -> f64 {
        let daily_cost = self.config.daily_cost(&outcome.counts);
        self.infections += outcome.new_infections;
        self.cost += daily_cost;
        self.days.push(DayRecord {
            day: outcome.day,
            new_infections: outcome.new_infections,
            cumulative_infections: self.infections,
            counts: outcome.counts,
            daily_cost,
        });
        daily_cost
    }

    pub fn infections(&self) -> u64 {
        self.infections
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn score(&self) -> f64 {
        self.config.score(self.infections as f64, self.cost)
    }

    pub fn days_simulated(&self) -> usize {
        self.days.len()
    }

    pub const CSV_HEADER: &'static str = "day,new_infections,cum_I,n_h,n_i,n_q,n_c,daily_Q";

    /// Writes the per-day log. `preamble` lines are emitted as `#` comments.
    pub fn write_daily_csv<W: Write>(&self, mut w: W, preamble: &[String]) -> Result<()> {
        for line in preamble {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for d in &self.days {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                d.day,
                d.new_infections,
                d.cumulative_infections,
                d.counts.hospitalized,
                d.counts.isolated,
                d.counts.quarantined,
                d.counts.confined,
                d.daily_cost
            )?;
        }
        Ok(())
    }

    /// Rebuilds the accumulator from a per-day log written by
    /// [`write_daily_csv`](Self::write_daily_csv).
    pub fn read_daily_csv<R: BufRead>(r: R, config: ScoreConfig) -> Result<Self> {
        let bad = |reason: String| Error::Format {
            path: "daily csv".into(),
            reason,
        };
        let mut metrics = EpisodeMetrics::new(config);
        let mut saw_header = false;
        for line in r.lines() {
            let line = line?;
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            if !saw_header {
                if line != Self::CSV_HEADER {
                    return Err(bad(format!("unexpected header `{line}`")));
                }
                saw_header = true;
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 {
                return Err(bad(format!("expected 8 fields in `{line}`")));
            }
            let int = |s: &str| s.parse::<u64>().map_err(|e| bad(format!("`{s}`: {e}")));
            let day = int(f[0])? as u32;
            let new_infections = int(f[1])?;
            let counts = DayCounts {
                hospitalized: int(f[3])?,
                isolated: int(f[4])?,
                quarantined: int(f[5])?,
                confined: int(f[6])?,
            };
            let daily_cost: f64 = f[7].parse().map_err(|e| bad(format!("`{}`: {e}", f[7])))?;
            metrics.infections += new_infections;
            metrics.cost += daily_cost;
            if int(f[2])? != metrics.infections {
                return Err(bad(format!("cum_I mismatch on day {day}")));
            }
            metrics.days.push(DayRecord {
                day,
                new_infections,
                cumulative_infections: metrics.infections,
                counts,
                daily_cost,
            });
        }
        Ok(metrics)
    }

    pub fn summary(&self, scenario: &str, seed: u64, guard_triggered: bool) -> EpisodeSummary {
        EpisodeSummary {
            scenario: scenario.to_string(),
            seed,
            infections: self.infections,
            cost: self.cost,
            score: self.score(),
            days_simulated: self.days.len(),
            guard_triggered,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub scenario: String,
    pub seed: u64,
    #[serde(rename = "I")]
    pub infections: u64,
    #[serde(rename = "Q")]
    pub cost: f64,
    pub score: f64,
    pub days_simulated: usize,
    pub guard_triggered: bool,
}

/// Mean I, Q and Score over several seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedAverage {
    pub seeds: usize,
    pub infections: f64,
    pub cost: f64,
    pub score: f64,
}

impl SeedAverage {
    /// Averages in seed order, so the result does not depend on the order in
    /// which episodes finished.
    pub fn of(summaries: &[EpisodeSummary]) -> Self {
        let mut sorted: Vec<&EpisodeSummary> = summaries.iter().collect();
        sorted.sort_by_key(|s| s.seed);
        let n = sorted.len().max(1) as f64;
        SeedAverage {
            seeds: sorted.len(),
            infections: sorted.iter().map(|s| s.infections as f64).sum::<f64>() / n,
            cost: sorted.iter().map(|s| s.cost).sum::<f64>() / n,
            score: sorted.iter().map(|s| s.score).sum::<f64>() / n,
        }
    }
}

/// One row of a method comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub method: String,
    pub average: SeedAverage,
}

pub fn write_comparison_csv<W: Write>(
    mut w: W,
    rows: &[ComparisonRow],
    preamble: &[String],
) -> Result<()> {
    for line in preamble {
        writeln!(w, "# {line}")?;
    }
    writeln!(w, "method,I,Q,score")?;
    for r in rows {
        writeln!(
            w,
            "{},{:.2},{:.2},{}",
            r.method,
            r.average.infections,
            r.average.cost,
            format_score(r.average.score)
        )?;
    }
    Ok(())
}
