//! Run configuration: world parameters, scenario presets and the key = value
//! config file format shared by every subcommand.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnn::ModelConfig;
use crate::metrics::ScoreConfig;
use crate::ppo::TrainConfig;
use crate::risk::RiskConfig;

/// Parameters of one simulated city.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub n_areas: usize,
    pub population: usize,
    /// Infection probability per infectious stranger contact-hour.
    pub p_s: f64,
    /// Infection probability per infectious acquaintance contact-hour.
    pub p_c: f64,
    pub incubation_days: u32,
    pub treatment_days: u32,
    /// Days after the first discovered case before interventions are enforced.
    pub t_start: u32,
    pub horizon_days: u32,
    pub initial_seed_count: usize,
    pub mean_acquaintance_degree: f64,
    pub strangers_per_hour: usize,
    pub commercial_visit_prob: f64,
    /// Resample the weekday commercial area every day instead of keeping a
    /// fixed one per individual.
    pub changeable_mobility: bool,
    /// Days of visit history kept in the ring buffer.
    pub history_days: usize,
    pub rng_seed: u64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            n_areas: 11,
            population: 10_000,
            p_s: 0.01,
            p_c: 0.05,
            incubation_days: 3,
            treatment_days: 10,
            t_start: 1,
            horizon_days: 60,
            initial_seed_count: 5,
            mean_acquaintance_degree: 1.7,
            strangers_per_hour: 1,
            commercial_visit_prob: 0.5,
            changeable_mobility: false,
            history_days: 5,
            rng_seed: 0,
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<()> {
        for (field, p) in [
            ("p_s", self.p_s),
            ("p_c", self.p_c),
            ("commercial_visit_prob", self.commercial_visit_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(field, format!("{p} is not a probability")));
            }
        }
        if self.n_areas < 3 {
            return Err(Error::config(
                "n_areas",
                "at least three areas are needed (one per category)",
            ));
        }
        if self.population < 1 {
            return Err(Error::config("population", "must be at least 1"));
        }
        if self.horizon_days < 1 {
            return Err(Error::config("horizon_days", "must be at least 1"));
        }
        if self.initial_seed_count > self.population {
            return Err(Error::config(
                "initial_seed_count",
                "cannot exceed the population",
            ));
        }
        if !(self.mean_acquaintance_degree >= 0.0 && self.mean_acquaintance_degree.is_finite()) {
            return Err(Error::config(
                "mean_acquaintance_degree",
                "must be finite and non-negative",
            ));
        }
        if self.history_days < 1 {
            return Err(Error::config("history_days", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Default,
    Larger,
    Changeable,
    Late,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::Default,
        Scenario::Larger,
        Scenario::Changeable,
        Scenario::Late,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Default => "default",
            Scenario::Larger => "larger",
            Scenario::Changeable => "changeable",
            Scenario::Late => "late",
        }
    }

    /// The preset world for this scenario, on top of the default parameters.
    pub fn world(self) -> WorldConfig {
        let base = WorldConfig::default();
        match self {
            Scenario::Default => base,
            Scenario::Larger => WorldConfig {
                n_areas: 98,
                ..base
            },
            Scenario::Changeable => WorldConfig {
                changeable_mobility: true,
                commercial_visit_prob: 0.8,
                ..base
            },
            Scenario::Late => WorldConfig { t_start: 5, ..base },
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| {
                Error::config(
                    "scenario",
                    format!("unknown scenario `{s}` (expected one of default, larger, changeable, late)"),
                )
            })
    }
}

/// Everything a subcommand needs, as loaded from a config file.
///
/// World keys live at the top level; the other components have their own
/// tables (`[risk]`, `[model]`, `[train]`, `[score]`). Every key is optional.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub world: WorldConfig,
    pub risk: RiskConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub score: ScoreConfig,
}

impl RunConfig {
    /// Preset values for `scenario`, overridden by any key in `text`.
    pub fn from_toml_str(scenario: Scenario, text: &str) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("config", e.message().to_string()))?;

        let mut section = |name: &str| match table.remove(name) {
            Some(toml::Value::Table(t)) => Ok(t),
            Some(_) => Err(Error::config(name, "expected a table")),
            None => Ok(toml::Table::new()),
        };
        let risk = section("risk")?;
        let model = section("model")?;
        let train = section("train")?;
        let score = section("score")?;

        let world = overlay(scenario.world(), table, "")?;
        // The risk estimate uses the simulator's contact probabilities unless
        // the [risk] table says otherwise.
        let risk_base = RiskConfig {
            p_s: world.p_s,
            p_c: world.p_c,
            ..RiskConfig::default()
        };
        let cfg = RunConfig {
            risk: overlay(risk_base, risk, "risk.")?,
            world,
            model: overlay(ModelConfig::default(), model, "model.")?,
            train: overlay(TrainConfig::default(), train, "train.")?,
            score: overlay(ScoreConfig::default(), score, "score.")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(scenario: Scenario, path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::from_toml_str(scenario, &std::fs::read_to_string(p)?),
            None => Self::from_toml_str(scenario, ""),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.world.validate()?;
        self.risk.validate()?;
        self.model.validate()?;
        self.train.validate()?;
        self.score.validate()
    }
}

fn overlay<T>(base: T, keys: toml::Table, prefix: &str) -> Result<T>
where
    T: Serialize + for<'de> Deserialize<'de>,
{
    let mut merged = toml::Table::try_from(&base)
        .map_err(|e| Error::config(prefix.trim_end_matches('.'), e.to_string()))?;
    for (k, v) in keys {
        if !merged.contains_key(&k) {
            return Err(Error::config(format!("{prefix}{k}"), "unknown key"));
        }
        merged.insert(k, v);
    }
    let field_hint = prefix.trim_end_matches('.');
    toml::Value::Table(merged)
        .try_into()
        .map_err(|e: toml::de::Error| {
            let hint = if field_hint.is_empty() {
                "config"
            } else {
                field_hint
            };
            Error::config(hint, e.message().to_string())
        })
}
