use ndarray::Array2;

use crate::error::{Error, Result};
use crate::risk::RiskVector;
use crate::sim::{InterventionAction, Observation, HOURS_PER_DAY};

/// Visible-health one-hot (3), action one-hot (4) and infection probability.
pub const FEATURE_DIM: usize = 8;

/// Network inputs for one day.
#[derive(Debug, Clone, PartialEq)]
pub struct StateFeatures {
    /// M × [`FEATURE_DIM`].
    pub node: Array2<f64>,
    /// One M × N matrix of visit hours / 24 per layer; index 0 is the most
    /// recent day. Missing days are all zero.
    pub visits: Vec<Array2<f64>>,
}

impl StateFeatures {
    pub fn population(&self) -> usize {
        self.node.nrows()
    }

    pub fn n_areas(&self) -> usize {
        self.visits.first().map_or(0, |v| v.ncols())
    }

    pub(crate) fn check(&self, layers: usize) -> Result<()> {
        let m = self.population();
        if self.node.ncols() != FEATURE_DIM {
            return Err(Error::contract(format!(
                "node features have {} columns, expected {FEATURE_DIM}",
                self.node.ncols()
            )));
        }
        if m == 0 {
            return Err(Error::contract("empty population"));
        }
        if self.visits.len() < layers {
            return Err(Error::contract(format!(
                "{} visit slices for {layers} layers",
                self.visits.len()
            )));
        }
        let n = self.n_areas();
        for v in &self.visits {
            if v.dim() != (m, n) {
                return Err(Error::contract("visit slice shape mismatch"));
            }
        }
        if !self.node.iter().all(|x| x.is_finite()) {
            return Err(Error::numeric("non-finite node feature"));
        }
        if !self
            .visits
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite() && *x >= 0.0))
        {
            return Err(Error::numeric(
                "visit slice entries must be finite and non-negative",
            ));
        }
        Ok(())
    }
}

pub fn build_features(
    obs: &Observation<'_>,
    risk: &RiskVector,
    layers: usize,
) -> Result<StateFeatures> {
    let m = obs.population();
    if risk.len() != m || obs.actions.len() != m {
        return Err(Error::contract("observation and risk vector sizes differ"));
    }
    let mut node = Array2::zeros((m, FEATURE_DIM));
    for i in 0..m {
        node[[i, obs.health[i].index()]] = 1.0;
        node[[i, 3 + obs.actions[i].index()]] = 1.0;
        node[[i, 7]] = risk.p_infe[i];
    }
    let n = obs.n_areas;
    let visits = (0..layers)
        .map(|k| {
            let mut v = Array2::zeros((m, n));
            if let Some(day) = obs.history.recent(k) {
                for i in 0..m {
                    for (a, &h) in day.row(i as u32).iter().enumerate() {
                        v[[i, a]] = h as f64 / HOURS_PER_DAY as f64;
                    }
                }
            }
            v
        })
        .collect();
    debug_assert_eq!(InterventionAction::ALL.len(), 4);
    Ok(StateFeatures { node, visits })
}

/// Row-wise softmax restricted to strictly positive entries. Rows without any
/// positive entry come out all zero.
pub fn masked_row_softmax(v: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(v.dim());
    for (row, mut dst) in v.rows().into_iter().zip(out.rows_mut()) {
        let max = row
            .iter()
            .filter(|x| **x > 0.0)
            .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        if max == f64::NEG_INFINITY {
            continue;
        }
        let mut total = 0.0;
        for (x, d) in row.iter().zip(dst.iter_mut()) {
            if *x > 0.0 {
                *d = (x - max).exp();
                total += *d;
            }
        }
        dst.mapv_inplace(|d| d / total);
    }
    out
}
