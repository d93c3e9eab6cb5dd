//! Threshold-constrained action selection, its likelihood, the baseline
//! policies and the episode runner.

mod baseline;
mod runner;

pub use baseline::{contact_counts, Baseline};
pub use runner::{decide, run_episode, Controller, DayTrace, EpisodeResult};

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::gnn::ACTION_COUNT;
use crate::risk::RiskVector;
use crate::sim::InterventionAction;

/// Per-individual interval masses `c` and their cumulative thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdMatrix {
    /// M × 4, rows sum to 1.
    pub masses: Array2<f64>,
}

impl ThresholdMatrix {
    /// `c = softmax(−raw)` per row, computed with max-subtraction.
    pub fn from_values(raw: &Array2<f64>) -> Result<Self> {
        if raw.ncols() != ACTION_COUNT {
            return Err(Error::contract(format!(
                "expected {ACTION_COUNT} values per individual, got {}",
                raw.ncols()
            )));
        }
        if !raw.iter().all(|v| v.is_finite()) {
            return Err(Error::numeric("non-finite actor output"));
        }
        let mut masses = raw.mapv(|v| -v);
        for mut row in masses.rows_mut() {
            let max = row.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            row.mapv_inplace(|v| (v - max).exp());
            let total = row.sum();
            row.mapv_inplace(|v| v / total);
        }
        Ok(Self { masses })
    }

    pub fn len(&self) -> usize {
        self.masses.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn masses(&self, i: usize) -> ArrayView1<'_, f64> {
        self.masses.row(i)
    }

    /// `(P1, P2, P3)` for individual `i`, clamped into [0, 1].
    pub fn thresholds(&self, i: usize) -> [f64; 3] {
        let c = self.masses.row(i);
        let p1 = c[0];
        let p2 = p1 + c[1];
        let p3 = p2 + c[2];
        [p1.min(1.0), p2.min(1.0), p3.min(1.0)]
    }
}

/// Chosen actions with the log-probabilities and entropies PPO needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionDecision {
    pub actions: Vec<InterventionAction>,
    pub log_probs: Vec<f64>,
    pub entropies: Vec<f64>,
}

impl ActionDecision {
    pub fn total_log_prob(&self) -> f64 {
        self.log_probs.iter().sum()
    }

    pub fn mean_entropy(&self) -> f64 {
        if self.entropies.is_empty() {
            0.0
        } else {
            self.entropies.iter().sum::<f64>() / self.entropies.len() as f64
        }
    }
}

/// Interval of `[0, 1]` containing `p`, with ties going to the lower interval.
pub fn interval_of(p: f64, thresholds: [f64; 3]) -> InterventionAction {
    let idx = thresholds.iter().position(|&t| p <= t).unwrap_or(3);
    InterventionAction::from_index(idx).expect("four actions")
}

pub fn categorical_entropy(c: ArrayView1<'_, f64>) -> f64 {
    -c.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.ln())
        .sum::<f64>()
}

pub fn select_actions(risk: &RiskVector, thr: &ThresholdMatrix) -> Result<ActionDecision> {
    if risk.len() != thr.len() {
        return Err(Error::contract(format!(
            "{} risks for {} threshold rows",
            risk.len(),
            thr.len()
        )));
    }
    let m = risk.len();
    let mut out = ActionDecision {
        actions: Vec::with_capacity(m),
        log_probs: Vec::with_capacity(m),
        entropies: Vec::with_capacity(m),
    };
    for (i, &p) in risk.p_infe.iter().enumerate() {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::contract(format!("p_infe[{i}] = {p} outside [0, 1]")));
        }
        let a = interval_of(p, thr.thresholds(i));
        let c = thr.masses(i);
        out.actions.push(a);
        out.log_probs.push(c[a.index()].ln());
        out.entropies.push(categorical_entropy(c));
    }
    Ok(out)
}

/// Gradient of `Σ_i w_logp · log c_{i,a_i} + w_ent · Σ_i H_i` with respect to
/// the raw actor outputs, given the masses those outputs produce.
pub fn log_prob_entropy_grad(
    thr: &ThresholdMatrix,
    actions: &[InterventionAction],
    w_logp: f64,
    w_ent: f64,
) -> Array2<f64> {
    let mut g = Array2::zeros(thr.masses.dim());
    for (i, a) in actions.iter().enumerate() {
        let c = thr.masses(i);
        let h = categorical_entropy(c);
        for b in 0..ACTION_COUNT {
            let delta = if b == a.index() { 1.0 } else { 0.0 };
            let log_c = if c[b] > 0.0 { c[b].ln() } else { 0.0 };
            g[[i, b]] = w_logp * (c[b] - delta) + w_ent * c[b] * (log_c + h);
        }
    }
    g
}
