use std::hash::{Hash, Hasher};

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Domain};

use super::{ACTION_COUNT, FEATURE_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrunkKind {
    /// Individual–area message passing.
    Graph,
    /// Per-individual two-layer perceptron, no message passing.
    Perceptron,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub layers: usize,
    pub hidden: usize,
    /// Tie the individual-step weights to the area-step weights wherever
    /// their shapes agree (every layer after the first).
    pub shared_weights: bool,
    pub trunk: TrunkKind,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            layers: 3,
            hidden: 32,
            shared_weights: false,
            trunk: TrunkKind::Graph,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers < 1 {
            return Err(Error::config("layers", "must be at least 1"));
        }
        if self.hidden < 1 {
            return Err(Error::config("hidden", "must be at least 1"));
        }
        Ok(())
    }
}

/// Affine map `x · weight + bias` with `weight` stored input × output.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Array2::zeros((inputs, outputs)),
            bias: Array1::zeros(outputs),
        }
    }

    fn uniform(inputs: usize, outputs: usize, rng: &mut impl Rng) -> Self {
        let scale = 1.0 / (inputs as f64).sqrt();
        let mut d = Self::zeros(inputs, outputs);
        d.weight.mapv_inplace(|_| rng.random_range(-scale..scale));
        d.bias.mapv_inplace(|_| rng.random_range(-scale..scale));
        d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphLayer {
    pub area: Dense,
    /// `None` when tied to `area.weight`.
    pub individual_weight: Option<Array2<f64>>,
    pub individual_bias: Array1<f64>,
}

impl GraphLayer {
    pub fn individual_weight(&self) -> &Array2<f64> {
        self.individual_weight.as_ref().unwrap_or(&self.area.weight)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Trunk {
    Graph(Vec<GraphLayer>),
    Perceptron([Dense; 2]),
}

/// All trainable parameters: the trunk plus the actor and critic heads. The
/// same type holds gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct GnnParams {
    pub config: ModelConfig,
    pub trunk: Trunk,
    pub actor: Dense,
    pub critic: Dense,
}

fn build(config: &ModelConfig, mut dense: impl FnMut(usize, usize) -> Dense) -> GnnParams {
    let h = config.hidden;
    let trunk = match config.trunk {
        TrunkKind::Graph => Trunk::Graph(
            (0..config.layers)
                .map(|k| {
                    let input = if k == 0 { FEATURE_DIM } else { h };
                    let area = dense(input, h);
                    let tied = config.shared_weights && input == h;
                    let ind = dense(h, h);
                    GraphLayer {
                        area,
                        individual_weight: (!tied).then_some(ind.weight),
                        individual_bias: ind.bias,
                    }
                })
                .collect(),
        ),
        TrunkKind::Perceptron => Trunk::Perceptron([dense(FEATURE_DIM, h), dense(h, h)]),
    };
    GnnParams {
        config: *config,
        trunk,
        actor: dense(h, ACTION_COUNT),
        critic: dense(h, 1),
    }
}

/// Uniform initialization in ±1/√fan_in, deterministic per seed.
pub fn init_params(seed: u64, config: &ModelConfig) -> Result<GnnParams> {
    config.validate()?;
    let mut rng = rng::stream(seed, Domain::Init, 0, 0);
    Ok(build(config, |i, o| Dense::uniform(i, o, &mut rng)))
}

impl GnnParams {
    pub fn zeros(config: &ModelConfig) -> Self {
        build(config, Dense::zeros)
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.config)
    }

    /// Named views of every tensor, in a fixed order: weights first, then
    /// biases.
    pub fn tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        fn entry<D: ndarray::Dimension>(
            name: String,
            a: &ndarray::Array<f64, D>,
        ) -> (String, Vec<usize>, &[f64]) {
            (
                name,
                a.shape().to_vec(),
                a.as_slice().expect("standard layout"),
            )
        }
        let mut out = Vec::new();
        let mut biases = Vec::new();
        match &self.trunk {
            Trunk::Graph(layers) => {
                for (k, l) in layers.iter().enumerate() {
                    out.push(entry(format!("layer{k}.area.weight"), &l.area.weight));
                    if let Some(w) = &l.individual_weight {
                        out.push(entry(format!("layer{k}.individual.weight"), w));
                    }
                    biases.push(entry(format!("layer{k}.area.bias"), &l.area.bias));
                    biases.push(entry(
                        format!("layer{k}.individual.bias"),
                        &l.individual_bias,
                    ));
                }
            }
            Trunk::Perceptron(d) => {
                for (k, layer) in d.iter().enumerate() {
                    out.push(entry(format!("mlp{k}.weight"), &layer.weight));
                    biases.push(entry(format!("mlp{k}.bias"), &layer.bias));
                }
            }
        }
        out.push(entry("actor.weight".into(), &self.actor.weight));
        out.push(entry("critic.weight".into(), &self.critic.weight));
        out.extend(biases);
        out.push(entry("actor.bias".into(), &self.actor.bias));
        out.push(entry("critic.bias".into(), &self.critic.bias));
        out
    }

    /// Mutable views in the same order as [`tensors`](Self::tensors).
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        let mut biases: Vec<&mut [f64]> = Vec::new();
        match &mut self.trunk {
            Trunk::Graph(layers) => {
                for l in layers.iter_mut() {
                    out.push(l.area.weight.as_slice_mut().unwrap());
                    if let Some(w) = &mut l.individual_weight {
                        out.push(w.as_slice_mut().unwrap());
                    }
                    biases.push(l.area.bias.as_slice_mut().unwrap());
                    biases.push(l.individual_bias.as_slice_mut().unwrap());
                }
            }
            Trunk::Perceptron(d) => {
                let [a, b] = d;
                out.push(a.weight.as_slice_mut().unwrap());
                out.push(b.weight.as_slice_mut().unwrap());
                biases.push(a.bias.as_slice_mut().unwrap());
                biases.push(b.bias.as_slice_mut().unwrap());
            }
        }
        out.push(self.actor.weight.as_slice_mut().unwrap());
        out.push(self.critic.weight.as_slice_mut().unwrap());
        out.extend(biases);
        out.push(self.actor.bias.as_slice_mut().unwrap());
        out.push(self.critic.bias.as_slice_mut().unwrap());
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, _, d)| d.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, _, d)| d.iter().all(|x| x.is_finite()))
    }

    /// Squared L2 norm over every entry.
    pub fn norm_sqr(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|(_, _, d)| d.iter())
            .map(|x| x * x)
            .sum()
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x *= factor);
        }
    }

    /// `self += other`, entry by entry.
    pub fn add_assign(&mut self, other: &GnnParams) -> Result<()> {
        let src = other.tensors();
        let dst = self.tensors_mut();
        if src.len() != dst.len() {
            return Err(Error::contract("parameter layouts differ"));
        }
        for (d, (_, _, s)) in dst.into_iter().zip(src) {
            if d.len() != s.len() {
                return Err(Error::contract("parameter shapes differ"));
            }
            d.iter_mut().zip(s).for_each(|(a, b)| *a += b);
        }
        Ok(())
    }

    /// Hash of the exact parameter bits, used to detect stale caches.
    pub fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for (name, shape, data) in self.tensors() {
            name.hash(&mut h);
            shape.hash(&mut h);
            for x in data {
                x.to_bits().hash(&mut h);
            }
        }
        h.finish()
    }
}
