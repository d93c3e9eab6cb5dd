use ndarray::{Array1, Array2, Axis};

use crate::error::{Error, Result};

use super::features::{masked_row_softmax, StateFeatures};
use super::params::{Dense, GnnParams, Trunk};

#[derive(Debug, Clone)]
pub(super) struct LayerCache {
    pub fc: Array2<f64>,
    /// 1 / column sum of `fc`, or 0 for areas nobody visited.
    pub inv_mass: Array1<f64>,
    pub input: Array2<f64>,
    pub agg_area: Array2<f64>,
    pub pre_area: Array2<f64>,
    pub agg_ind: Array2<f64>,
    pub pre_ind: Array2<f64>,
}

#[derive(Debug, Clone)]
pub(super) enum TrunkCache {
    Graph(Vec<LayerCache>),
    Perceptron {
        input: Array2<f64>,
        pre1: Array2<f64>,
        hidden: Array2<f64>,
        pre2: Array2<f64>,
    },
}

/// Intermediates of one forward pass, tied to the parameters that produced it.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub(super) fingerprint: u64,
    pub(super) trunk: TrunkCache,
    pub(super) embeddings: Array2<f64>,
    pub(super) pooled: Array1<f64>,
}

impl ForwardCache {
    pub fn embeddings(&self) -> &Array2<f64> {
        &self.embeddings
    }
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    /// M × 4 raw actor outputs.
    pub raw: Array2<f64>,
    pub value: f64,
    pub cache: ForwardCache,
}

pub(super) fn relu(x: &Array2<f64>) -> Array2<f64> {
    x.mapv(|v| v.max(0.0))
}

fn affine(x: &Array2<f64>, w: &Array2<f64>, b: &Array1<f64>) -> Array2<f64> {
    x.dot(w) + b
}

fn dense(x: &Array2<f64>, d: &Dense) -> Array2<f64> {
    affine(x, &d.weight, &d.bias)
}

pub fn gnn_forward(params: &GnnParams, feats: &StateFeatures) -> Result<ForwardCache> {
    feats.check(params.config.layers)?;
    let m = feats.population();
    let (embeddings, trunk) = match &params.trunk {
        Trunk::Graph(layers) => {
            let mut x = feats.node.clone();
            let mut caches = Vec::with_capacity(layers.len());
            for (layer, visits) in layers.iter().zip(&feats.visits) {
                if x.ncols() != layer.area.weight.nrows() {
                    return Err(Error::contract("layer input width mismatch"));
                }
                let fc = masked_row_softmax(visits);
                let inv_mass = fc
                    .sum_axis(Axis(0))
                    .mapv(|s| if s > 0.0 { 1.0 / s } else { 0.0 });
                let agg_area = fc.t().dot(&x) * inv_mass.view().insert_axis(Axis(1));
                let pre_area = dense(&agg_area, &layer.area);
                let area = relu(&pre_area);
                let agg_ind = fc.dot(&area);
                let pre_ind = affine(&agg_ind, layer.individual_weight(), &layer.individual_bias);
                let next = relu(&pre_ind);
                caches.push(LayerCache {
                    fc,
                    inv_mass,
                    input: x,
                    agg_area,
                    pre_area,
                    agg_ind,
                    pre_ind,
                });
                x = next;
            }
            (x, TrunkCache::Graph(caches))
        }
        Trunk::Perceptron([d1, d2]) => {
            let input = feats.node.clone();
            let pre1 = dense(&input, d1);
            let hidden = relu(&pre1);
            let pre2 = dense(&hidden, d2);
            (
                relu(&pre2),
                TrunkCache::Perceptron {
                    input,
                    pre1,
                    hidden,
                    pre2,
                },
            )
        }
    };
    if !embeddings.iter().all(|v| v.is_finite()) {
        return Err(Error::numeric("non-finite embedding"));
    }
    let pooled = embeddings.sum_axis(Axis(0)) / m as f64;
    Ok(ForwardCache {
        fingerprint: params.fingerprint(),
        trunk,
        embeddings,
        pooled,
    })
}

fn heads(params: &GnnParams, cache: &ForwardCache) -> Result<(Array2<f64>, f64)> {
    let raw = dense(&cache.embeddings, &params.actor);
    let value = cache.pooled.dot(&params.critic.weight.column(0)) + params.critic.bias[0];
    if !value.is_finite() || !raw.iter().all(|v| v.is_finite()) {
        return Err(Error::numeric("non-finite network output"));
    }
    Ok((raw, value))
}

/// Trunk plus both heads in one pass.
pub fn evaluate(params: &GnnParams, feats: &StateFeatures) -> Result<Evaluation> {
    let cache = gnn_forward(params, feats)?;
    let (raw, value) = heads(params, &cache)?;
    Ok(Evaluation { raw, value, cache })
}

pub fn actor_forward(params: &GnnParams, feats: &StateFeatures) -> Result<Array2<f64>> {
    Ok(evaluate(params, feats)?.raw)
}

pub fn critic_forward(params: &GnnParams, feats: &StateFeatures) -> Result<f64> {
    Ok(evaluate(params, feats)?.value)
}
