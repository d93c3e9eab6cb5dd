use ndarray::{Array2, Axis};

use crate::error::{Error, Result};

use super::forward::{ForwardCache, TrunkCache};
use super::params::{GnnParams, Trunk};

fn relu_grad(upstream: Array2<f64>, pre: &Array2<f64>) -> Array2<f64> {
    let mut g = upstream;
    g.zip_mut_with(pre, |g, &p| {
        if p <= 0.0 {
            *g = 0.0
        }
    });
    g
}

/// Gradients of `Σ d_raw ⊙ raw + d_value · value` with respect to every
/// parameter, given the cache of the forward pass that produced `raw` and
/// `value`. Pass `None` for `d_raw` when only the critic contributes.
pub fn backward(
    params: &GnnParams,
    cache: &ForwardCache,
    d_raw: Option<&Array2<f64>>,
    d_value: f64,
) -> Result<GnnParams> {
    if cache.fingerprint != params.fingerprint() {
        return Err(Error::contract("forward cache does not match parameters"));
    }
    let e = &cache.embeddings;
    let m = e.nrows();
    let mut grads = params.zeros_like();

    let cw = params.critic.weight.column(0);
    let mut d_emb = Array2::from_shape_fn(e.dim(), |(_, j)| d_value * cw[j] / m as f64);
    grads
        .critic
        .weight
        .column_mut(0)
        .assign(&(&cache.pooled * d_value));
    grads.critic.bias[0] = d_value;
    if let Some(d_raw) = d_raw {
        if d_raw.dim() != (m, params.actor.weight.ncols()) {
            return Err(Error::contract("actor gradient shape mismatch"));
        }
        grads.actor.weight = e.t().dot(d_raw);
        grads.actor.bias = d_raw.sum_axis(Axis(0));
        d_emb += &d_raw.dot(&params.actor.weight.t());
    }

    match (&params.trunk, &cache.trunk, &mut grads.trunk) {
        (Trunk::Graph(layers), TrunkCache::Graph(caches), Trunk::Graph(g_layers)) => {
            let mut upstream = d_emb;
            for ((layer, c), g) in layers.iter().zip(caches).zip(g_layers.iter_mut()).rev() {
                let d_pre_ind = relu_grad(upstream, &c.pre_ind);
                let g_ind_w = c.agg_ind.t().dot(&d_pre_ind);
                g.individual_bias = d_pre_ind.sum_axis(Axis(0));
                let d_agg_ind = d_pre_ind.dot(&layer.individual_weight().t());
                let d_area = c.fc.t().dot(&d_agg_ind);
                let d_pre_area = relu_grad(d_area, &c.pre_area);
                g.area.weight = c.agg_area.t().dot(&d_pre_area);
                g.area.bias = d_pre_area.sum_axis(Axis(0));
                match &mut g.individual_weight {
                    Some(w) => *w = g_ind_w,
                    None => g.area.weight += &g_ind_w,
                }
                let d_agg_area =
                    d_pre_area.dot(&layer.area.weight.t()) * c.inv_mass.view().insert_axis(Axis(1));
                upstream = c.fc.dot(&d_agg_area);
                debug_assert_eq!(upstream.dim(), c.input.dim());
            }
        }
        (
            Trunk::Perceptron([_, d2]),
            TrunkCache::Perceptron {
                input,
                pre1,
                hidden,
                pre2,
            },
            Trunk::Perceptron([g1, g2]),
        ) => {
            let d_pre2 = relu_grad(d_emb, pre2);
            g2.weight = hidden.t().dot(&d_pre2);
            g2.bias = d_pre2.sum_axis(Axis(0));
            let d_pre1 = relu_grad(d_pre2.dot(&d2.weight.t()), pre1);
            g1.weight = input.t().dot(&d_pre1);
            g1.bias = d_pre1.sum_axis(Axis(0));
        }
        _ => {
            return Err(Error::contract(
                "forward cache trunk does not match parameters",
            ))
        }
    }
    Ok(grads)
}
