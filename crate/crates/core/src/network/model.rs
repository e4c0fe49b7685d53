use super::activation::{dropout, dropout_backward, relu_backward_from_output, relu_in_place, DropoutCache};
use super::config::{NetworkConfig, CONV_LAYERS};
use super::lrn::{local_response_norm, local_response_norm_backward, LrnCache, LrnParams};
use super::params::Parameters;
use super::pool::{maxpool_backward, maxpool_forward, PoolCache};
use super::tensor::{Scalar, Tensor};
use super::{conv, dense};
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Activations kept from a forward pass for [`backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    conv_inputs: Vec<Tensor<T>>,
    /// Post-ReLU conv outputs; their sign doubles as the ReLU mask.
    conv_outputs: Vec<Tensor<T>>,
    pools: Vec<PoolCache>,
    lrns: Vec<LrnCache<T>>,
    pooled_shape: Vec<usize>,
    /// Inputs of the two hidden layers and of the output layer.
    dense_inputs: Vec<Tensor<T>>,
    /// Post-ReLU hidden outputs, before dropout.
    hidden: Vec<Tensor<T>>,
    dropouts: Vec<DropoutCache<T>>,
}

impl<T: Scalar> ForwardCache<T> {
    pub fn dropout_masks(&self) -> impl Iterator<Item = Option<&[bool]>> {
        self.dropouts.iter().map(DropoutCache::mask)
    }

    /// Shapes actually produced, in the order of
    /// [`NetworkConfig::activation_shapes`] minus the logits.
    pub fn activation_shapes(&self) -> Vec<Vec<usize>> {
        let mut out = vec![self.conv_inputs[0].shape().to_vec()];
        for i in 0..CONV_LAYERS {
            out.push(self.conv_outputs[i].shape().to_vec());
            out.push(match self.conv_inputs.get(i + 1) {
                Some(next) => next.shape().to_vec(),
                None => self.pooled_shape.clone(),
            });
        }
        out.extend(self.dense_inputs.iter().map(|t| t.shape().to_vec()));
        out
    }
}

fn check_input<T: Scalar>(cfg: &NetworkConfig, x: &Tensor<T>) -> Result<()> {
    let s = x.shape();
    let ok = s.len() == 4 && s[1] == cfg.input_height && s[2] == cfg.input_width && s[3] == cfg.input_depth;
    if !ok {
        return Err(Error::Shape {
            op: "network input",
            left: s.to_vec(),
            right: vec![s.first().copied().unwrap_or(0), cfg.input_height, cfg.input_width, cfg.input_depth],
        });
    }
    Ok(())
}

/// Logits for a `[batch, height, width, depth]` input. Dropout draws come
/// from `rng` only when `keep_prob < 1`.
pub fn forward<T: Scalar>(
    cfg: &NetworkConfig,
    params: &Parameters<T>,
    x: &Tensor<T>,
    keep_prob: f64,
    rng: &mut RngStream,
) -> Result<(Tensor<T>, ForwardCache<T>)> {
    check_input(cfg, x)?;
    let batch = x.shape()[0];
    let mut cache = ForwardCache {
        conv_inputs: Vec::with_capacity(CONV_LAYERS),
        conv_outputs: Vec::with_capacity(CONV_LAYERS),
        pools: Vec::with_capacity(CONV_LAYERS),
        lrns: Vec::new(),
        pooled_shape: Vec::new(),
        dense_inputs: Vec::with_capacity(3),
        hidden: Vec::with_capacity(2),
        dropouts: Vec::with_capacity(2),
    };

    let mut h = x.clone();
    for i in 0..CONV_LAYERS {
        let (w, b) = params.conv(i);
        let mut y = conv::forward_raw(&h, w, b)?;
        relu_in_place(&mut y);
        let (pooled, pc) = maxpool_forward(&y)?;
        cache.conv_inputs.push(h);
        cache.conv_outputs.push(y);
        cache.pools.push(pc);
        h = if cfg.lrn {
            let (normed, lc) = local_response_norm(&pooled, LrnParams::default())?;
            cache.lrns.push(lc);
            normed
        } else {
            pooled
        };
    }

    cache.pooled_shape = h.shape().to_vec();
    let mut h = h.reshape(&[batch, cfg.fc1_inputs()])?;
    for i in 0..2 {
        let (w, b) = params.dense(i);
        let mut y = dense::forward_raw(&h, w, b)?;
        relu_in_place(&mut y);
        let (dropped, dc) = dropout(&y, keep_prob, rng)?;
        cache.dense_inputs.push(h);
        cache.hidden.push(y);
        cache.dropouts.push(dc);
        h = dropped;
    }
    let (w, b) = params.dense(2);
    let logits = dense::forward_raw(&h, w, b)?;
    cache.dense_inputs.push(h);
    Ok((logits, cache))
}

/// Inference-only forward pass with dropout disabled.
pub fn predict_logits<T: Scalar>(cfg: &NetworkConfig, params: &Parameters<T>, x: &Tensor<T>) -> Result<Tensor<T>> {
    // keep_prob 1 never draws, so any stream will do
    let mut rng = RngStream::new(0, 0);
    forward(cfg, params, x, 1.0, &mut rng).map(|(logits, _)| logits)
}

/// Parameter gradients given the gradient of the loss w.r.t. the logits.
pub fn backward<T: Scalar>(
    cfg: &NetworkConfig,
    params: &Parameters<T>,
    cache: &ForwardCache<T>,
    grad_logits: &Tensor<T>,
) -> Result<Parameters<T>> {
    let mut grads = Parameters::zeros(cfg);

    let (w, _) = params.dense(2);
    let (mut g, gw, gb) = dense::backward_raw(grad_logits, &cache.dense_inputs[2], w)?;
    grads.set(12, gw);
    grads.set(13, gb);
    for i in (0..2).rev() {
        g = dropout_backward(&g, &cache.dropouts[i])?;
        relu_backward_from_output(&mut g, &cache.hidden[i]);
        let (w, _) = params.dense(i);
        let (gx, gw, gb) = dense::backward_raw(&g, &cache.dense_inputs[i], w)?;
        grads.set(8 + 2 * i, gw);
        grads.set(9 + 2 * i, gb);
        g = gx;
    }

    let mut g = g.reshape(&cache.pooled_shape)?;
    for i in (0..CONV_LAYERS).rev() {
        if cfg.lrn {
            g = local_response_norm_backward(&g, &cache.lrns[i])?;
        }
        g = maxpool_backward(&g, &cache.pools[i])?;
        relu_backward_from_output(&mut g, &cache.conv_outputs[i]);
        let (w, _) = params.conv(i);
        let (gx, gw, gb) = conv::backward_raw(&g, &cache.conv_inputs[i], w, i > 0)?;
        grads.set(2 * i, gw);
        grads.set(2 * i + 1, gb);
        if let Some(gx) = gx {
            g = gx;
        }
    }
    Ok(grads)
}
