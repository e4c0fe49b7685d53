//! Across-channel local response normalization:
//! `y[c] = x[c] / (bias + alpha * sum_{|c'-c| <= radius} x[c']^2)^beta`.

use super::tensor::{Scalar, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrnParams {
    pub radius: usize,
    pub bias: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for LrnParams {
    fn default() -> Self {
        Self {
            radius: 4,
            bias: 1.0,
            alpha: 0.001 / 9.0,
            beta: 0.75,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LrnCache<T> {
    input: Tensor<T>,
    /// `bias + alpha * window sum of squares`, per element.
    denom: Vec<f64>,
    params: LrnParams,
}

fn window(c: usize, channels: usize, radius: usize) -> std::ops::Range<usize> {
    c.saturating_sub(radius)..(c + radius + 1).min(channels)
}

pub fn local_response_norm<T: Scalar>(x: &Tensor<T>, params: LrnParams) -> Result<(Tensor<T>, LrnCache<T>)> {
    let channels = *x.shape().last().ok_or_else(|| Error::invalid("lrn on a rank-0 tensor"))?;
    let mut denom = Vec::with_capacity(x.len());
    let mut out = Vec::with_capacity(x.len());
    for px in x.data().chunks_exact(channels.max(1)) {
        for c in 0..channels {
            let sq: f64 = px[window(c, channels, params.radius)].iter().map(|v| v.as_f64().powi(2)).sum();
            let d = params.bias + params.alpha * sq;
            denom.push(d);
            out.push(T::from_f64_lossy(px[c].as_f64() * d.powf(-params.beta)));
        }
    }
    Ok((
        Tensor::from_vec(x.shape().to_vec(), out)?,
        LrnCache {
            input: x.clone(),
            denom,
            params,
        },
    ))
}

pub fn local_response_norm_backward<T: Scalar>(grad_y: &Tensor<T>, cache: &LrnCache<T>) -> Result<Tensor<T>> {
    if grad_y.shape() != cache.input.shape() {
        return Err(Error::Contract("lrn backward: gradient does not match input".into()));
    }
    let p = cache.params;
    let channels = *cache.input.shape().last().unwrap();
    let mut out = Vec::with_capacity(grad_y.len());
    for ((px, gy), d) in cache
        .input
        .data()
        .chunks_exact(channels)
        .zip(grad_y.data().chunks_exact(channels))
        .zip(cache.denom.chunks_exact(channels))
    {
        for k in 0..channels {
            let xk = px[k].as_f64();
            let mut g = gy[k].as_f64() * d[k].powf(-p.beta);
            // channel k sits in the window of every i with |i - k| <= radius
            let cross: f64 = window(k, channels, p.radius)
                .map(|i| gy[i].as_f64() * px[i].as_f64() * d[i].powf(-p.beta - 1.0))
                .sum();
            g -= 2.0 * p.alpha * p.beta * xk * cross;
            out.push(T::from_f64_lossy(g));
        }
    }
    Tensor::from_vec(grad_y.shape().to_vec(), out)
}
