use super::tensor::{Scalar, Tensor};
use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone)]
pub struct ReluCache {
    active: Vec<bool>,
}

pub fn relu<T: Scalar>(x: &Tensor<T>) -> (Tensor<T>, ReluCache) {
    let active = x.data().iter().map(|v| *v > T::zero()).collect();
    (x.map(|v| if v > T::zero() { v } else { T::zero() }), ReluCache { active })
}

/// Gradient passes where the input was strictly positive; zero elsewhere,
/// including at exactly 0.
pub fn relu_backward<T: Scalar>(grad_y: &Tensor<T>, cache: &ReluCache) -> Result<Tensor<T>> {
    if grad_y.len() != cache.active.len() {
        return Err(Error::Contract("relu backward: gradient does not match forward input".into()));
    }
    let data = grad_y
        .data()
        .iter()
        .zip(&cache.active)
        .map(|(g, a)| if *a { *g } else { T::zero() })
        .collect();
    Tensor::from_vec(grad_y.shape().to_vec(), data)
}

/// In-place backward used by the network, where the forward output stands
/// in for the input (`y > 0` iff `x > 0`).
pub(crate) fn relu_backward_from_output<T: Scalar>(grad: &mut Tensor<T>, y: &Tensor<T>) {
    for (g, v) in grad.data_mut().iter_mut().zip(y.data()) {
        if *v <= T::zero() {
            *g = T::zero();
        }
    }
}

pub(crate) fn relu_in_place<T: Scalar>(x: &mut Tensor<T>) {
    for v in x.data_mut() {
        if *v <= T::zero() {
            *v = T::zero();
        }
    }
}

#[derive(Debug, Clone)]
pub struct DropoutCache<T> {
    keep_prob: T,
    /// `None` when `keep_prob == 1`.
    mask: Option<Vec<bool>>,
}

impl<T: Scalar> DropoutCache<T> {
    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }
}

/// Keep each element with probability `keep_prob`, scaling survivors by
/// `1 / keep_prob`. One draw per element in row-major order; none at all when
/// `keep_prob == 1`.
pub fn dropout<T: Scalar>(x: &Tensor<T>, keep_prob: f64, rng: &mut RngStream) -> Result<(Tensor<T>, DropoutCache<T>)> {
    if !(keep_prob > 0.0 && keep_prob <= 1.0) {
        return Err(Error::invalid(format!("keep_prob {keep_prob} must lie in (0, 1]")));
    }
    let kp = T::from_f64_lossy(keep_prob);
    if keep_prob == 1.0 {
        return Ok((x.clone(), DropoutCache { keep_prob: kp, mask: None }));
    }
    let mask: Vec<bool> = (0..x.len()).map(|_| rng.bernoulli(keep_prob)).collect();
    let data = x
        .data()
        .iter()
        .zip(&mask)
        .map(|(v, m)| if *m { *v / kp } else { T::zero() })
        .collect();
    Ok((
        Tensor::from_vec(x.shape().to_vec(), data)?,
        DropoutCache {
            keep_prob: kp,
            mask: Some(mask),
        },
    ))
}

pub fn dropout_backward<T: Scalar>(grad_y: &Tensor<T>, cache: &DropoutCache<T>) -> Result<Tensor<T>> {
    match &cache.mask {
        None => Ok(grad_y.clone()),
        Some(mask) => {
            if mask.len() != grad_y.len() {
                return Err(Error::Contract("dropout backward: gradient does not match mask".into()));
            }
            let data = grad_y
                .data()
                .iter()
                .zip(mask)
                .map(|(g, m)| if *m { *g / cache.keep_prob } else { T::zero() })
                .collect();
            Tensor::from_vec(grad_y.shape().to_vec(), data)
        }
    }
}
