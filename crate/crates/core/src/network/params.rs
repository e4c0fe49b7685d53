use super::config::NetworkConfig;
use super::tensor::{Scalar, Tensor};
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Trainable tensor names, in storage order.
pub const PARAM_NAMES: [&str; 14] = [
    "conv_weight1",
    "conv_bias1",
    "conv_weight2",
    "conv_bias2",
    "conv_weight3",
    "conv_bias3",
    "conv_weight4",
    "conv_bias4",
    "fcl_weight1",
    "fcl_bias1",
    "fcl_weight2",
    "fcl_bias2",
    "out_weight",
    "out_bias",
];

pub const INIT_STD: f64 = 0.05;

/// Weights and biases of every layer. Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters<T> {
    tensors: Vec<Tensor<T>>,
}

impl<T: Scalar> Parameters<T> {
    pub fn zeros(cfg: &NetworkConfig) -> Self {
        Self {
            tensors: cfg.param_shapes().iter().map(|s| Tensor::zeros(s)).collect(),
        }
    }

    /// Wrap tensors given in [`PARAM_NAMES`] order, checking them against
    /// `cfg`.
    pub fn from_tensors(cfg: &NetworkConfig, tensors: Vec<Tensor<T>>) -> Result<Self> {
        let shapes = cfg.param_shapes();
        if tensors.len() != shapes.len() {
            return Err(Error::Contract(format!("expected {} parameter tensors, got {}", shapes.len(), tensors.len())));
        }
        for ((t, s), name) in tensors.iter().zip(&shapes).zip(PARAM_NAMES) {
            if t.shape() != s.as_slice() {
                return Err(Error::Contract(format!("{name}: shape {:?}, configuration needs {s:?}", t.shape())));
            }
        }
        Ok(Self { tensors })
    }

    pub fn tensors(&self) -> &[Tensor<T>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor<T>] {
        &mut self.tensors
    }

    pub fn named(&self) -> impl Iterator<Item = (&'static str, &Tensor<T>)> {
        PARAM_NAMES.into_iter().zip(&self.tensors)
    }

    /// `(weight, bias)` of convolution block `i` (0-based).
    pub fn conv(&self, i: usize) -> (&Tensor<T>, &Tensor<T>) {
        (&self.tensors[2 * i], &self.tensors[2 * i + 1])
    }

    /// `(weight, bias)` of dense layer `i`: 0 and 1 are the hidden layers,
    /// 2 is the output layer.
    pub fn dense(&self, i: usize) -> (&Tensor<T>, &Tensor<T>) {
        (&self.tensors[8 + 2 * i], &self.tensors[9 + 2 * i])
    }

    pub(crate) fn set(&mut self, index: usize, t: Tensor<T>) {
        debug_assert_eq!(self.tensors[index].shape(), t.shape());
        self.tensors[index] = t;
    }

    pub fn cast<U: Scalar>(&self) -> Parameters<U> {
        Parameters {
            tensors: self.tensors.iter().map(Tensor::cast).collect(),
        }
    }

    pub fn count(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }
}

/// Truncated-normal weights (sigma 0.05, cut at two sigma), zero biases.
/// Tensors are drawn in [`PARAM_NAMES`] order.
pub fn init_params<T: Scalar>(cfg: &NetworkConfig, rng: &mut RngStream) -> Result<Parameters<T>> {
    cfg.validate()?;
    let tensors = cfg
        .param_shapes()
        .iter()
        .enumerate()
        .map(|(i, shape)| {
            if i % 2 == 0 {
                Tensor::from_fn(shape, |_| T::from_f64_lossy(rng.truncated_normal(INIT_STD)))
            } else {
                Tensor::zeros(shape)
            }
        })
        .collect();
    Ok(Parameters { tensors })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_shapes_and_zero_biases() {
        let cfg = NetworkConfig::table(1, 4, 3).unwrap();
        let p: Parameters<f32> = init_params(&cfg, &mut RngStream::new(1, 0)).unwrap();
        assert_eq!(p.conv(0).0.shape(), &[5, 5, 4, 16]);
        assert_eq!(p.dense(0).0.shape(), &[6272, 1024]);
        assert_eq!(p.dense(2).0.shape(), &[256, 3]);
        for (name, t) in p.named() {
            if name.contains("bias") {
                assert!(t.data().iter().all(|v| *v == 0.0), "{name}");
            } else {
                assert!(t.data().iter().all(|v| v.abs() <= 0.1), "{name}");
            }
        }
    }

    #[test]
    fn from_tensors_checks_shapes() {
        let cfg = NetworkConfig::table(2, 3, 5).unwrap();
        let mut ts = Parameters::<f32>::zeros(&cfg).tensors().to_vec();
        assert!(Parameters::from_tensors(&cfg, ts.clone()).is_ok());
        ts[3] = Tensor::zeros(&[7]);
        assert!(Parameters::from_tensors(&cfg, ts).is_err());
    }
}
