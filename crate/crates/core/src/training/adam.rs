use crate::error::{Error, Result};
use crate::network::{Parameters, Scalar, Tensor, PARAM_NAMES};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// First and second moment estimates, one pair per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
    step: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &Parameters<T>) -> Self {
        let zeros = || params.tensors().iter().map(|t| Tensor::zeros(t.shape())).collect();
        Self {
            m: zeros(),
            v: zeros(),
            step: 0,
        }
    }

    pub fn from_parts(m: Vec<Tensor<T>>, v: Vec<Tensor<T>>, step: u64) -> Result<Self> {
        if m.len() != v.len() || m.iter().zip(&v).any(|(a, b)| a.shape() != b.shape()) {
            return Err(Error::Contract("adam moments do not pair up".into()));
        }
        if v.iter().flat_map(|t| t.data()).any(|x| *x < T::zero()) {
            return Err(Error::Contract("adam second moment is negative".into()));
        }
        Ok(Self { m, v, step })
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn first_moments(&self) -> &[Tensor<T>] {
        &self.m
    }

    pub fn second_moments(&self) -> &[Tensor<T>] {
        &self.v
    }
}

/// One bias-corrected Adam update. Moments are updated in `T`; the step size
/// is computed in `f64`.
pub fn adam_step<T: Scalar>(params: &mut Parameters<T>, grads: &Parameters<T>, state: &mut AdamState<T>, lr: f64) -> Result<()> {
    let n = params.tensors().len();
    if grads.tensors().len() != n || state.m.len() != n {
        return Err(Error::Contract("adam: parameter, gradient and state counts differ".into()));
    }
    for (i, ((p, g), m)) in params.tensors().iter().zip(grads.tensors()).zip(&state.m).enumerate() {
        if p.shape() != g.shape() || p.shape() != m.shape() {
            return Err(Error::Contract(format!(
                "adam: {} has shape {:?}, gradient {:?}, state {:?}",
                PARAM_NAMES.get(i).unwrap_or(&"?"),
                p.shape(),
                g.shape(),
                m.shape()
            )));
        }
    }

    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - BETA1.powi(t);
    let c2 = 1.0 - BETA2.powi(t);
    let (b1, b2) = (T::from_f64_lossy(BETA1), T::from_f64_lossy(BETA2));
    let (one_b1, one_b2) = (T::one() - b1, T::one() - b2);
    for ((p, g), (m, v)) in params
        .tensors_mut()
        .iter_mut()
        .zip(grads.tensors())
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        for (((p, &g), m), v) in p.data_mut().iter_mut().zip(g.data()).zip(m.data_mut()).zip(v.data_mut()) {
            *m = b1 * *m + one_b1 * g;
            *v = b2 * *v + one_b2 * g * g;
            let m_hat = m.as_f64() / c1;
            let v_hat = v.as_f64() / c2;
            *p = T::from_f64_lossy(p.as_f64() - lr * m_hat / (v_hat.sqrt() + EPSILON));
        }
    }
    Ok(())
}
