use super::tensor::{Scalar, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct FcCache<T> {
    input: Tensor<T>,
    weight: Tensor<T>,
}

fn check<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>) -> Result<(usize, usize, usize)> {
    let (xs, ws) = (x.shape(), w.shape());
    if xs.len() != 2 || ws.len() != 2 || xs[1] != ws[0] {
        return Err(Error::Shape {
            op: "fully connected",
            left: xs.to_vec(),
            right: ws.to_vec(),
        });
    }
    Ok((xs[0], xs[1], ws[1]))
}

pub(crate) fn forward_raw<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, bias: &Tensor<T>) -> Result<Tensor<T>> {
    let (b, n, m) = check(x, w)?;
    if bias.shape() != [m] {
        return Err(Error::Shape {
            op: "fully connected bias",
            left: w.shape().to_vec(),
            right: bias.shape().to_vec(),
        });
    }
    let mut y = Tensor::zeros(&[b, m]);
    for row in y.data_mut().chunks_exact_mut(m) {
        row.copy_from_slice(bias.data());
    }
    T::gemm(false, false, b, m, n, T::one(), x.data(), w.data(), T::one(), y.data_mut());
    Ok(y)
}

pub(crate) fn backward_raw<T: Scalar>(
    grad_y: &Tensor<T>,
    x: &Tensor<T>,
    w: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let (b, n, m) = check(x, w)?;
    if grad_y.shape() != [b, m] {
        return Err(Error::Contract(format!(
            "fully connected backward: grad shape {:?}, expected {:?}",
            grad_y.shape(),
            [b, m]
        )));
    }
    let mut gx = Tensor::zeros(&[b, n]);
    let mut gw = Tensor::zeros(&[n, m]);
    let mut gb = Tensor::zeros(&[m]);
    T::gemm(false, true, b, n, m, T::one(), grad_y.data(), w.data(), T::zero(), gx.data_mut());
    T::gemm(true, false, n, m, b, T::one(), x.data(), grad_y.data(), T::zero(), gw.data_mut());
    for row in grad_y.data().chunks_exact(m) {
        for (acc, v) in gb.data_mut().iter_mut().zip(row) {
            *acc = *acc + *v;
        }
    }
    Ok((gx, gw, gb))
}

/// `y = x * w + bias` for `x: [b, n]`, `w: [n, m]`.
pub fn fc_forward<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, bias: &Tensor<T>) -> Result<(Tensor<T>, FcCache<T>)> {
    let y = forward_raw(x, w, bias)?;
    Ok((
        y,
        FcCache {
            input: x.clone(),
            weight: w.clone(),
        },
    ))
}

/// Returns `(grad_x, grad_w, grad_b)`.
pub fn fc_backward<T: Scalar>(grad_y: &Tensor<T>, cache: &FcCache<T>) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    backward_raw(grad_y, &cache.input, &cache.weight)
}
