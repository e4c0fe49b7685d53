//! 2-D convolution, stride 1, SAME zero padding, NHWC layout.
//!
//! Each image is unfolded into a `(h*w) x (k*k*ci)` patch matrix so the
//! convolution becomes one GEMM against the `(k*k*ci) x co` filter matrix.
//! Filters are stored `[k, k, ci, co]`, which is already that matrix in
//! row-major order.

use super::tensor::{Scalar, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
struct Geometry {
    batch: usize,
    h: usize,
    w: usize,
    ci: usize,
    co: usize,
    k: usize,
    pad_top: usize,
    pad_left: usize,
}

impl Geometry {
    fn of(x: &Tensor<impl Scalar>, w: &Tensor<impl Scalar>) -> Result<Self> {
        let xs = x.shape();
        let ws = w.shape();
        if xs.len() != 4 || ws.len() != 4 || ws[0] != ws[1] || ws[2] != xs[3] || ws[0] == 0 {
            return Err(Error::Shape {
                op: "conv2d",
                left: xs.to_vec(),
                right: ws.to_vec(),
            });
        }
        let k = ws[0];
        // SAME: total padding k-1, the odd one goes bottom/right
        let pad = (k - 1) / 2;
        Ok(Self {
            batch: xs[0],
            h: xs[1],
            w: xs[2],
            ci: xs[3],
            co: ws[3],
            k,
            pad_top: pad,
            pad_left: pad,
        })
    }

    fn positions(&self) -> usize {
        self.h * self.w
    }

    fn patch(&self) -> usize {
        self.k * self.k * self.ci
    }

    fn image_len(&self) -> usize {
        self.h * self.w * self.ci
    }
}

fn im2col<T: Scalar>(img: &[T], g: &Geometry, col: &mut [T]) {
    let patch = g.patch();
    let span = g.k * g.ci;
    for oy in 0..g.h {
        for ox in 0..g.w {
            let row = &mut col[(oy * g.w + ox) * patch..][..patch];
            // kernel columns [kx_lo, kx_hi) land inside the image
            let x0 = ox as isize - g.pad_left as isize;
            let kx_lo = (-x0).max(0) as usize;
            let kx_hi = (g.w as isize - x0).min(g.k as isize) as usize;
            for ky in 0..g.k {
                let iy = (oy + ky) as isize - g.pad_top as isize;
                let dst = &mut row[ky * span..][..span];
                if iy < 0 || iy >= g.h as isize {
                    dst.fill(T::zero());
                    continue;
                }
                dst[..kx_lo * g.ci].fill(T::zero());
                dst[kx_hi * g.ci..].fill(T::zero());
                let s = (iy as usize * g.w) as isize + x0 + kx_lo as isize;
                let s = s as usize * g.ci;
                dst[kx_lo * g.ci..kx_hi * g.ci].copy_from_slice(&img[s..s + (kx_hi - kx_lo) * g.ci]);
            }
        }
    }
}

fn col2im<T: Scalar>(col: &[T], g: &Geometry, img: &mut [T]) {
    let patch = g.patch();
    let span = g.k * g.ci;
    for oy in 0..g.h {
        for ox in 0..g.w {
            let row = &col[(oy * g.w + ox) * patch..][..patch];
            let x0 = ox as isize - g.pad_left as isize;
            let kx_lo = (-x0).max(0) as usize;
            let kx_hi = (g.w as isize - x0).min(g.k as isize) as usize;
            for ky in 0..g.k {
                let iy = (oy + ky) as isize - g.pad_top as isize;
                if iy < 0 || iy >= g.h as isize {
                    continue;
                }
                let src = &row[ky * span + kx_lo * g.ci..ky * span + kx_hi * g.ci];
                let s = ((iy as usize * g.w) as isize + x0 + kx_lo as isize) as usize * g.ci;
                for (d, v) in img[s..s + src.len()].iter_mut().zip(src) {
                    *d = *d + *v;
                }
            }
        }
    }
}

pub(crate) fn forward_raw<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, bias: &Tensor<T>) -> Result<Tensor<T>> {
    let g = Geometry::of(x, w)?;
    if bias.shape() != [g.co] {
        return Err(Error::Shape {
            op: "conv2d bias",
            left: w.shape().to_vec(),
            right: bias.shape().to_vec(),
        });
    }
    let mut y = Tensor::zeros(&[g.batch, g.h, g.w, g.co]);
    let mut col = vec![T::zero(); g.positions() * g.patch()];
    let out_len = g.positions() * g.co;
    for (img, out) in x.data().chunks_exact(g.image_len()).zip(y.data_mut().chunks_exact_mut(out_len)) {
        for row in out.chunks_exact_mut(g.co) {
            row.copy_from_slice(bias.data());
        }
        im2col(img, &g, &mut col);
        T::gemm(false, false, g.positions(), g.co, g.patch(), T::one(), &col, w.data(), T::one(), out);
    }
    Ok(y)
}

/// Gradients of the convolution. `grad_x` is skipped when not needed (the
/// network input).
pub(crate) fn backward_raw<T: Scalar>(
    grad_y: &Tensor<T>,
    x: &Tensor<T>,
    w: &Tensor<T>,
    need_grad_x: bool,
) -> Result<(Option<Tensor<T>>, Tensor<T>, Tensor<T>)> {
    let g = Geometry::of(x, w)?;
    if grad_y.shape() != [g.batch, g.h, g.w, g.co] {
        return Err(Error::Contract(format!(
            "conv2d backward: grad shape {:?} does not match forward output {:?}",
            grad_y.shape(),
            [g.batch, g.h, g.w, g.co]
        )));
    }
    let mut grad_w = Tensor::zeros(w.shape());
    let mut grad_b = Tensor::zeros(&[g.co]);
    let mut grad_x = need_grad_x.then(|| Tensor::zeros(x.shape()));
    let mut col = vec![T::zero(); g.positions() * g.patch()];
    let mut dcol = vec![T::zero(); g.positions() * g.patch()];
    let out_len = g.positions() * g.co;

    for (b, gy) in grad_y.data().chunks_exact(out_len).enumerate() {
        let img = &x.data()[b * g.image_len()..][..g.image_len()];
        for row in gy.chunks_exact(g.co) {
            for (acc, v) in grad_b.data_mut().iter_mut().zip(row) {
                *acc = *acc + *v;
            }
        }
        im2col(img, &g, &mut col);
        T::gemm(true, false, g.patch(), g.co, g.positions(), T::one(), &col, gy, T::one(), grad_w.data_mut());
        if let Some(gx) = grad_x.as_mut() {
            T::gemm(false, true, g.positions(), g.patch(), g.co, T::one(), gy, w.data(), T::zero(), &mut dcol);
            col2im(&dcol, &g, &mut gx.data_mut()[b * g.image_len()..][..g.image_len()]);
        }
    }
    Ok((grad_x, grad_w, grad_b))
}

#[derive(Debug, Clone)]
pub struct ConvCache<T> {
    input: Tensor<T>,
    weight: Tensor<T>,
}

/// `y = conv(x, w) + bias` with SAME padding and unit stride.
pub fn conv2d_forward<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, bias: &Tensor<T>) -> Result<(Tensor<T>, ConvCache<T>)> {
    let y = forward_raw(x, w, bias)?;
    Ok((
        y,
        ConvCache {
            input: x.clone(),
            weight: w.clone(),
        },
    ))
}

/// Returns `(grad_x, grad_w, grad_b)`.
pub fn conv2d_backward<T: Scalar>(grad_y: &Tensor<T>, cache: &ConvCache<T>) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let (gx, gw, gb) = backward_raw(grad_y, &cache.input, &cache.weight, true)?;
    Ok((gx.expect("grad_x requested"), gw, gb))
}
