//! 2x2 max pooling, stride 2, SAME padding (windows hanging off the
//! bottom/right edge take the max of their in-bounds elements).

use super::tensor::{Scalar, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct PoolCache {
    input_shape: Vec<usize>,
    /// Flat input index of each output's maximum.
    argmax: Vec<usize>,
}

pub fn pooled_len(n: usize) -> usize {
    n.div_ceil(2)
}

pub fn maxpool_forward<T: Scalar>(x: &Tensor<T>) -> Result<(Tensor<T>, PoolCache)> {
    let s = x.shape();
    if s.len() != 4 {
        return Err(Error::Shape {
            op: "maxpool",
            left: s.to_vec(),
            right: vec![0, 0, 0, 0],
        });
    }
    let (b, h, w, c) = (s[0], s[1], s[2], s[3]);
    let (oh, ow) = (pooled_len(h), pooled_len(w));
    let mut y = vec![T::zero(); b * oh * ow * c];
    let mut argmax = vec![0usize; b * oh * ow * c];
    let data = x.data();
    for n in 0..b {
        for oy in 0..oh {
            for ox in 0..ow {
                let o = ((n * oh + oy) * ow + ox) * c;
                let (best, best_i) = (&mut y[o..o + c], &mut argmax[o..o + c]);
                let first = ((n * h + 2 * oy) * w + 2 * ox) * c;
                best.copy_from_slice(&data[first..first + c]);
                for (ch, bi) in best_i.iter_mut().enumerate() {
                    *bi = first + ch;
                }
                // row-major scan; strict comparison keeps the first maximum
                for iy in 2 * oy..(2 * oy + 2).min(h) {
                    for ix in 2 * ox..(2 * ox + 2).min(w) {
                        let base = ((n * h + iy) * w + ix) * c;
                        if base == first {
                            continue;
                        }
                        for ch in 0..c {
                            let v = data[base + ch];
                            if v > best[ch] {
                                best[ch] = v;
                                best_i[ch] = base + ch;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok((
        Tensor::from_vec(vec![b, oh, ow, c], y)?,
        PoolCache {
            input_shape: s.to_vec(),
            argmax,
        },
    ))
}

pub fn maxpool_backward<T: Scalar>(grad_y: &Tensor<T>, cache: &PoolCache) -> Result<Tensor<T>> {
    if grad_y.len() != cache.argmax.len() {
        return Err(Error::Contract(format!(
            "maxpool backward: grad has {} elements, forward produced {}",
            grad_y.len(),
            cache.argmax.len()
        )));
    }
    let mut gx = Tensor::zeros(&cache.input_shape);
    let out = gx.data_mut();
    for (&i, &g) in cache.argmax.iter().zip(grad_y.data()) {
        out[i] = out[i] + g;
    }
    Ok(gx)
}
