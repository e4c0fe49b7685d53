//! Independent reference implementations and fixtures shared by the
//! integration tests.
#![allow(dead_code)]

pub mod gradcheck;

use std::collections::VecDeque;
use std::path::{Path, PathBuf};

use fruitnet::imaging::{Colorspace, RasterImage};
use fruitnet::network::{NetworkConfig, Tensor};
use fruitnet::records::{write_shard, ExampleRecord, ShardSet, Split};
use fruitnet::rng::RngStream;
use fruitnet::synthetic::{synthetic_records, SyntheticSpec};

pub const FD_EPS: f64 = 1e-5;

/// Relative error with a floor on the denominator so that two tiny values
/// that agree to ~1e-12 in absolute terms do not register as a mismatch.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Central differences of `f` w.r.t. every element of `x`.
pub fn numeric_grad(x: &Tensor<f64>, mut f: impl FnMut(&Tensor<f64>) -> f64) -> Vec<f64> {
    let mut probe = x.clone();
    (0..x.len())
        .map(|i| {
            let orig = probe.data()[i];
            probe.data_mut()[i] = orig + FD_EPS;
            let up = f(&probe);
            probe.data_mut()[i] = orig - FD_EPS;
            let down = f(&probe);
            probe.data_mut()[i] = orig;
            (up - down) / (2.0 * FD_EPS)
        })
        .collect()
}

pub fn max_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic.iter().zip(numeric).map(|(a, n)| rel_err(*a, *n)).fold(0.0, f64::max)
}

pub fn dot(a: &Tensor<f64>, b: &Tensor<f64>) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

pub fn random_tensor(shape: &[usize], rng: &mut RngStream, lo: f64, hi: f64) -> Tensor<f64> {
    Tensor::from_fn(shape, |_| rng.uniform(lo, hi))
}

/// Direct 7-loop SAME convolution, NHWC input, `[k, k, ci, co]` filters.
pub fn naive_conv(x: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>) -> Tensor<f64> {
    let (n, h, wd, ci) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
    let (k, co) = (w.shape()[0], w.shape()[3]);
    let pad = (k as isize - 1) / 2;
    let mut y = Tensor::zeros(&[n, h, wd, co]);
    for bi in 0..n {
        for oy in 0..h {
            for ox in 0..wd {
                for o in 0..co {
                    let mut acc = b.data()[o];
                    for ky in 0..k {
                        for kx in 0..k {
                            let iy = oy as isize + ky as isize - pad;
                            let ix = ox as isize + kx as isize - pad;
                            if iy < 0 || ix < 0 || iy >= h as isize || ix >= wd as isize {
                                continue;
                            }
                            for c in 0..ci {
                                let xv = x.data()[((bi * h + iy as usize) * wd + ix as usize) * ci + c];
                                let wv = w.data()[((ky * k + kx) * ci + c) * co + o];
                                acc += xv * wv;
                            }
                        }
                    }
                    y.data_mut()[((bi * h + oy) * wd + ox) * co + o] = acc;
                }
            }
        }
    }
    y
}

/// Background mask by repeated sweeps until no pixel changes: a pixel joins
/// when a marked 4-neighbour is closer than `threshold` in RGB.
pub fn sweep_fill_oracle(img: &RasterImage, threshold: f64) -> Vec<bool> {
    let (h, w) = (img.height(), img.width());
    let mut marked: Vec<bool> = (0..h * w)
        .map(|i| {
            let (r, c) = (i / w, i % w);
            r == 0 || c == 0 || r == h - 1 || c == w - 1
        })
        .collect();
    let dist = |a: usize, b: usize| -> f64 {
        let (pa, pb) = (img.pixel(a / w, a % w), img.pixel(b / w, b % w));
        pa.iter()
            .zip(pb)
            .map(|(x, y)| (f64::from(*x) - f64::from(*y)).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    loop {
        let mut changed = false;
        for i in 0..h * w {
            if marked[i] {
                continue;
            }
            let (r, c) = (i / w, i % w);
            let mut nbrs = Vec::with_capacity(4);
            if r > 0 {
                nbrs.push(i - w);
            }
            if r + 1 < h {
                nbrs.push(i + w);
            }
            if c > 0 {
                nbrs.push(i - 1);
            }
            if c + 1 < w {
                nbrs.push(i + 1);
            }
            if nbrs.iter().any(|&j| marked[j] && dist(i, j) < threshold) {
                marked[i] = true;
                changed = true;
            }
        }
        if !changed {
            return marked;
        }
    }
}

/// Breadth-first traversal of the same reachability, for a second opinion.
pub fn bfs_fill_oracle(img: &RasterImage, threshold: f64) -> Vec<bool> {
    let (h, w) = (img.height(), img.width());
    let mut marked = vec![false; h * w];
    let mut todo: VecDeque<usize> = VecDeque::new();
    for i in 0..h * w {
        let (r, c) = (i / w, i % w);
        if r == 0 || c == 0 || r == h - 1 || c == w - 1 {
            marked[i] = true;
            todo.push_back(i);
        }
    }
    while let Some(i) = todo.pop_front() {
        let (r, c) = (i / w, i % w);
        for (dr, dc) in [(-1isize, 0isize), (1, 0), (0, -1), (0, 1)] {
            let (nr, nc) = (r as isize + dr, c as isize + dc);
            if nr < 0 || nc < 0 || nr >= h as isize || nc >= w as isize {
                continue;
            }
            let j = nr as usize * w + nc as usize;
            let d: f64 = img
                .pixel(r, c)
                .iter()
                .zip(img.pixel(nr as usize, nc as usize))
                .map(|(x, y)| (f64::from(*x) - f64::from(*y)).powi(2))
                .sum::<f64>()
                .sqrt();
            if !marked[j] && d < threshold {
                marked[j] = true;
                todo.push_back(j);
            }
        }
    }
    marked
}

pub fn random_image(rng: &mut RngStream, h: usize, w: usize, levels: u32) -> RasterImage {
    let px = (0..h * w * 3)
        .map(|_| (rng.below(levels as usize + 1) as f64 / f64::from(levels)) as f32)
        .collect();
    RasterImage::new(h, w, Colorspace::Rgb, px).unwrap()
}

/// Light backdrop with a few darker filled discs, some touching the border.
pub fn blob_image(rng: &mut RngStream, h: usize, w: usize) -> RasterImage {
    let bg = [rng.uniform(0.85, 1.0), rng.uniform(0.85, 1.0), rng.uniform(0.85, 1.0)];
    let blobs: Vec<(f64, f64, f64, [f64; 3])> = (0..rng.below(4) + 1)
        .map(|_| {
            (
                rng.uniform(0.0, h as f64),
                rng.uniform(0.0, w as f64),
                rng.uniform(2.0, h as f64 / 2.5),
                [rng.uniform(0.0, 0.7), rng.uniform(0.0, 0.7), rng.uniform(0.0, 0.7)],
            )
        })
        .collect();
    let mut px = Vec::with_capacity(h * w * 3);
    for r in 0..h {
        for c in 0..w {
            let mut color = bg;
            for (cy, cx, rad, col) in &blobs {
                if (r as f64 - cy).powi(2) + (c as f64 - cx).powi(2) <= rad * rad {
                    color = *col;
                }
            }
            // mild texture so neighbouring background pixels are not identical
            px.extend(color.iter().map(|v| (v + rng.uniform(-0.02, 0.02)).clamp(0.0, 1.0) as f32));
        }
    }
    RasterImage::new(h, w, Colorspace::Rgb, px).unwrap()
}

/// Small network on `size x size` inputs for fast end-to-end checks.
pub fn small_net(size: usize, depth: usize, num_classes: usize) -> NetworkConfig {
    NetworkConfig {
        input_height: size,
        input_width: size,
        input_depth: depth,
        kernel: 5,
        conv_maps: [4, 6, 6, 8],
        fc_sizes: [12, 10],
        num_classes,
        lrn: false,
    }
}

/// Write the synthetic training split as one shard under `dir`.
pub fn synthetic_shard(dir: &Path, spec: &SyntheticSpec, split: Split) -> ShardSet {
    let recs = synthetic_records(spec, split).unwrap();
    write_records(dir, &recs, split)
}

pub fn write_records(dir: &Path, recs: &[ExampleRecord], split: Split) -> ShardSet {
    let path: PathBuf = dir.join(format!("{}-00000-of-00001.rec", split.tag()));
    write_shard(&path, recs).unwrap();
    ShardSet::from_paths(split, vec![path]).unwrap()
}

/// Scalar Adam written out longhand.
pub struct ScalarAdam {
    pub m: f64,
    pub v: f64,
    pub t: i32,
}

impl ScalarAdam {
    pub fn step(&mut self, p: f64, g: f64, lr: f64) -> f64 {
        self.t += 1;
        self.m = 0.9 * self.m + 0.1 * g;
        self.v = 0.999 * self.v + 0.001 * g * g;
        let mh = self.m / (1.0 - 0.9f64.powi(self.t));
        let vh = self.v / (1.0 - 0.999f64.powi(self.t));
        p - lr * mh / (vh.sqrt() + 1e-8)
    }
}
