//! Analytic-vs-central-difference checks on random small shapes. Each case
//! returns the largest relative error it saw.

use fruitnet::network::activation::{relu, relu_backward};
use fruitnet::network::conv::{conv2d_backward, conv2d_forward};
use fruitnet::network::dense::{fc_backward, fc_forward};
use fruitnet::network::lrn::{local_response_norm, local_response_norm_backward, LrnParams};
use fruitnet::network::pool::{maxpool_backward, maxpool_forward};
use fruitnet::network::{backward, cross_entropy_loss, forward, init_params, NetworkConfig, Parameters, Tensor};
use fruitnet::rng::RngStream;

use super::{dot, max_rel_err, numeric_grad, random_tensor, FD_EPS};

fn size(rng: &mut RngStream, lo: usize, hi: usize) -> usize {
    lo + rng.below(hi - lo + 1)
}

pub fn conv_case(rng: &mut RngStream) -> f64 {
    let n = size(rng, 1, 2);
    let (h, w) = (size(rng, 3, 6), size(rng, 3, 6));
    let (ci, co) = (size(rng, 1, 3), size(rng, 1, 3));
    let k = [1, 2, 3, 4, 5][rng.below(5)];
    let x = random_tensor(&[n, h, w, ci], rng, -1.0, 1.0);
    let wt = random_tensor(&[k, k, ci, co], rng, -1.0, 1.0);
    let b = random_tensor(&[co], rng, -1.0, 1.0);
    let r = random_tensor(&[n, h, w, co], rng, -1.0, 1.0);

    let (_, cache) = conv2d_forward(&x, &wt, &b).unwrap();
    let (gx, gw, gb) = conv2d_backward(&r, &cache).unwrap();
    let loss = |x: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>| dot(&conv2d_forward(x, w, b).unwrap().0, &r);
    [
        max_rel_err(gx.data(), &numeric_grad(&x, |x| loss(x, &wt, &b))),
        max_rel_err(gw.data(), &numeric_grad(&wt, |w| loss(&x, w, &b))),
        max_rel_err(gb.data(), &numeric_grad(&b, |b| loss(&x, &wt, b))),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

pub fn fc_case(rng: &mut RngStream) -> f64 {
    let (b, n, m) = (size(rng, 1, 4), size(rng, 1, 8), size(rng, 1, 6));
    let x = random_tensor(&[b, n], rng, -1.0, 1.0);
    let w = random_tensor(&[n, m], rng, -1.0, 1.0);
    let bias = random_tensor(&[m], rng, -1.0, 1.0);
    let r = random_tensor(&[b, m], rng, -1.0, 1.0);
    let (_, cache) = fc_forward(&x, &w, &bias).unwrap();
    let (gx, gw, gb) = fc_backward(&r, &cache).unwrap();
    let loss = |x: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>| dot(&fc_forward(x, w, b).unwrap().0, &r);
    [
        max_rel_err(gx.data(), &numeric_grad(&x, |x| loss(x, &w, &bias))),
        max_rel_err(gw.data(), &numeric_grad(&w, |w| loss(&x, w, &bias))),
        max_rel_err(gb.data(), &numeric_grad(&bias, |b| loss(&x, &w, b))),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// Inputs kept at least 0.1 away from the kink.
pub fn relu_case(rng: &mut RngStream) -> f64 {
    let shape = [size(rng, 1, 3), size(rng, 1, 5), size(rng, 1, 5), size(rng, 1, 3)];
    let x = Tensor::from_fn(&shape, |_| {
        let v = rng.uniform(0.1, 1.0);
        if rng.bernoulli(0.5) {
            v
        } else {
            -v
        }
    });
    let r = random_tensor(&shape, rng, -1.0, 1.0);
    let (_, cache) = relu(&x);
    let gx = relu_backward(&r, &cache).unwrap();
    max_rel_err(gx.data(), &numeric_grad(&x, |x| dot(&relu(x).0, &r)))
}

/// Inputs are a shuffled ladder with steps far larger than the probe, so
/// every window has a unique maximum that the probe cannot displace.
pub fn pool_case(rng: &mut RngStream) -> f64 {
    let shape = [size(rng, 1, 2), size(rng, 1, 7), size(rng, 1, 7), size(rng, 1, 3)];
    let len: usize = shape.iter().product();
    let mut ladder: Vec<f64> = (0..len).map(|i| i as f64 * 0.01).collect();
    for i in (1..len).rev() {
        ladder.swap(i, rng.below(i + 1));
    }
    let x = Tensor::from_vec(shape.to_vec(), ladder).unwrap();
    let (y, cache) = maxpool_forward(&x).unwrap();
    let r = random_tensor(y.shape(), rng, -1.0, 1.0);
    let gx = maxpool_backward(&r, &cache).unwrap();
    max_rel_err(gx.data(), &numeric_grad(&x, |x| dot(&maxpool_forward(x).unwrap().0, &r)))
}

pub fn softmax_ce_case(rng: &mut RngStream) -> f64 {
    let (b, k) = (size(rng, 1, 5), size(rng, 2, 7));
    let logits = random_tensor(&[b, k], rng, -3.0, 3.0);
    let labels: Vec<u32> = (0..b).map(|_| rng.below(k) as u32).collect();
    let (_, grad) = cross_entropy_loss(&logits, &labels).unwrap();
    max_rel_err(grad.data(), &numeric_grad(&logits, |l| cross_entropy_loss(l, &labels).unwrap().0))
}

pub fn lrn_case(rng: &mut RngStream) -> f64 {
    let shape = [size(rng, 1, 2), size(rng, 1, 3), size(rng, 1, 3), size(rng, 1, 12)];
    // large enough activations for the normalizer to matter
    let params = LrnParams {
        alpha: 0.1,
        ..LrnParams::default()
    };
    let x = random_tensor(&shape, rng, -3.0, 3.0);
    let r = random_tensor(&shape, rng, -1.0, 1.0);
    let (_, cache) = local_response_norm(&x, params).unwrap();
    let gx = local_response_norm_backward(&r, &cache).unwrap();
    max_rel_err(gx.data(), &numeric_grad(&x, |x| dot(&local_response_norm(x, params).unwrap().0, &r)))
}

/// Whole-network loss gradient on a shrunken 12x12 variant, every parameter
/// tensor, dropout active with a fixed mask. Returns the per-tensor maxima.
pub fn end_to_end(seed: u64, lrn: bool) -> Vec<(&'static str, f64)> {
    let net = NetworkConfig {
        input_height: 12,
        input_width: 12,
        input_depth: 4,
        kernel: 5,
        conv_maps: [3, 4, 4, 5],
        fc_sizes: [8, 6],
        num_classes: 3,
        lrn,
    };
    let mut rng = RngStream::new(seed, 100);
    let mut params: Parameters<f64> = init_params(&net, &mut RngStream::new(seed, 0)).unwrap();
    // wider weights than the training init so the signal is well above
    // round-off in every layer
    for t in params.tensors_mut() {
        for v in t.data_mut() {
            *v = *v * 8.0 + rng.uniform(-0.05, 0.05);
        }
    }
    let x = random_tensor(&[2, 12, 12, 4], &mut rng, 0.0, 1.0);
    let labels: Vec<u32> = (0..2).map(|_| rng.below(3) as u32).collect();
    let mask_rng = RngStream::new(seed, 3);

    let loss_of = |p: &Parameters<f64>| {
        let (logits, _) = forward(&net, p, &x, 0.8, &mut mask_rng.clone()).unwrap();
        cross_entropy_loss(&logits, &labels).unwrap().0
    };
    let (logits, cache) = forward(&net, &params, &x, 0.8, &mut mask_rng.clone()).unwrap();
    let (_, g) = cross_entropy_loss(&logits, &labels).unwrap();
    let grads = backward(&net, &params, &cache, &g).unwrap();

    let mut out = Vec::new();
    for (t, (name, analytic)) in grads.named().enumerate() {
        let mut numeric = Vec::with_capacity(analytic.len());
        for i in 0..analytic.len() {
            let orig = params.tensors()[t].data()[i];
            params.tensors_mut()[t].data_mut()[i] = orig + FD_EPS;
            let up = loss_of(&params);
            params.tensors_mut()[t].data_mut()[i] = orig - FD_EPS;
            let down = loss_of(&params);
            params.tensors_mut()[t].data_mut()[i] = orig;
            numeric.push((up - down) / (2.0 * FD_EPS));
        }
        out.push((name, max_rel_err(analytic.data(), &numeric)));
    }
    out
}
