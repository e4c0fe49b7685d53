mod common;

use common::*;
use fruitnet::imaging::{flood_fill_background, remove_background, FloodFillParams};
use fruitnet::network::conv::conv2d_forward;
use fruitnet::network::{init_params, NetworkConfig, Parameters, Tensor, INIT_STD};
use fruitnet::rng::RngStream;
use fruitnet::training::{adam_step, batch_accuracy, AdamState};

#[test]
fn conv_matches_direct_loops() {
    let mut rng = RngStream::new(21, 0);
    for _ in 0..30 {
        let n = 1 + rng.below(2);
        let (h, w) = (1 + rng.below(9), 1 + rng.below(9));
        let (ci, co) = (1 + rng.below(4), 1 + rng.below(4));
        let k = 1 + rng.below(5);
        let x = random_tensor(&[n, h, w, ci], &mut rng, -1.0, 1.0);
        let wt = random_tensor(&[k, k, ci, co], &mut rng, -1.0, 1.0);
        let b = random_tensor(&[co], &mut rng, -1.0, 1.0);
        let fast = conv2d_forward(&x, &wt, &b).unwrap().0;
        let slow = naive_conv(&x, &wt, &b);
        let err = fast.data().iter().zip(slow.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "k {k} {h}x{w}x{ci}->{co}: {err:e}");
    }
}

#[test]
fn single_precision_conv_tracks_double() {
    let mut rng = RngStream::new(22, 0);
    let x = random_tensor(&[2, 13, 13, 16], &mut rng, 0.0, 1.0);
    let w = random_tensor(&[5, 5, 16, 8], &mut rng, -0.1, 0.1);
    let b = random_tensor(&[8], &mut rng, -0.1, 0.1);
    let y32 = conv2d_forward(&x.cast::<f32>(), &w.cast(), &b.cast()).unwrap().0;
    let y64 = naive_conv(&x, &w, &b);
    for (a, b) in y32.data().iter().zip(y64.data()) {
        assert!((f64::from(*a) - b).abs() < 1e-4);
    }
}

#[test]
fn flood_fill_matches_independent_traversals_on_random_images() {
    let mut rng = RngStream::new(23, 0);
    for i in 0..200 {
        // coarse quantization makes exact-threshold distances and long
        // same-colour chains common
        let img = random_image(&mut rng, 16, 16, if i % 2 == 0 { 4 } else { 255 });
        for t in [0.2, 0.5, 0.75] {
            let mask = flood_fill_background(&img, FloodFillParams::new(t).unwrap()).unwrap();
            assert_eq!(mask.marked(), sweep_fill_oracle(&img, t).as_slice(), "image {i} t {t}");
            assert_eq!(mask.marked(), bfs_fill_oracle(&img, t).as_slice(), "image {i} t {t}");
        }
    }
}

#[test]
fn blob_exteriors_are_whitened_and_blobs_kept() {
    let mut rng = RngStream::new(24, 0);
    for i in 0..20 {
        let img = blob_image(&mut rng, 24, 20);
        let oracle = sweep_fill_oracle(&img, 0.1);
        let mask = flood_fill_background(&img, FloodFillParams::new(0.1).unwrap()).unwrap();
        assert_eq!(mask.marked(), oracle.as_slice(), "blob image {i}");
        let out = remove_background(&img, &mask).unwrap();
        for (p, (&m, (a, b))) in oracle
            .iter()
            .zip(out.pixels().chunks_exact(3).zip(img.pixels().chunks_exact(3)))
            .enumerate()
        {
            if m {
                assert_eq!(a, &[1.0, 1.0, 1.0], "pixel {p}");
            } else {
                assert_eq!(a, b, "pixel {p}");
            }
        }
    }
}

fn tiny() -> NetworkConfig {
    NetworkConfig {
        input_height: 4,
        input_width: 4,
        input_depth: 1,
        kernel: 3,
        conv_maps: [1, 2, 1, 1],
        fc_sizes: [3, 2],
        num_classes: 2,
        lrn: false,
    }
}

#[test]
fn adam_matches_scalar_longhand() {
    let cfg = tiny();
    let mut rng = RngStream::new(25, 0);
    let mut params: Parameters<f64> = init_params(&cfg, &mut RngStream::new(25, 1)).unwrap();
    let start: Vec<f64> = params.tensors().iter().flat_map(|t| t.data().to_vec()).collect();
    let mut state = AdamState::new(&params);
    let mut oracle: Vec<(f64, ScalarAdam)> = start.iter().map(|p| (*p, ScalarAdam { m: 0.0, v: 0.0, t: 0 })).collect();
    for step in 0..100 {
        let lr = 1e-3 * (1.0 + step as f64 / 50.0);
        let mut grads = Parameters::<f64>::zeros(&cfg);
        for t in grads.tensors_mut() {
            for g in t.data_mut() {
                *g = rng.uniform(-2.0, 2.0);
            }
        }
        let flat: Vec<f64> = grads.tensors().iter().flat_map(|t| t.data().to_vec()).collect();
        adam_step(&mut params, &grads, &mut state, lr).unwrap();
        for ((p, a), g) in oracle.iter_mut().zip(&flat) {
            *p = a.step(*p, *g, lr);
        }
    }
    let got: Vec<f64> = params.tensors().iter().flat_map(|t| t.data().to_vec()).collect();
    for (a, (b, _)) in got.iter().zip(&oracle) {
        assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
    }
    assert!(state.second_moments().iter().flat_map(|t| t.data()).all(|v| *v >= 0.0));
}

#[test]
fn batch_accuracy_matches_loop() {
    let mut rng = RngStream::new(26, 0);
    for _ in 0..50 {
        let (b, k) = (1 + rng.below(70), 2 + rng.below(5));
        // few distinct values so ties are frequent
        let logits = Tensor::<f32>::from_fn(&[b, k], |_| rng.below(3) as f32);
        let labels: Vec<u32> = (0..b).map(|_| rng.below(k) as u32).collect();
        let mut hits = 0;
        for (row, &l) in logits.data().chunks(k).zip(&labels) {
            let mut best = 0;
            for j in 1..k {
                if row[j] > row[best] {
                    best = j;
                }
            }
            hits += usize::from(best == l as usize);
        }
        assert_eq!(batch_accuracy(&logits, &labels), hits as f64 / b as f64);
    }
}

#[test]
fn truncated_normal_init_spread() {
    let mut rng = RngStream::new(27, 0);
    let draws: Vec<f64> = (0..100_000).map(|_| rng.truncated_normal(INIT_STD)).collect();
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let std = (draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / draws.len() as f64).sqrt();
    assert!((0.04..=0.05).contains(&std), "std {std}");
    assert!(draws.iter().all(|d| d.abs() <= 2.0 * INIT_STD));
}
