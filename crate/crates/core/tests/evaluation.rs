mod common;

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use common::*;
use fruitnet::augmentation::{preprocess, Mode, Scenario};
use fruitnet::evaluation::{evaluate, evaluate_records, predict_image, EvalReport};
use fruitnet::imaging::resize_bilinear;
use fruitnet::network::{predict_logits, Tensor};
use fruitnet::records::{read_examples, ExampleRecord, Split};
use fruitnet::rng::RngStream;
use fruitnet::synthetic::{synthetic_records, SyntheticSpec};
use fruitnet::training::{Checkpoint, TrainConfig, Trainer};
use fruitnet::Error;

const SIZE: usize = 32;

fn spec() -> SyntheticSpec {
    SyntheticSpec {
        classes: 5,
        train_per_class: 6,
        test_per_class: 10,
        height: SIZE,
        width: SIZE,
        seed: 17,
        raw_background: false,
    }
}

/// A briefly trained model, good enough that its predictions are spread
/// over several classes but far from perfect.
fn model(dir: &std::path::Path) -> Checkpoint {
    let shards = synthetic_shard(dir, &spec(), Split::Train);
    let mut cfg = TrainConfig::new(Scenario::HsvGray, small_net(SIZE, 4, 6));
    cfg.iterations = 25;
    cfg.batch_size = 10;
    cfg.display_interval = 25;
    cfg.shuffle_capacity = 30;
    let mut t = Trainer::new(cfg, spec().labels().unwrap(), &shards).unwrap();
    t.run(&dir.join("run"), |_| ControlFlow::Continue(())).unwrap()
}

/// One image at a time, argmax written out longhand.
fn brute_force(ckpt: &Checkpoint, recs: &[ExampleRecord], scenario: Scenario) -> (u64, BTreeMap<String, u64>) {
    let mut mislabeled: BTreeMap<String, u64> = ckpt.labels.classes().iter().map(|c| (c.clone(), 0)).collect();
    let mut correct = 0;
    for r in recs {
        let img = preprocess(&r.to_image().unwrap(), scenario, Mode::Test, &mut RngStream::new(0, 0)).unwrap();
        let x = Tensor::from_vec(vec![1, img.height(), img.width(), img.channels()], img.into_pixels()).unwrap();
        let logits = predict_logits(&ckpt.net, &ckpt.params, &x).unwrap();
        let row = logits.data();
        let mut best = 0;
        for j in 1..row.len() {
            if row[j] > row[best] {
                best = j;
            }
        }
        if best == r.label as usize {
            correct += 1;
        } else {
            *mislabeled.get_mut(ckpt.labels.name(r.label).unwrap()).unwrap() += 1;
        }
    }
    (correct, mislabeled)
}

fn check_invariants(rep: &EvalReport) {
    assert!(rep.correct <= rep.total);
    assert_eq!(rep.accuracy, rep.correct as f64 / rep.total as f64);
    assert_eq!(rep.mislabeled.values().sum::<u64>(), rep.total - rep.correct);
}

#[test]
fn report_matches_per_example_loop() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = model(dir.path());
    let test = synthetic_shard(&dir.path().join("."), &spec(), Split::Test);
    let recs: Vec<ExampleRecord> = read_examples(&test, SIZE, SIZE).collect::<Result<_, _>>().unwrap();
    assert_eq!(recs.len(), 50);

    let mut batches = Vec::new();
    let rep = evaluate(&ckpt, &test, Scenario::HsvGray, 16, |p| batches.push(p.processed)).unwrap();
    assert_eq!(batches, vec![16, 32, 48, 50]);
    check_invariants(&rep);
    let (correct, mislabeled) = brute_force(&ckpt, &recs, Scenario::HsvGray);
    assert_eq!(rep.total, 50);
    assert_eq!(rep.correct, correct);
    assert_eq!(rep.mislabeled, mislabeled);
    // the fixture is only useful if the model is neither trivial nor perfect
    assert!(rep.correct > 0 && rep.correct < 50, "{rep}");
}

#[test]
fn totals_ignore_record_order_and_batch_size() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = model(dir.path());
    let mut recs = synthetic_records(&spec(), Split::Test).unwrap();
    let base = evaluate_records(&ckpt, recs.clone().into_iter().map(Ok), Scenario::HsvGray, 60, |_| {}).unwrap();
    let mut rng = RngStream::new(3, 0);
    for batch in [1, 7, 50] {
        for i in (1..recs.len()).rev() {
            recs.swap(i, rng.below(i + 1));
        }
        let rep = evaluate_records(&ckpt, recs.clone().into_iter().map(Ok), Scenario::HsvGray, batch, |_| {}).unwrap();
        assert_eq!(rep, base);
    }
}

#[test]
fn prediction_agrees_with_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = model(dir.path());
    for r in synthetic_records(&spec(), Split::Test).unwrap().iter().step_by(3) {
        let img = r.to_image().unwrap();
        let p = predict_image(&ckpt, &img, Scenario::HsvGray).unwrap();
        let rep = evaluate_records(&ckpt, std::iter::once(Ok(r.clone())), Scenario::HsvGray, 1, |_| {}).unwrap();
        assert_eq!(rep.correct == 1, p.class_id == r.label);
        assert!((p.probabilities.iter().sum::<f64>() - 1.0).abs() <= 1e-6);
        let max = p.probabilities.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(p.probability, max);
        assert!(p.probability > 0.0 && p.probability < 1.0);
        assert_eq!(Some(p.class_name.as_str()), ckpt.labels.name(p.class_id));

        let same = resize_bilinear(&img, SIZE, SIZE).unwrap();
        assert_eq!(predict_image(&ckpt, &same, Scenario::HsvGray).unwrap(), p);
    }
}

#[test]
fn any_input_size_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = model(dir.path());
    let big = fruitnet::synthetic::synthetic_image(
        &SyntheticSpec {
            height: 77,
            width: 120,
            ..spec()
        },
        2,
        &mut RngStream::new(1, 4),
    );
    let p = predict_image(&ckpt, &big, Scenario::HsvGray).unwrap();
    assert!((p.class_id as usize) < ckpt.net.num_classes);
    let one = fruitnet::imaging::RasterImage::filled(1, 1, fruitnet::imaging::Colorspace::Rgb, &[0.3, 0.6, 0.1]).unwrap();
    assert!(predict_image(&ckpt, &one, Scenario::HsvGray).is_ok());
}

#[test]
fn scenario_depth_mismatch_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = model(dir.path());
    let test = synthetic_shard(&dir.path().join("."), &spec(), Split::Test);
    let mut called = false;
    let err = evaluate(&ckpt, &test, Scenario::Hsv, 10, |_| called = true).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
    assert!(!called);
}
