use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::augmentation::{preprocess, preprocess_batch, Mode, Scenario};
use crate::error::{Error, Result};
use crate::imaging::{resize_bilinear, Colorspace, RasterImage};
use crate::network::{argmax_rows, predict_logits, softmax, Tensor};
use crate::records::{read_examples, sequential_batches, ExampleRecord, ShardSet};
use crate::rng::RngStream;
use crate::training::Checkpoint;

/// Test-set accuracy of the reference runs, by scenario, in percent.
pub const REFERENCE_TEST_ACCURACY: [(Scenario, f64); 5] = [
    (Scenario::Gray, 94.24),
    (Scenario::Rgb, 93.47),
    (Scenario::Hsv, 97.01),
    (Scenario::HsvGray, 95.71),
    (Scenario::HsvGrayAug, 97.04),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub total: u64,
    pub correct: u64,
    pub accuracy: f64,
    /// Misclassified images per true class. Every class of the label map is
    /// listed, starting at zero.
    pub mislabeled: BTreeMap<String, u64>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Final accuracy: {:.4} ({} of {} images)", self.accuracy, self.correct, self.total)?;
        for (name, n) in self.mislabeled.iter().filter(|(_, n)| **n > 0) {
            writeln!(f, "  {name}: {n} labeled incorrectly")?;
        }
        Ok(())
    }
}

/// Emitted after each evaluated batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalProgress {
    pub processed: u64,
    pub correct: u64,
}

fn check_scenario(ckpt: &Checkpoint, scenario: Scenario) -> Result<()> {
    if scenario.input_channels() != ckpt.net.input_depth {
        return Err(Error::Config(format!(
            "scenario {scenario} yields {} channels, the checkpoint's network expects {}",
            scenario.input_channels(),
            ckpt.net.input_depth
        )));
    }
    Ok(())
}

/// Classify every record of `shards` once, in order, without dropout.
pub fn evaluate(
    ckpt: &Checkpoint,
    shards: &ShardSet,
    scenario: Scenario,
    batch_size: usize,
    progress: impl FnMut(&EvalProgress),
) -> Result<EvalReport> {
    check_scenario(ckpt, scenario)?;
    let records = read_examples(shards, ckpt.net.input_height, ckpt.net.input_width);
    evaluate_records(ckpt, records, scenario, batch_size, progress)
}

pub fn evaluate_records(
    ckpt: &Checkpoint,
    records: impl Iterator<Item = Result<ExampleRecord>>,
    scenario: Scenario,
    batch_size: usize,
    mut progress: impl FnMut(&EvalProgress),
) -> Result<EvalReport> {
    check_scenario(ckpt, scenario)?;
    let mut mislabeled: BTreeMap<String, u64> = ckpt.labels.classes().iter().map(|c| (c.clone(), 0)).collect();
    let mut total = 0u64;
    let mut correct = 0u64;
    // test-mode preprocessing draws nothing
    let mut rng = RngStream::new(0, 0);
    for batch in sequential_batches(records, batch_size)? {
        let batch = batch?;
        let x = preprocess_batch(&batch, scenario, Mode::Test, &mut rng)?;
        let logits = predict_logits(&ckpt.net, &ckpt.params, &x)?;
        for (pred, &label) in argmax_rows(&logits).into_iter().zip(&batch.labels) {
            total += 1;
            if pred == label as usize {
                correct += 1;
            } else {
                *mislabeled.entry(class_name(ckpt, label)).or_insert(0) += 1;
            }
        }
        progress(&EvalProgress { processed: total, correct });
    }
    Ok(EvalReport {
        total,
        correct,
        accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
        mislabeled,
    })
}

fn class_name(ckpt: &Checkpoint, id: u32) -> String {
    ckpt.labels.name(id).map_or_else(|| format!("class_{id}"), str::to_string)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class_id: u32,
    pub class_name: String,
    /// Largest softmax entry.
    pub probability: f64,
    pub probabilities: Vec<f64>,
}

impl fmt::Display for Prediction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Label index: {} - Label: {} - Probability: {:.4}",
            self.class_id, self.class_name, self.probability
        )
    }
}

/// Classify one RGB image of any size; it is resized to the network input
/// first.
pub fn predict_image(ckpt: &Checkpoint, image: &RasterImage, scenario: Scenario) -> Result<Prediction> {
    check_scenario(ckpt, scenario)?;
    if image.colorspace() != Colorspace::Rgb {
        return Err(Error::invalid(format!("prediction needs an RGB image, got {:?}", image.colorspace())));
    }
    let resized = resize_bilinear(image, ckpt.net.input_height, ckpt.net.input_width)?;
    let input = preprocess(&resized, scenario, Mode::Test, &mut RngStream::new(0, 0))?;
    let x = Tensor::from_vec(
        vec![1, input.height(), input.width(), input.channels()],
        input.into_pixels(),
    )?;
    let logits = predict_logits(&ckpt.net, &ckpt.params, &x)?;
    let probabilities: Vec<f64> = softmax(&logits.cast::<f64>())?.into_data();
    let class_id = argmax_rows(&logits)[0] as u32;
    Ok(Prediction {
        class_id,
        class_name: class_name(ckpt, class_id),
        probability: probabilities[class_id as usize],
        probabilities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{NetworkConfig, Parameters};
    use crate::records::LabelMap;
    use crate::training::AdamState;

    fn zero_model() -> Checkpoint {
        let net = NetworkConfig {
            input_height: 8,
            input_width: 8,
            input_depth: 4,
            kernel: 3,
            conv_maps: [2, 2, 2, 2],
            fc_sizes: [4, 4],
            num_classes: 4,
            lrn: false,
        };
        let params = Parameters::zeros(&net);
        Checkpoint {
            adam: AdamState::new(&params),
            net,
            labels: LabelMap::new(["a", "b", "c"]).unwrap(),
            scenario: Scenario::HsvGray,
            params,
            iteration: 0,
            learning_rate: 1e-3,
            stream: None,
        }
    }

    fn record(label: u32) -> Result<ExampleRecord> {
        Ok(ExampleRecord {
            label,
            height: 8,
            width: 8,
            channels: 3,
            pixels: vec![200; 192],
        })
    }

    #[test]
    fn zero_weights_predict_class_zero() {
        let ckpt = zero_model();
        let recs = (1..=3).map(record);
        let rep = evaluate_records(&ckpt, recs, Scenario::HsvGray, 2, |_| {}).unwrap();
        assert_eq!((rep.total, rep.correct, rep.accuracy), (3, 0, 0.0));
        assert_eq!(rep.mislabeled.values().sum::<u64>(), 3);
        assert_eq!(rep.mislabeled.len(), 3);
    }

    #[test]
    fn background_record_counts_as_correct_under_zero_weights() {
        let ckpt = zero_model();
        let rep = evaluate_records(&ckpt, [record(0)].into_iter(), Scenario::HsvGray, 60, |_| {}).unwrap();
        assert_eq!(rep.accuracy, 1.0);
        assert!(rep.mislabeled.values().all(|n| *n == 0));
    }

    #[test]
    fn uniform_prediction() {
        let ckpt = zero_model();
        let img = RasterImage::filled(13, 5, Colorspace::Rgb, &[0.2, 0.5, 0.9]).unwrap();
        let p = predict_image(&ckpt, &img, Scenario::HsvGray).unwrap();
        assert_eq!(p.class_id, 0);
        assert!((p.probability - 0.25).abs() < 1e-12);
        assert!((p.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        assert!(p.to_string().starts_with("Label index: 0"));
    }

    #[test]
    fn depth_mismatch_fails_early() {
        let ckpt = zero_model();
        let img = RasterImage::filled(8, 8, Colorspace::Rgb, &[0.2, 0.5, 0.9]).unwrap();
        assert!(matches!(predict_image(&ckpt, &img, Scenario::Rgb), Err(Error::Config(_))));
        let gray = RasterImage::filled(8, 8, Colorspace::Gray, &[0.2]).unwrap();
        assert!(matches!(predict_image(&ckpt, &gray, Scenario::HsvGray), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn json_fields() {
        let ckpt = zero_model();
        let rep = evaluate_records(&ckpt, (1..=2).map(record), Scenario::HsvGray, 4, |_| {}).unwrap();
        let v: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys, vec!["accuracy", "correct", "mislabeled", "total"]);
        assert_eq!(v["mislabeled"]["a"], 1);
    }
}
