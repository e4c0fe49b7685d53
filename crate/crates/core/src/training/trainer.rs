use std::convert::Infallible;
use std::fs;
use std::io::Write;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use super::adam::{adam_step, AdamState};
use super::checkpoint::{Checkpoint, StreamState};
use super::lr::{update_learning_rate, LR_FINAL, LR_INITIAL};
use crate::augmentation::{preprocess_batch, Mode, Scenario};
use crate::error::{Error, Result};
use crate::network::{argmax_rows, backward, cross_entropy_loss, forward, init_params, predict_logits};
use crate::network::{NetworkConfig, Parameters, Scalar, Tensor};
use crate::records::{Batch, IndexedShards, LabelMap, ShardSet, ShuffleBuffer, DEFAULT_CAPACITY};
use crate::rng::{streams, RngStream};

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const METRICS_FILE: &str = "metrics.csv";
pub const METRICS_HEADER: &str = "iteration,loss,batch_accuracy,learning_rate";

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub iterations: u64,
    pub batch_size: usize,
    pub keep_prob: f64,
    pub lr_initial: f64,
    pub lr_final: f64,
    pub display_interval: u64,
    pub seed: u64,
    pub scenario: Scenario,
    pub net: NetworkConfig,
    pub shuffle_capacity: usize,
}

impl TrainConfig {
    pub fn new(scenario: Scenario, net: NetworkConfig) -> Self {
        Self {
            iterations: 75_000,
            batch_size: 60,
            keep_prob: 0.8,
            lr_initial: LR_INITIAL,
            lr_final: LR_FINAL,
            display_interval: 50,
            seed: 0,
            scenario,
            net,
            shuffle_capacity: DEFAULT_CAPACITY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.net.validate()?;
        if !(self.lr_final > 0.0 && self.lr_final <= self.lr_initial && self.lr_initial.is_finite()) {
            return Err(Error::Config(format!(
                "need 0 < lr_final <= lr_initial, got {} and {}",
                self.lr_final, self.lr_initial
            )));
        }
        if self.batch_size == 0 || self.display_interval == 0 || self.shuffle_capacity == 0 {
            return Err(Error::Config("batch size, display interval and shuffle capacity must be at least 1".into()));
        }
        if !(self.keep_prob > 0.0 && self.keep_prob <= 1.0) {
            return Err(Error::Config(format!("keep_prob {} must lie in (0, 1]", self.keep_prob)));
        }
        if self.scenario.input_channels() != self.net.input_depth {
            return Err(Error::Config(format!(
                "scenario {} yields {} channels but the network expects {}",
                self.scenario,
                self.scenario.input_channels(),
                self.net.input_depth
            )));
        }
        Ok(())
    }
}

/// Emitted at every display interval, after the checkpoint is written.
#[derive(Debug, Clone, PartialEq)]
pub struct Progress {
    pub iteration: u64,
    /// Loss and accuracy on the current batch with dropout disabled.
    pub loss: f64,
    pub batch_accuracy: f64,
    pub learning_rate: f64,
}

impl std::fmt::Display for Progress {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "iteration {}: loss {:.6}, batch accuracy {:.4}, learning rate {:.3e}",
            self.iteration, self.loss, self.batch_accuracy, self.learning_rate
        )
    }
}

/// Fraction of rows whose argmax equals the label.
pub fn batch_accuracy<T: Scalar>(logits: &Tensor<T>, labels: &[u32]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let hits = argmax_rows(logits).iter().zip(labels).filter(|(p, l)| **p == **l as usize).count();
    hits as f64 / labels.len() as f64
}

/// One forward/backward/Adam update on a preprocessed batch. Returns the
/// training loss (with dropout as configured).
#[allow(clippy::too_many_arguments)]
pub fn train_step<T: Scalar>(
    net: &NetworkConfig,
    params: &mut Parameters<T>,
    adam: &mut AdamState<T>,
    x: &Tensor<T>,
    labels: &[u32],
    keep_prob: f64,
    lr: f64,
    dropout_rng: &mut RngStream,
    iteration: u64,
) -> Result<T> {
    let (logits, cache) = forward(net, params, x, keep_prob, dropout_rng)?;
    let (loss, grad) = cross_entropy_loss(&logits, labels)?;
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss { iteration });
    }
    let grads = backward(net, params, &cache, &grad)?;
    adam_step(params, &grads, adam, lr)?;
    Ok(loss)
}

pub struct Trainer {
    cfg: TrainConfig,
    labels: LabelMap,
    data: IndexedShards,
    params: Parameters<f32>,
    adam: AdamState<f32>,
    iteration: u64,
    learning_rate: f64,
    buffer: ShuffleBuffer<u64>,
    next_seq: u64,
    augment_rng: RngStream,
    dropout_rng: RngStream,
}

impl Trainer {
    pub fn new(cfg: TrainConfig, labels: LabelMap, shards: &ShardSet) -> Result<Self> {
        cfg.validate()?;
        let data = Self::open(&cfg, &labels, shards)?;
        let params = init_params(&cfg.net, &mut RngStream::new(cfg.seed, streams::INIT))?;
        let adam = AdamState::new(&params);
        let buffer = ShuffleBuffer::restore(cfg.shuffle_capacity, Vec::new(), RngStream::new(cfg.seed, streams::SHUFFLE))?;
        Ok(Self {
            labels,
            data,
            params,
            adam,
            iteration: 0,
            learning_rate: cfg.lr_initial,
            buffer,
            next_seq: 0,
            augment_rng: RngStream::new(cfg.seed, streams::AUGMENT),
            dropout_rng: RngStream::new(cfg.seed, streams::DROPOUT),
            cfg,
        })
    }

    /// Continue a run. `cfg` must describe the same network and scenario as
    /// the checkpoint; its `iterations` is the new total.
    pub fn from_checkpoint(cfg: TrainConfig, ckpt: Checkpoint, shards: &ShardSet) -> Result<Self> {
        cfg.validate()?;
        if cfg.net != ckpt.net || cfg.scenario != ckpt.scenario {
            return Err(Error::Config(format!(
                "checkpoint was trained as {} with {:?}, resume asked for {} with {:?}",
                ckpt.scenario, ckpt.net, cfg.scenario, cfg.net
            )));
        }
        let stream = ckpt
            .stream
            .ok_or_else(|| Error::Config("checkpoint carries no input stream position".into()))?;
        let data = Self::open(&cfg, &ckpt.labels, shards)?;
        let buffer = ShuffleBuffer::restore(
            stream.capacity as usize,
            stream.buffer,
            RngStream::from_state(stream.shuffle),
        )?;
        Ok(Self {
            labels: ckpt.labels,
            data,
            params: ckpt.params,
            adam: ckpt.adam,
            iteration: ckpt.iteration,
            learning_rate: ckpt.learning_rate,
            buffer,
            next_seq: stream.next_seq,
            augment_rng: RngStream::from_state(stream.augment),
            dropout_rng: RngStream::from_state(stream.dropout),
            cfg,
        })
    }

    fn open(cfg: &TrainConfig, labels: &LabelMap, shards: &ShardSet) -> Result<IndexedShards> {
        if cfg.net.num_classes < labels.num_classes() {
            return Err(Error::Config(format!(
                "network has {} outputs but the label map needs {}",
                cfg.net.num_classes,
                labels.num_classes()
            )));
        }
        let data = IndexedShards::open(&shards.paths)?;
        if data.is_empty() {
            return Err(Error::Config("training shards hold no records".into()));
        }
        Ok(data)
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn params(&self) -> &Parameters<f32> {
        &self.params
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            net: self.cfg.net.clone(),
            labels: self.labels.clone(),
            scenario: self.cfg.scenario,
            params: self.params.clone(),
            adam: self.adam.clone(),
            iteration: self.iteration,
            learning_rate: self.learning_rate,
            stream: Some(StreamState {
                capacity: self.cfg.shuffle_capacity as u64,
                next_seq: self.next_seq,
                shuffle: self.buffer.rng().state(),
                augment: self.augment_rng.state(),
                dropout: self.dropout_rng.state(),
                buffer: self.buffer.items().to_vec(),
            }),
        }
    }

    /// Draw the next shuffled batch. Record `seq` of the endless source is
    /// dataset entry `seq % len`.
    fn next_batch(&mut self) -> Result<Batch> {
        let n = self.data.len() as u64;
        let mut records = Vec::with_capacity(self.cfg.batch_size);
        for _ in 0..self.cfg.batch_size {
            let next_seq = &mut self.next_seq;
            let mut source = std::iter::from_fn(|| {
                let s = *next_seq;
                *next_seq += 1;
                Some(Ok::<u64, Infallible>(s))
            });
            let seq = match self.buffer.next_from(&mut source) {
                Ok(Some(seq)) => seq,
                Ok(None) => unreachable!("the source never ends"),
                Err(never) => match never {},
            };
            let rec = self.data.get((seq % n) as usize)?;
            let want = (self.cfg.net.input_height, self.cfg.net.input_width, 3);
            if (rec.height as usize, rec.width as usize, rec.channels as usize) != want {
                return Err(Error::Config(format!(
                    "record is {}x{}x{}, the network needs {}x{}x3",
                    rec.height, rec.width, rec.channels, want.0, want.1
                )));
            }
            records.push(rec);
        }
        Batch::from_records(&records)
    }

    /// Train until `cfg.iterations`, writing `model.ckpt` and `metrics.csv`
    /// into `out_dir`. `on_progress` can stop the run early; the checkpoint
    /// for that interval is already on disk.
    pub fn run(&mut self, out_dir: &Path, mut on_progress: impl FnMut(&Progress) -> ControlFlow<()>) -> Result<Checkpoint> {
        fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        let ckpt_path = out_dir.join(CHECKPOINT_FILE);
        let mut metrics = MetricsLog::open(&out_dir.join(METRICS_FILE), self.iteration)?;

        while self.iteration < self.cfg.iterations {
            let it = self.iteration + 1;
            let batch = self.next_batch()?;
            let x = preprocess_batch(&batch, self.cfg.scenario, Mode::Train, &mut self.augment_rng)?;
            train_step(
                &self.cfg.net,
                &mut self.params,
                &mut self.adam,
                &x,
                &batch.labels,
                self.cfg.keep_prob,
                self.learning_rate,
                &mut self.dropout_rng,
                it,
            )?;
            self.iteration = it;

            if it % self.cfg.display_interval == 0 {
                let logits = predict_logits(&self.cfg.net, &self.params, &x)?;
                let (loss, _) = cross_entropy_loss(&logits, &batch.labels)?;
                let acc = batch_accuracy(&logits, &batch.labels);
                self.learning_rate = update_learning_rate(acc, self.cfg.lr_initial, self.cfg.lr_final);
                let progress = Progress {
                    iteration: it,
                    loss: f64::from(loss),
                    batch_accuracy: acc,
                    learning_rate: self.learning_rate,
                };
                metrics.append(&progress)?;
                self.checkpoint().save(&ckpt_path)?;
                if on_progress(&progress).is_break() {
                    return Ok(self.checkpoint());
                }
            }
        }
        let ckpt = self.checkpoint();
        ckpt.save(&ckpt_path)?;
        Ok(ckpt)
    }
}

struct MetricsLog {
    path: PathBuf,
    file: fs::File,
}

impl MetricsLog {
    /// Start a fresh log, or keep the rows up to `iteration` of an existing
    /// one when resuming.
    fn open(path: &Path, iteration: u64) -> Result<Self> {
        let mut text = format!("{METRICS_HEADER}\n");
        if iteration > 0 {
            if let Ok(old) = fs::read_to_string(path) {
                for line in old.lines().skip(1) {
                    let row_it = line.split(',').next().and_then(|s| s.parse::<u64>().ok());
                    if row_it.is_some_and(|r| r <= iteration) {
                        text.push_str(line);
                        text.push('\n');
                    }
                }
            }
        }
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            file,
        })
    }

    fn append(&mut self, p: &Progress) -> Result<()> {
        writeln!(self.file, "{},{},{},{}", p.iteration, p.loss, p.batch_accuracy, p.learning_rate)
            .map_err(|e| Error::io(&self.path, e))
    }
}
