pub mod adam;
pub mod checkpoint;
pub mod lr;
pub mod trainer;

pub use adam::{adam_step, AdamState};
pub use checkpoint::{Checkpoint, StreamState, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use lr::{update_learning_rate, LR_FINAL, LR_INITIAL};
pub use trainer::{batch_accuracy, train_step, Progress, TrainConfig, Trainer, CHECKPOINT_FILE, METRICS_FILE};
