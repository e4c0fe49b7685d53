//! On-disk dataset shards, the label catalog and batch feeding.

mod batch;
mod build;
mod format;
mod labels;

pub use batch::{
    read_example_files, read_examples, sequential_batches, shuffle_batches, Batch, ShuffleBatches, ShuffleBuffer,
    ShuffleParams, DEFAULT_CAPACITY, DEFAULT_MIN_FILL,
};
pub use build::{
    build_shards, shard_name, BuildOptions, ShardSet, Split, REFERENCE_TEST_IMAGES, REFERENCE_TRAIN_IMAGES,
};
pub use format::{
    write_shard, ExampleRecord, IndexedShards, RecordLocation, ShardReader, ShardWriter, SHARD_MAGIC, SHARD_VERSION,
};
pub use labels::{LabelMap, BACKGROUND_LABEL};
