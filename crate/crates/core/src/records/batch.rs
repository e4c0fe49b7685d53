use std::path::PathBuf;

use super::build::ShardSet;
use super::format::{ExampleRecord, ShardReader};
use crate::error::{Error, Result};
use crate::imaging::RasterImage;
use crate::network::Tensor;
use crate::rng::RngStream;

/// Default shuffle buffer capacity (35000 plus one batch of 60).
pub const DEFAULT_CAPACITY: usize = 35_060;
pub const DEFAULT_MIN_FILL: usize = 5_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShuffleParams {
    pub capacity: usize,
    pub min_fill: usize,
    pub seed: u64,
}

impl Default for ShuffleParams {
    fn default() -> Self {
        Self {
            capacity: DEFAULT_CAPACITY,
            min_fill: DEFAULT_MIN_FILL,
            seed: 0,
        }
    }
}

impl ShuffleParams {
    pub fn validate(&self) -> Result<()> {
        if self.capacity == 0 {
            return Err(Error::invalid("shuffle capacity must be at least 1"));
        }
        if self.min_fill > self.capacity {
            return Err(Error::invalid(format!(
                "shuffle min_fill {} exceeds capacity {}",
                self.min_fill, self.capacity
            )));
        }
        Ok(())
    }
}

/// Reservoir-style shuffle buffer.
///
/// The buffer is filled to capacity from its source; each emission removes a
/// uniformly chosen slot and refills that slot with the next source element.
/// Once the source runs dry the buffer drains in random order.
#[derive(Debug, Clone)]
pub struct ShuffleBuffer<T> {
    capacity: usize,
    items: Vec<T>,
    rng: RngStream,
}

impl<T> ShuffleBuffer<T> {
    pub fn new(params: &ShuffleParams, rng: RngStream) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            capacity: params.capacity,
            items: Vec::new(),
            rng,
        })
    }

    /// Rebuild a buffer from a snapshot taken with [`ShuffleBuffer::items`]
    /// and [`ShuffleBuffer::rng`].
    pub fn restore(capacity: usize, items: Vec<T>, rng: RngStream) -> Result<Self> {
        if capacity == 0 || items.len() > capacity {
            return Err(Error::invalid("shuffle snapshot does not fit its capacity"));
        }
        Ok(Self { capacity, items, rng })
    }

    pub fn items(&self) -> &[T] {
        &self.items
    }

    pub fn rng(&self) -> &RngStream {
        &self.rng
    }

    pub fn next_from<E>(&mut self, source: &mut impl Iterator<Item = std::result::Result<T, E>>) -> std::result::Result<Option<T>, E> {
        while self.items.len() < self.capacity {
            match source.next() {
                Some(item) => self.items.push(item?),
                None => break,
            }
        }
        if self.items.is_empty() {
            return Ok(None);
        }
        let i = self.rng.below(self.items.len());
        Ok(Some(match source.next() {
            Some(next) => std::mem::replace(&mut self.items[i], next?),
            None => self.items.swap_remove(i),
        }))
    }
}

/// A batch of RGB images as a `[batch, height, width, 3]` tensor in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub images: Tensor<f32>,
    pub labels: Vec<u32>,
}

impl Batch {
    pub fn from_records(records: &[ExampleRecord]) -> Result<Self> {
        let first = records
            .first()
            .ok_or_else(|| Error::invalid("cannot build an empty batch"))?;
        let dims = (first.height, first.width, first.channels);
        let mut data = Vec::with_capacity(records.len() * first.pixels.len());
        for r in records {
            if (r.height, r.width, r.channels) != dims {
                return Err(Error::invalid("records in one batch must share dimensions"));
            }
            data.extend(r.pixels.iter().map(|&b| f32::from(b) / 255.0));
        }
        let shape = vec![records.len(), dims.0 as usize, dims.1 as usize, dims.2 as usize];
        Ok(Self {
            images: Tensor::from_vec(shape, data)?,
            labels: records.iter().map(|r| r.label).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image(&self, i: usize) -> Result<RasterImage> {
        let s = self.images.shape();
        let n = s[1] * s[2] * s[3];
        RasterImage::new(s[1], s[2], crate::imaging::Colorspace::Rgb, self.images.data()[i * n..(i + 1) * n].to_vec())
    }
}

/// Records of a shard set, files in the given order, each checked to be an
/// RGB image of `height` x `width`.
pub fn read_examples(shards: &ShardSet, height: usize, width: usize) -> impl Iterator<Item = Result<ExampleRecord>> {
    read_example_files(shards.paths.clone(), height, width)
}

pub fn read_example_files(paths: Vec<PathBuf>, height: usize, width: usize) -> impl Iterator<Item = Result<ExampleRecord>> {
    let mut files = paths.into_iter();
    let mut current: Option<ShardReader> = None;
    let mut failed = false;
    std::iter::from_fn(move || loop {
        if failed {
            return None;
        }
        if let Some(reader) = current.as_mut() {
            let offset = reader.offset();
            match reader.next() {
                Some(Ok(rec)) => {
                    if (rec.height as usize, rec.width as usize, rec.channels) != (height, width, 3) {
                        failed = true;
                        return Some(Err(Error::Format {
                            path: Some(reader.path().to_path_buf()),
                            offset,
                            message: format!(
                                "record is {}x{}x{}, expected {height}x{width}x3",
                                rec.height, rec.width, rec.channels
                            ),
                        }));
                    }
                    return Some(Ok(rec));
                }
                Some(Err(e)) => {
                    failed = true;
                    return Some(Err(e));
                }
                None => current = None,
            }
        }
        let path = files.next()?;
        match ShardReader::open(&path) {
            Ok(r) => current = Some(r),
            Err(e) => {
                failed = true;
                return Some(Err(e));
            }
        }
    })
}

/// Shuffled batches over a record stream. The final batch may be short.
pub struct ShuffleBatches<I> {
    source: I,
    buffer: ShuffleBuffer<ExampleRecord>,
    batch_size: usize,
}

pub fn shuffle_batches<I>(stream: I, batch_size: usize, params: &ShuffleParams) -> Result<ShuffleBatches<I>>
where
    I: Iterator<Item = Result<ExampleRecord>>,
{
    if batch_size == 0 {
        return Err(Error::invalid("batch size must be at least 1"));
    }
    Ok(ShuffleBatches {
        source: stream,
        buffer: ShuffleBuffer::new(params, RngStream::new(params.seed, crate::rng::streams::SHUFFLE))?,
        batch_size,
    })
}

impl<I> Iterator for ShuffleBatches<I>
where
    I: Iterator<Item = Result<ExampleRecord>>,
{
    type Item = Result<Batch>;

    fn next(&mut self) -> Option<Self::Item> {
        let mut records = Vec::with_capacity(self.batch_size);
        while records.len() < self.batch_size {
            match self.buffer.next_from(&mut self.source) {
                Ok(Some(r)) => records.push(r),
                Ok(None) => break,
                Err(e) => return Some(Err(e)),
            }
        }
        if records.is_empty() {
            return None;
        }
        Some(Batch::from_records(&records))
    }
}

/// Order-preserving batches. The final batch may be short.
pub fn sequential_batches<I>(stream: I, batch_size: usize) -> Result<impl Iterator<Item = Result<Batch>>>
where
    I: Iterator<Item = Result<ExampleRecord>>,
{
    if batch_size == 0 {
        return Err(Error::invalid("batch size must be at least 1"));
    }
    let mut stream = stream;
    Ok(std::iter::from_fn(move || {
        let mut records = Vec::with_capacity(batch_size);
        for r in stream.by_ref() {
            match r {
                Ok(r) => records.push(r),
                Err(e) => return Some(Err(e)),
            }
            if records.len() == batch_size {
                break;
            }
        }
        if records.is_empty() {
            None
        } else {
            Some(Batch::from_records(&records))
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(label: u32) -> ExampleRecord {
        ExampleRecord {
            label,
            height: 1,
            width: 1,
            channels: 3,
            pixels: vec![label as u8; 3],
        }
    }

    fn stream(n: u32) -> impl Iterator<Item = Result<ExampleRecord>> {
        (1..=n).map(|i| Ok(rec(i)))
    }

    fn labels_of(batches: impl Iterator<Item = Result<Batch>>) -> Vec<Vec<u32>> {
        batches.map(|b| b.unwrap().labels).collect()
    }

    #[test]
    fn degenerate_buffer_preserves_order() {
        let p = ShuffleParams {
            capacity: 1,
            min_fill: 0,
            seed: 3,
        };
        let got: Vec<u32> = labels_of(shuffle_batches(stream(10), 3, &p).unwrap()).concat();
        assert_eq!(got, (1..=10).collect::<Vec<_>>());
    }

    #[test]
    fn batch_tensor_shape() {
        let p = ShuffleParams {
            capacity: 100,
            min_fill: 10,
            seed: 1,
        };
        let mut it = shuffle_batches(stream(130), 60, &p).unwrap();
        let b = it.next().unwrap().unwrap();
        assert_eq!(b.images.shape(), &[60, 1, 1, 3]);
        let sizes: Vec<usize> = it.map(|b| b.unwrap().len()).collect();
        assert_eq!(sizes, vec![60, 10]);
    }

    #[test]
    fn one_epoch_is_a_permutation() {
        let p = ShuffleParams {
            capacity: 40,
            min_fill: 5,
            seed: 9,
        };
        let mut got = labels_of(shuffle_batches(stream(250), 7, &p).unwrap()).concat();
        assert_ne!(got, (1..=250).collect::<Vec<_>>());
        got.sort_unstable();
        assert_eq!(got, (1..=250).collect::<Vec<_>>());
    }

    #[test]
    fn seeds_control_order() {
        let run = |seed| {
            let p = ShuffleParams {
                capacity: 64,
                min_fill: 0,
                seed,
            };
            labels_of(shuffle_batches(stream(120), 10, &p).unwrap()).concat()
        };
        assert_eq!(run(5), run(5));
        assert_ne!(run(5), run(6));
    }

    #[test]
    fn sequential_batch_sizes_and_order() {
        let got = labels_of(sequential_batches(stream(5), 2).unwrap());
        assert_eq!(got, vec![vec![1, 2], vec![3, 4], vec![5]]);
    }

    #[test]
    fn invalid_params() {
        let bad = ShuffleParams {
            capacity: 4,
            min_fill: 5,
            seed: 0,
        };
        assert!(shuffle_batches(stream(1), 1, &bad).is_err());
        assert!(shuffle_batches(stream(1), 0, &ShuffleParams::default()).is_err());
        assert!(sequential_batches(stream(1), 0).is_err());
    }

    #[test]
    fn snapshot_restores_sequence() {
        let p = ShuffleParams {
            capacity: 16,
            min_fill: 0,
            seed: 2,
        };
        let mut src = (0u64..).map(Ok::<u64, ()>);
        let mut a = ShuffleBuffer::new(&p, RngStream::new(2, 1)).unwrap();
        for _ in 0..37 {
            a.next_from(&mut src).unwrap();
        }
        let mut b = ShuffleBuffer::restore(16, a.items().to_vec(), a.rng().clone()).unwrap();
        let mut src_a = (53u64..).map(Ok::<u64, ()>);
        let mut src_b = (53u64..).map(Ok::<u64, ()>);
        for _ in 0..100 {
            assert_eq!(a.next_from(&mut src_a).unwrap(), b.next_from(&mut src_b).unwrap());
        }
    }
}
