use std::fs;
use std::path::{Path, PathBuf};

use super::format::{ExampleRecord, ShardReader, ShardWriter};
use super::labels::LabelMap;
use crate::error::{Error, Result};
use crate::imaging::{ppm, resize_bilinear};
use crate::rng::RngStream;

/// Reference split sizes of the full fruit corpus.
pub const REFERENCE_TRAIN_IMAGES: usize = 46371;
pub const REFERENCE_TEST_IMAGES: usize = 15563;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn tag(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

/// The shard files making up one split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShardSet {
    pub split: Split,
    pub paths: Vec<PathBuf>,
    pub count: usize,
}

impl ShardSet {
    /// Find `<split>-*.rec` files in `dir`, in name order, and count their
    /// records from the shard headers.
    pub fn discover(dir: &Path, split: Split) -> Result<Self> {
        let prefix = format!("{}-", split.tag());
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| {
                p.extension().is_some_and(|x| x == "rec")
                    && p.file_name()
                        .and_then(|n| n.to_str())
                        .is_some_and(|n| n.starts_with(&prefix))
            })
            .collect();
        paths.sort();
        Self::from_paths(split, paths)
    }

    pub fn from_paths(split: Split, paths: Vec<PathBuf>) -> Result<Self> {
        let mut count = 0usize;
        for p in &paths {
            count += ShardReader::open(p)?.remaining() as usize;
        }
        Ok(Self { split, paths, count })
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}

pub fn shard_name(split: Split, index: usize, total: usize) -> String {
    format!("{}-{index:05}-of-{total:05}.rec", split.tag())
}

#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub train_shards: usize,
    pub test_shards: usize,
    /// Images of any other size are bilinearly rescaled to this.
    pub image_height: usize,
    pub image_width: usize,
    /// Seed for the file-order shuffle that spreads classes across shards.
    pub shuffle_seed: u64,
    pub num_threads: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            train_shards: 2,
            test_shards: 2,
            image_height: 100,
            image_width: 100,
            shuffle_seed: 12345,
            num_threads: 1,
        }
    }
}

/// Image files of one split, labelled from their class directory.
fn collect_split(dir: &Path, labels: &LabelMap) -> Result<Vec<(PathBuf, u32)>> {
    let mut class_dirs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    class_dirs.sort();
    let mut files = Vec::new();
    for class_dir in class_dirs {
        let name = class_dir.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let label = labels.id(name).ok_or_else(|| {
            Error::invalid(format!(
                "class directory {} is not listed in the labels file",
                class_dir.display()
            ))
        })?;
        let mut images: Vec<PathBuf> = fs::read_dir(&class_dir)
            .map_err(|e| Error::io(&class_dir, e))?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| {
                p.is_file() && !p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with('.'))
            })
            .collect();
        images.sort();
        files.extend(images.into_iter().map(|p| (p, label)));
    }
    Ok(files)
}

fn load_record(path: &Path, label: u32, opts: &BuildOptions) -> Result<ExampleRecord> {
    let mut img = ppm::read(path)?;
    if (img.height(), img.width()) != (opts.image_height, opts.image_width) {
        img = resize_bilinear(&img, opts.image_height, opts.image_width)?;
    }
    ExampleRecord::from_image(label, &img)
}

fn write_split(
    files: &[(PathBuf, u32)],
    split: Split,
    shards: usize,
    out_dir: &Path,
    opts: &BuildOptions,
) -> Result<ShardSet> {
    if shards == 0 {
        return Err(Error::invalid(format!("{} shard count must be at least 1", split.tag())));
    }
    let paths: Vec<PathBuf> = (0..shards).map(|i| out_dir.join(shard_name(split, i, shards))).collect();
    let ranges: Vec<(usize, usize)> = (0..shards)
        .map(|i| (i * files.len() / shards, (i + 1) * files.len() / shards))
        .collect();

    let write_one = |i: usize| -> Result<()> {
        let mut w = ShardWriter::create(&paths[i])?;
        for (path, label) in &files[ranges[i].0..ranges[i].1] {
            w.append(&load_record(path, *label, opts)?)?;
        }
        w.finish()?;
        Ok(())
    };

    let threads = opts.num_threads.clamp(1, shards);
    let results: Vec<Result<()>> = if threads == 1 {
        (0..shards).map(write_one).collect()
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    let write_one = &write_one;
                    s.spawn(move || (t..shards).step_by(threads).map(write_one).collect::<Vec<_>>())
                })
                .collect();
            let mut per_shard: Vec<Option<Result<()>>> = (0..shards).map(|_| None).collect();
            for (t, h) in handles.into_iter().enumerate() {
                let outs = h.join().expect("shard writer thread panicked");
                for (k, r) in outs.into_iter().enumerate() {
                    per_shard[t + k * threads] = Some(r);
                }
            }
            per_shard.into_iter().map(|r| r.unwrap()).collect()
        })
    };
    if let Some(err) = results.into_iter().find_map(|r| r.err()) {
        for p in &paths {
            let _ = fs::remove_file(p);
        }
        return Err(err);
    }
    Ok(ShardSet {
        split,
        paths,
        count: files.len(),
    })
}

/// Serialize the train and test image trees into shard files.
///
/// Each split directory holds one subdirectory per class, named exactly as
/// in the labels file. File order is shuffled with a fixed seed before being
/// cut into contiguous shard ranges.
pub fn build_shards(
    train_dir: &Path,
    test_dir: &Path,
    labels_file: &Path,
    out_dir: &Path,
    opts: &BuildOptions,
) -> Result<(ShardSet, ShardSet)> {
    let labels = LabelMap::load(labels_file)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut outputs = Vec::new();
    for (split, dir, shards) in [
        (Split::Train, train_dir, opts.train_shards),
        (Split::Test, test_dir, opts.test_shards),
    ] {
        let built = collect_split(dir, &labels).and_then(|mut files| {
            let mut rng = RngStream::new(opts.shuffle_seed, split as u64);
            for i in (1..files.len()).rev() {
                files.swap(i, rng.below(i + 1));
            }
            write_split(&files, split, shards, out_dir, opts)
        });
        match built {
            Ok(set) => outputs.push(set),
            Err(e) => {
                for set in &outputs {
                    for p in &set.paths {
                        let _ = fs::remove_file(p);
                    }
                }
                return Err(e);
            }
        }
    }
    let test = outputs.pop().unwrap();
    let train = outputs.pop().unwrap();
    Ok((train, test))
}
