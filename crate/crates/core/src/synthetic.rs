//! Labelled toy corpus for desk-scale runs: one coloured ellipse per image,
//! hue fixed by the class, position/size/shade jittered per image.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::imaging::{hsv_to_rgb_pixel, ppm, Colorspace, RasterImage};
use crate::records::{ExampleRecord, LabelMap, Split};
use crate::rng::{streams, RngStream};

const FRUITS: [&str; 12] = [
    "apple", "banana", "cherry", "kiwi", "lemon", "lime", "mango", "orange", "peach", "pear", "plum", "grape",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub height: usize,
    pub width: usize,
    pub seed: u64,
    /// Off-white, uneven backdrop instead of pure white, for exercising
    /// background extraction.
    pub raw_background: bool,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            classes: 3,
            train_per_class: 20,
            test_per_class: 10,
            height: 100,
            width: 100,
            seed: 7,
            raw_background: false,
        }
    }
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if self.classes == 0 || self.height < 4 || self.width < 4 {
            return Err(Error::invalid("synthetic corpus needs at least one class and 4x4 images"));
        }
        Ok(())
    }

    pub fn labels(&self) -> Result<LabelMap> {
        LabelMap::new(class_names(self.classes))
    }

    fn per_class(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train_per_class,
            Split::Test => self.test_per_class,
        }
    }

    /// Each (split, class, index) image has its own stream position, so the
    /// corpus does not depend on generation order.
    fn rng_for(&self, split: Split, class: usize, index: usize) -> RngStream {
        let tag = match split {
            Split::Train => 0u64,
            Split::Test => 1u64,
        };
        let key = self.seed ^ (tag << 62) ^ ((class as u64) << 32) ^ index as u64;
        RngStream::new(key, streams::SYNTHETIC)
    }
}

pub fn class_names(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| match FRUITS.get(i) {
            Some(name) if n <= FRUITS.len() => (*name).to_string(),
            _ => format!("fruit_{i:03}"),
        })
        .collect()
}

/// One RGB image of class `class` (0-based, background excluded).
pub fn synthetic_image(spec: &SyntheticSpec, class: usize, rng: &mut RngStream) -> RasterImage {
    let (h, w) = (spec.height, spec.width);
    let hue = class as f64 / spec.classes as f64;
    let sat = rng.uniform(0.6, 0.95);
    let val = rng.uniform(0.55, 0.9);
    let cy = h as f64 * rng.uniform(0.42, 0.58);
    let cx = w as f64 * rng.uniform(0.42, 0.58);
    let ry = h as f64 * rng.uniform(0.22, 0.38);
    let rx = w as f64 * rng.uniform(0.22, 0.38);
    let (bg_base, bg_slope) = if spec.raw_background {
        (rng.uniform(0.86, 0.94), rng.uniform(-0.04, 0.04))
    } else {
        (1.0, 0.0)
    };

    let mut px = Vec::with_capacity(h * w * 3);
    for r in 0..h {
        for c in 0..w {
            let dy = (r as f64 + 0.5 - cy) / ry;
            let dx = (c as f64 + 0.5 - cx) / rx;
            let d = dy * dy + dx * dx;
            let rgb = if d <= 1.0 {
                // darker towards the rim
                let (r, g, b) = hsv_to_rgb_pixel(hue, sat, val * (1.0 - 0.25 * d));
                [r, g, b]
            } else {
                let v = (bg_base + bg_slope * (c as f64 / w as f64 - 0.5)).clamp(0.0, 1.0);
                [v, v, v]
            };
            px.extend(rgb.iter().map(|v| *v as f32));
        }
    }
    RasterImage::new(h, w, Colorspace::Rgb, px).expect("generated pixels lie in [0, 1]")
}

/// Records of one split, class by class, labels offset past the background.
pub fn synthetic_records(spec: &SyntheticSpec, split: Split) -> Result<Vec<ExampleRecord>> {
    spec.validate()?;
    let mut out = Vec::with_capacity(spec.classes * spec.per_class(split));
    for class in 0..spec.classes {
        for i in 0..spec.per_class(split) {
            let img = synthetic_image(spec, class, &mut spec.rng_for(split, class, i));
            out.push(ExampleRecord::from_image(class as u32 + 1, &img)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub train_dir: PathBuf,
    pub test_dir: PathBuf,
    pub labels_file: PathBuf,
    pub labels: LabelMap,
}

/// Write `Training/<class>/*.ppm`, `Test/<class>/*.ppm` and `labels.txt`
/// under `root`.
pub fn generate_corpus(root: &Path, spec: &SyntheticSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let labels = spec.labels()?;
    let corpus = SyntheticCorpus {
        train_dir: root.join("Training"),
        test_dir: root.join("Test"),
        labels_file: root.join("labels.txt"),
        labels,
    };
    for (split, dir) in [(Split::Train, &corpus.train_dir), (Split::Test, &corpus.test_dir)] {
        for (class, name) in corpus.labels.classes().iter().enumerate() {
            let class_dir = dir.join(name);
            fs::create_dir_all(&class_dir).map_err(|e| Error::io(&class_dir, e))?;
            for i in 0..spec.per_class(split) {
                let img = synthetic_image(spec, class, &mut spec.rng_for(split, class, i));
                ppm::write(&class_dir.join(format!("{name}_{i:04}.ppm")), &img)?;
            }
        }
    }
    fs::write(&corpus.labels_file, corpus.labels.to_text()).map_err(|e| Error::io(&corpus.labels_file, e))?;
    Ok(corpus)
}
