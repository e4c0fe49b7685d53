//! Train-time random perturbations and the five preprocessing scenarios.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::imaging::{self, Colorspace, RasterImage};
use crate::network::Tensor;
use crate::records::Batch;
pub use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentConfig {
    pub hue_max_delta: f64,
    pub sat_lower: f64,
    pub sat_upper: f64,
    pub flip_prob: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            hue_max_delta: 0.02,
            sat_lower: 0.9,
            sat_upper: 1.2,
            flip_prob: 0.5,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.5).contains(&self.hue_max_delta) {
            return Err(Error::invalid("hue_max_delta must lie in [0, 0.5]"));
        }
        if !(self.sat_lower > 0.0 && self.sat_lower <= self.sat_upper) {
            return Err(Error::invalid("saturation bounds must satisfy 0 < lower <= upper"));
        }
        if !(0.0..=1.0).contains(&self.flip_prob) {
            return Err(Error::invalid("flip_prob must be a probability"));
        }
        Ok(())
    }
}

/// Preprocessing pipeline applied to an RGB input before it reaches the
/// network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    Gray,
    Rgb,
    Hsv,
    HsvGray,
    HsvGrayAug,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::Gray,
        Scenario::Rgb,
        Scenario::Hsv,
        Scenario::HsvGray,
        Scenario::HsvGrayAug,
    ];

    pub fn input_channels(self) -> usize {
        match self {
            Scenario::Gray => 1,
            Scenario::Rgb | Scenario::Hsv => 3,
            Scenario::HsvGray | Scenario::HsvGrayAug => 4,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Scenario::Gray => "gray",
            Scenario::Rgb => "rgb",
            Scenario::Hsv => "hsv",
            Scenario::HsvGray => "hsv_gray",
            Scenario::HsvGrayAug => "hsv_gray_aug",
        }
    }

    pub(crate) fn code(self) -> u32 {
        Scenario::ALL.iter().position(|s| *s == self).unwrap() as u32
    }

    pub(crate) fn from_code(code: u32) -> Option<Self> {
        Scenario::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', '+'], "_");
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.tag() == norm)
            .ok_or_else(|| Error::invalid(format!("unknown scenario {s:?} (expected one of gray, rgb, hsv, hsv_gray, hsv_gray_aug)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Horizontal,
    Vertical,
}

fn via_hsv(img: &RasterImage, op: &str, mut f: impl FnMut(&mut [f32])) -> Result<RasterImage> {
    img.expect(Colorspace::Rgb, op)?;
    let hsv = imaging::rgb_to_hsv(img)?;
    let mut px = hsv.into_pixels();
    for p in px.chunks_exact_mut(3) {
        f(p);
    }
    imaging::hsv_to_rgb(&RasterImage::from_parts(img.height(), img.width(), Colorspace::Hsv, px))
}

/// Rotate hue by `delta` (wrapping modulo 1).
pub fn adjust_hue(img: &RasterImage, delta: f64) -> Result<RasterImage> {
    if !(delta.abs() <= 0.5) {
        return Err(Error::invalid(format!("hue delta {delta} outside [-0.5, 0.5]")));
    }
    via_hsv(img, "adjust_hue", |p| {
        let mut h = (f64::from(p[0]) + delta).rem_euclid(1.0) as f32;
        if h >= 1.0 {
            h = 0.0;
        }
        p[0] = h;
    })
}

/// Scale saturation by `factor`, clamping to `[0, 1]`.
pub fn adjust_saturation(img: &RasterImage, factor: f64) -> Result<RasterImage> {
    if !(factor > 0.0) {
        return Err(Error::invalid(format!("saturation factor {factor} must be positive")));
    }
    via_hsv(img, "adjust_saturation", |p| {
        p[1] = ((f64::from(p[1]) * factor).clamp(0.0, 1.0)) as f32;
    })
}

pub fn flip(img: &RasterImage, axis: Axis) -> RasterImage {
    let (h, w, c) = (img.height(), img.width(), img.channels());
    let src = img.pixels();
    let mut out = Vec::with_capacity(src.len());
    for r in 0..h {
        let sr = match axis {
            Axis::Horizontal => r,
            Axis::Vertical => h - 1 - r,
        };
        for col in 0..w {
            let sc = match axis {
                Axis::Horizontal => w - 1 - col,
                Axis::Vertical => col,
            };
            let i = (sr * w + sc) * c;
            out.extend_from_slice(&src[i..i + c]);
        }
    }
    RasterImage::from_parts(h, w, img.colorspace(), out)
}

fn hsv_gray(img: &RasterImage) -> Result<RasterImage> {
    imaging::concat_hsv_gray(&imaging::rgb_to_hsv(img)?, &imaging::rgb_to_gray(img)?)
}

/// Random hue, saturation and flips, drawn in that order.
pub fn augment(img: &RasterImage, cfg: &AugmentConfig, rng: &mut RngStream) -> Result<RasterImage> {
    let delta = rng.uniform(-cfg.hue_max_delta, cfg.hue_max_delta);
    let factor = rng.uniform(cfg.sat_lower, cfg.sat_upper);
    let flip_h = rng.bernoulli(cfg.flip_prob);
    let flip_v = rng.bernoulli(cfg.flip_prob);

    let mut out = adjust_hue(img, delta)?;
    out = adjust_saturation(&out, factor)?;
    if flip_h {
        out = flip(&out, Axis::Horizontal);
    }
    if flip_v {
        out = flip(&out, Axis::Vertical);
    }
    Ok(out)
}

/// Turn an RGB input into the network input for `scenario`.
///
/// Only `HsvGrayAug` in train mode draws from `rng`; every other combination
/// is deterministic.
pub fn preprocess(img: &RasterImage, scenario: Scenario, mode: Mode, rng: &mut RngStream) -> Result<RasterImage> {
    preprocess_with(img, scenario, mode, &AugmentConfig::default(), rng)
}

pub fn preprocess_with(
    img: &RasterImage,
    scenario: Scenario,
    mode: Mode,
    cfg: &AugmentConfig,
    rng: &mut RngStream,
) -> Result<RasterImage> {
    img.expect(Colorspace::Rgb, "preprocess")?;
    match (scenario, mode) {
        (Scenario::Gray, _) => imaging::rgb_to_gray(img),
        (Scenario::Rgb, _) => Ok(img.clone()),
        (Scenario::Hsv, _) => imaging::rgb_to_hsv(img),
        (Scenario::HsvGray, _) | (Scenario::HsvGrayAug, Mode::Test) => hsv_gray(img),
        (Scenario::HsvGrayAug, Mode::Train) => hsv_gray(&augment(img, cfg, rng)?),
    }
}

/// Preprocess every image of an RGB batch into a network input tensor of
/// `scenario.input_channels()` channels. Images are processed in batch order.
pub fn preprocess_batch(batch: &Batch, scenario: Scenario, mode: Mode, rng: &mut RngStream) -> Result<Tensor<f32>> {
    let s = batch.images.shape();
    let (h, w) = (s[1], s[2]);
    let mut data = Vec::with_capacity(batch.len() * h * w * scenario.input_channels());
    for i in 0..batch.len() {
        data.extend(preprocess(&batch.image(i)?, scenario, mode, rng)?.into_pixels());
    }
    Tensor::from_vec(vec![batch.len(), h, w, scenario.input_channels()], data)
}
