//! Pixel-level primitives: background extraction, rescaling, colorspace
//! conversion and channel merging.
//!
//! Images are row-major, channel-interleaved `f32` buffers with every value
//! in `[0, 1]`. All operations are pure.

mod color;
mod flood_fill;
pub mod ppm;
mod resize;

pub use color::{concat_hsv_gray, hsv_to_rgb, rgb_to_gray, rgb_to_hsv, rgb_to_hsv_pixel, hsv_to_rgb_pixel};
pub use flood_fill::{flood_fill_background, remove_background, BackgroundMask, FloodFillParams};
pub use resize::resize_bilinear;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Colorspace {
    Rgb,
    Hsv,
    Gray,
    HsvGray,
}

impl Colorspace {
    pub fn channels(self) -> usize {
        match self {
            Colorspace::Rgb | Colorspace::Hsv => 3,
            Colorspace::Gray => 1,
            Colorspace::HsvGray => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    height: usize,
    width: usize,
    colorspace: Colorspace,
    pixels: Vec<f32>,
}

impl RasterImage {
    /// Build an image, checking the buffer length and the `[0, 1]` range.
    pub fn new(height: usize, width: usize, colorspace: Colorspace, pixels: Vec<f32>) -> Result<Self> {
        let expected = height * width * colorspace.channels();
        if pixels.len() != expected {
            return Err(Error::invalid(format!(
                "pixel buffer has {} values, {}x{}x{} needs {}",
                pixels.len(),
                height,
                width,
                colorspace.channels(),
                expected
            )));
        }
        if let Some(v) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("pixel value {v} outside [0, 1]")));
        }
        Ok(Self {
            height,
            width,
            colorspace,
            pixels,
        })
    }

    /// Construction for internal producers whose output is in range by
    /// construction.
    pub(crate) fn from_parts(height: usize, width: usize, colorspace: Colorspace, pixels: Vec<f32>) -> Self {
        debug_assert_eq!(pixels.len(), height * width * colorspace.channels());
        Self {
            height,
            width,
            colorspace,
            pixels,
        }
    }

    pub fn filled(height: usize, width: usize, colorspace: Colorspace, value: &[f32]) -> Result<Self> {
        if value.len() != colorspace.channels() {
            return Err(Error::invalid("fill value does not match channel count"));
        }
        let pixels = value.iter().copied().cycle().take(height * width * value.len()).collect();
        Self::new(height, width, colorspace, pixels)
    }

    /// 8-bit RGB bytes, mapped with `v / 255`.
    pub fn from_rgb8(height: usize, width: usize, bytes: &[u8]) -> Result<Self> {
        let pixels = bytes.iter().map(|&b| f32::from(b) / 255.0).collect();
        Self::new(height, width, Colorspace::Rgb, pixels)
    }

    /// Quantize to 8 bits with `round(v * 255)`, clamped.
    pub fn to_u8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect()
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.colorspace.channels()
    }

    pub fn colorspace(&self) -> Colorspace {
        self.colorspace
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f32> {
        self.pixels
    }

    pub fn pixel(&self, row: usize, col: usize) -> &[f32] {
        let c = self.channels();
        let i = (row * self.width + col) * c;
        &self.pixels[i..i + c]
    }

    pub(crate) fn expect(&self, cs: Colorspace, op: &str) -> Result<()> {
        if self.colorspace != cs {
            return Err(Error::invalid(format!(
                "{op} expects a {cs:?} image, got {:?}",
                self.colorspace
            )));
        }
        Ok(())
    }

    /// Apply `f` to every pixel, producing an image in `out` colorspace with
    /// the same channel count.
    pub(crate) fn map_pixels(&self, out: Colorspace, mut f: impl FnMut(&[f32], &mut [f32])) -> Self {
        let cin = self.channels();
        let cout = out.channels();
        let n = self.height * self.width;
        let mut pixels = vec![0.0f32; n * cout];
        for (src, dst) in self.pixels.chunks_exact(cin).zip(pixels.chunks_exact_mut(cout)) {
            f(src, dst);
        }
        Self::from_parts(self.height, self.width, out, pixels)
    }
}
