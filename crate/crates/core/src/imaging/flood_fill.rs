use std::collections::VecDeque;

use super::{Colorspace, RasterImage};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloodFillParams {
    /// Maximum Euclidean RGB distance (channels in `[0, 1]`) between two
    /// neighbouring pixels for the fill to spread. The comparison is strict.
    pub threshold: f64,
}

impl FloodFillParams {
    pub fn new(threshold: f64) -> Result<Self> {
        if !(threshold >= 0.0) {
            return Err(Error::invalid(format!("flood fill threshold {threshold} must be >= 0")));
        }
        Ok(Self { threshold })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackgroundMask {
    height: usize,
    width: usize,
    marked: Vec<bool>,
}

impl BackgroundMask {
    pub fn new(height: usize, width: usize, marked: Vec<bool>) -> Result<Self> {
        if marked.len() != height * width {
            return Err(Error::invalid("mask length does not match its dimensions"));
        }
        Ok(Self { height, width, marked })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn marked(&self) -> &[bool] {
        &self.marked
    }

    pub fn is_marked(&self, row: usize, col: usize) -> bool {
        self.marked[row * self.width + col]
    }

    pub fn count(&self) -> usize {
        self.marked.iter().filter(|m| **m).count()
    }
}

fn color_distance(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = f64::from(*x) - f64::from(*y);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Mark the background by growing inward from the image border.
///
/// Every border pixel starts marked. An unmarked pixel joins the background
/// when one of its 4-neighbours is already marked and their RGB distance is
/// strictly below the threshold; this repeats until nothing changes.
pub fn flood_fill_background(img: &RasterImage, params: FloodFillParams) -> Result<BackgroundMask> {
    img.expect(Colorspace::Rgb, "flood_fill_background")?;
    let (h, w) = (img.height(), img.width());
    if h == 0 || w == 0 {
        return Err(Error::invalid("flood_fill_background: empty image"));
    }
    let mut marked = vec![false; h * w];
    let mut queue = VecDeque::new();
    for r in 0..h {
        for c in 0..w {
            if r == 0 || c == 0 || r == h - 1 || c == w - 1 {
                marked[r * w + c] = true;
                queue.push_back((r, c));
            }
        }
    }

    while let Some((r, c)) = queue.pop_front() {
        let here = img.pixel(r, c);
        let mut visit = |nr: usize, nc: usize| {
            let idx = nr * w + nc;
            if !marked[idx] && color_distance(here, img.pixel(nr, nc)) < params.threshold {
                marked[idx] = true;
                queue.push_back((nr, nc));
            }
        };
        if r > 0 {
            visit(r - 1, c);
        }
        if r + 1 < h {
            visit(r + 1, c);
        }
        if c > 0 {
            visit(r, c - 1);
        }
        if c + 1 < w {
            visit(r, c + 1);
        }
    }

    Ok(BackgroundMask {
        height: h,
        width: w,
        marked,
    })
}

/// Paint every marked pixel white; unmarked pixels are copied unchanged.
pub fn remove_background(img: &RasterImage, mask: &BackgroundMask) -> Result<RasterImage> {
    img.expect(Colorspace::Rgb, "remove_background")?;
    if mask.height != img.height() || mask.width != img.width() {
        return Err(Error::invalid(format!(
            "remove_background: mask is {}x{}, image is {}x{}",
            mask.height,
            mask.width,
            img.height(),
            img.width()
        )));
    }
    let mut pixels = img.pixels().to_vec();
    for (px, &m) in pixels.chunks_exact_mut(3).zip(&mask.marked) {
        if m {
            px.fill(1.0);
        }
    }
    Ok(RasterImage::from_parts(img.height(), img.width(), Colorspace::Rgb, pixels))
}
