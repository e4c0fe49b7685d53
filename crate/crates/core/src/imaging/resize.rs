use super::RasterImage;
use crate::error::{Error, Result};

/// Source coordinate and interpolation weight for each output index, with
/// corner-aligned sampling: output 0 maps to input 0 and the last output to
/// the last input.
fn taps(input: usize, output: usize) -> Vec<(usize, usize, f64)> {
    let scale = if output > 1 {
        (input - 1) as f64 / (output - 1) as f64
    } else {
        0.0
    };
    (0..output)
        .map(|o| {
            let src = o as f64 * scale;
            let lo = (src.floor() as usize).min(input - 1);
            let hi = (lo + 1).min(input - 1);
            (lo, hi, src - lo as f64)
        })
        .collect()
}

pub fn resize_bilinear(img: &RasterImage, out_h: usize, out_w: usize) -> Result<RasterImage> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::invalid(format!("resize_bilinear: target {out_h}x{out_w} has a zero dimension")));
    }
    let (h, w, c) = (img.height(), img.width(), img.channels());
    if h == 0 || w == 0 {
        return Err(Error::invalid("resize_bilinear: empty source image"));
    }
    if (h, w) == (out_h, out_w) {
        return Ok(img.clone());
    }
    let rows = taps(h, out_h);
    let cols = taps(w, out_w);
    let src = img.pixels();
    let at = |r: usize, col: usize, ch: usize| f64::from(src[(r * w + col) * c + ch]);

    let mut pixels = Vec::with_capacity(out_h * out_w * c);
    for &(r0, r1, fy) in &rows {
        for &(c0, c1, fx) in &cols {
            for ch in 0..c {
                let top = at(r0, c0, ch) + (at(r0, c1, ch) - at(r0, c0, ch)) * fx;
                let bottom = at(r1, c0, ch) + (at(r1, c1, ch) - at(r1, c0, ch)) * fx;
                let v = top + (bottom - top) * fy;
                pixels.push((v as f32).clamp(0.0, 1.0));
            }
        }
    }
    Ok(RasterImage::from_parts(out_h, out_w, img.colorspace(), pixels))
}
