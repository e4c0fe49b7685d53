use super::{Colorspace, RasterImage};
use crate::error::{Error, Result};

const LUMA_R: f64 = 0.299;
const LUMA_G: f64 = 0.587;
const LUMA_B: f64 = 0.114;

/// Single RGB triple to HSV, every component in `[0, 1]`.
pub fn rgb_to_hsv_pixel(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let range = max - min;
    let v = max;
    let s = if max > 0.0 { range / max } else { 0.0 };
    if range <= 0.0 {
        return (0.0, s, v);
    }
    let sector = if max == r {
        (g - b) / range
    } else if max == g {
        2.0 + (b - r) / range
    } else {
        4.0 + (r - g) / range
    };
    let mut h = sector / 6.0;
    if h < 0.0 {
        h += 1.0;
    }
    if h >= 1.0 {
        h -= 1.0;
    }
    (h, s, v)
}

pub fn hsv_to_rgb_pixel(h: f64, s: f64, v: f64) -> (f64, f64, f64) {
    if s <= 0.0 {
        return (v, v, v);
    }
    let h6 = (h.rem_euclid(1.0)) * 6.0;
    let sector = h6.floor();
    let f = h6 - sector;
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    match sector as u32 % 6 {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    }
}

fn store(dst: &mut [f32], vals: [f64; 3]) {
    for (d, v) in dst.iter_mut().zip(vals) {
        *d = (v as f32).clamp(0.0, 1.0);
    }
}

pub fn rgb_to_hsv(img: &RasterImage) -> Result<RasterImage> {
    img.expect(Colorspace::Rgb, "rgb_to_hsv")?;
    Ok(img.map_pixels(Colorspace::Hsv, |src, dst| {
        let (h, s, v) = rgb_to_hsv_pixel(src[0].into(), src[1].into(), src[2].into());
        store(dst, [h, s, v]);
    }))
}

pub fn hsv_to_rgb(img: &RasterImage) -> Result<RasterImage> {
    img.expect(Colorspace::Hsv, "hsv_to_rgb")?;
    Ok(img.map_pixels(Colorspace::Rgb, |src, dst| {
        let (r, g, b) = hsv_to_rgb_pixel(src[0].into(), src[1].into(), src[2].into());
        store(dst, [r, g, b]);
    }))
}

/// BT.601 luma.
pub fn rgb_to_gray(img: &RasterImage) -> Result<RasterImage> {
    img.expect(Colorspace::Rgb, "rgb_to_gray")?;
    Ok(img.map_pixels(Colorspace::Gray, |src, dst| {
        let y = LUMA_R * f64::from(src[0]) + LUMA_G * f64::from(src[1]) + LUMA_B * f64::from(src[2]);
        dst[0] = (y as f32).clamp(0.0, 1.0);
    }))
}

pub fn concat_hsv_gray(hsv: &RasterImage, gray: &RasterImage) -> Result<RasterImage> {
    hsv.expect(Colorspace::Hsv, "concat_hsv_gray")?;
    gray.expect(Colorspace::Gray, "concat_hsv_gray")?;
    if hsv.height() != gray.height() || hsv.width() != gray.width() {
        return Err(Error::invalid(format!(
            "concat_hsv_gray: {}x{} hsv vs {}x{} gray",
            hsv.height(),
            hsv.width(),
            gray.height(),
            gray.width()
        )));
    }
    let n = hsv.height() * hsv.width();
    let mut pixels = Vec::with_capacity(n * 4);
    for (px, g) in hsv.pixels().chunks_exact(3).zip(gray.pixels()) {
        pixels.extend_from_slice(px);
        pixels.push(*g);
    }
    Ok(RasterImage::from_parts(hsv.height(), hsv.width(), Colorspace::HsvGray, pixels))
}
