//! Binary PPM (P6, maxval 255) input and output.

use std::fs;
use std::path::Path;

use super::{Colorspace, RasterImage};
use crate::error::{Error, Result};

fn format_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Format {
        path: None,
        offset: offset as u64,
        message: message.into(),
    }
}

/// Parse a P6 image from memory.
pub fn decode(bytes: &[u8]) -> Result<RasterImage> {
    let mut pos = 0usize;
    let token = |pos: &mut usize| -> Result<String> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err(format_err(start, "unexpected end of PPM header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };

    let magic = token(&mut pos)?;
    if magic != "P6" {
        return Err(format_err(0, format!("expected P6 magic, found {magic:?}")));
    }
    let number = |pos: &mut usize| -> Result<usize> {
        let at = *pos;
        token(pos)?
            .parse::<usize>()
            .map_err(|_| format_err(at, "malformed PPM header field"))
    };
    let width = number(&mut pos)?;
    let height = number(&mut pos)?;
    let maxval = number(&mut pos)?;
    if maxval != 255 {
        return Err(format_err(pos, format!("only maxval 255 is supported, found {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let need = width * height * 3;
    let raster = bytes
        .get(pos..pos + need)
        .ok_or_else(|| format_err(bytes.len(), format!("raster truncated: need {need} bytes after offset {pos}")))?;
    RasterImage::from_rgb8(height, width, raster)
}

pub fn encode(img: &RasterImage) -> Result<Vec<u8>> {
    img.expect(Colorspace::Rgb, "ppm::encode")?;
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.to_u8());
    Ok(out)
}

pub fn read(path: &Path) -> Result<RasterImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|e| e.with_path(path))
}

pub fn write(path: &Path, img: &RasterImage) -> Result<()> {
    fs::write(path, encode(img)?).map_err(|e| Error::io(path, e))
}
