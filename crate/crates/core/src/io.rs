//! 8-bit image decoding and PNG encoding.

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ExtendedColorType, ImageEncoder};

use crate::error::{Error, Result};
use crate::image::Image;

/// Decodes PNG/JPEG bytes to `[0, 1]` samples. Grayscale inputs give one
/// channel, everything else three (alpha is dropped).
pub fn decode_bytes(bytes: &[u8]) -> Result<Image> {
    let dynamic = image::load_from_memory(bytes)?;
    from_dynamic(&dynamic)
}

pub fn read_image(path: &Path) -> Result<Image> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let dynamic = image::load_from_memory(&bytes).map_err(|source| Error::Decode {
        path: path.to_path_buf(),
        source,
    })?;
    from_dynamic(&dynamic)
}

fn from_dynamic(dynamic: &DynamicImage) -> Result<Image> {
    let (w, h) = (dynamic.width() as usize, dynamic.height() as usize);
    if dynamic.color().has_color() {
        let rgb = dynamic.to_rgb8();
        let raw = rgb.as_raw();
        Image::from_fn(h, w, 3, |c, i, j| raw[(i * w + j) * 3 + c] as f64 / 255.0)
    } else {
        let luma = dynamic.to_luma8();
        let raw = luma.as_raw();
        Image::from_fn(h, w, 1, |_, i, j| raw[i * w + j] as f64 / 255.0)
    }
}

/// Clamp to `[0, 1]`, scale to 255 and round half to even.
#[inline]
pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round_ties_even() as u8
}

/// Interleaved 8-bit samples (`L` or `RGB`).
pub fn to_u8_interleaved(img: &Image) -> Vec<u8> {
    let (h, w, ch) = img.shape();
    let mut out = Vec::with_capacity(h * w * ch);
    for i in 0..h {
        for j in 0..w {
            for c in 0..ch {
                out.push(quantize(img.get(c, i, j)));
            }
        }
    }
    out
}

/// Encodes one- or three-channel images as 8-bit PNG.
pub fn encode_png(img: &Image) -> Result<Vec<u8>> {
    let color = match img.channels() {
        1 => ExtendedColorType::L8,
        3 => ExtendedColorType::Rgb8,
        n => {
            return Err(Error::Shape(format!(
                "PNG output supports 1 or 3 channels, got {n}"
            )))
        }
    };
    encode_raw_png(&to_u8_interleaved(img), img.width(), img.height(), color)
}

pub(crate) fn encode_raw_png(
    raw: &[u8],
    width: usize,
    height: usize,
    color: ExtendedColorType,
) -> Result<Vec<u8>> {
    let mut buf = Cursor::new(Vec::new());
    image::codecs::png::PngEncoder::new(&mut buf).write_image(
        raw,
        width as u32,
        height as u32,
        color,
    )?;
    Ok(buf.into_inner())
}

/// Writes `bytes` to `path` through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn write_png(path: &Path, img: &Image) -> Result<()> {
    write_atomic(path, &encode_png(img)?)
}
