//! Multi-channel floating point images.
//!
//! Samples are stored channel-planar: all of channel 0 row by row, then
//! channel 1, and so on. The nominal sample range is `[0, 1]`, but nothing
//! between diffusion steps clamps to it.

use crate::error::{Error, Result};

/// Smallest edge length accepted for any image or mask.
pub const MIN_EDGE: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(height, width, channels)?;
        if data.len() != height * width * channels {
            return Err(Error::Shape(format!(
                "{height}x{width}x{channels} image needs {} samples, got {}",
                height * width * channels,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            let plane = height * width;
            return Err(Error::param(
                "samples",
                format!(
                    "non-finite sample at row {}, col {}, channel {}",
                    (pos % plane) / width,
                    pos % width,
                    pos / plane
                ),
            ));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(height, width, channels, vec![value; height * width * channels])
    }

    /// Builds an image from `f(channel, row, col)`.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * channels);
        for c in 0..channels {
            for i in 0..height {
                for j in 0..width {
                    data.push(f(c, i, j));
                }
            }
        }
        Self::new(height, width, channels, data)
    }

    /// Builds an image from raw parts that are known to be valid.
    pub(crate) fn from_parts(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), height * width * channels);
        Self {
            height,
            width,
            channels,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn plane(&self, channel: usize) -> &[f64] {
        let n = self.pixels();
        &self.data[channel * n..(channel + 1) * n]
    }

    pub fn plane_mut(&mut self, channel: usize) -> &mut [f64] {
        let n = self.pixels();
        &mut self.data[channel * n..(channel + 1) * n]
    }

    #[inline]
    pub fn get(&self, channel: usize, row: usize, col: usize) -> f64 {
        self.data[(channel * self.height + row) * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, channel: usize, row: usize, col: usize, value: f64) {
        self.data[(channel * self.height + row) * self.width + col] = value;
    }

    pub fn channel_mean(&self, channel: usize) -> f64 {
        self.plane(channel).iter().sum::<f64>() / self.pixels() as f64
    }

    pub fn channel_range(&self, channel: usize) -> (f64, f64) {
        self.plane(channel)
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// First non-finite sample as `(row, col, channel)`.
    pub fn find_non_finite(&self) -> Option<(usize, usize, usize)> {
        let n = self.pixels();
        self.data
            .iter()
            .position(|v| !v.is_finite())
            .map(|pos| ((pos % n) / self.width, pos % self.width, pos / n))
    }

    pub fn max_abs_diff(&self, other: &Image) -> f64 {
        assert_eq!(self.shape(), other.shape(), "image shapes differ");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn flip_horizontal(&self) -> Image {
        let w = self.width;
        self.remap(self.height, w, |i, j| (i, w - 1 - j))
    }

    pub fn flip_vertical(&self) -> Image {
        let h = self.height;
        self.remap(h, self.width, |i, j| (h - 1 - i, j))
    }

    /// Rotates by 90 degrees counter-clockwise.
    pub fn rotate90(&self) -> Image {
        let w = self.width;
        self.remap(w, self.height, |i, j| (j, w - 1 - i))
    }

    /// Extracts the `height x width` window whose top-left corner is `(row, col)`.
    pub fn crop(&self, row: usize, col: usize, height: usize, width: usize) -> Result<Image> {
        check_dims(height, width, self.channels)?;
        if row + height > self.height || col + width > self.width {
            return Err(Error::Shape(format!(
                "crop {height}x{width}@({row},{col}) exceeds {}x{}",
                self.height, self.width
            )));
        }
        Ok(self.remap(height, width, |i, j| (row + i, col + j)))
    }

    fn remap(&self, height: usize, width: usize, src: impl Fn(usize, usize) -> (usize, usize)) -> Image {
        let mut data = Vec::with_capacity(height * width * self.channels);
        for c in 0..self.channels {
            for i in 0..height {
                for j in 0..width {
                    let (si, sj) = src(i, j);
                    data.push(self.get(c, si, sj));
                }
            }
        }
        Image::from_parts(height, width, self.channels, data)
    }
}

pub(crate) fn check_dims(height: usize, width: usize, channels: usize) -> Result<()> {
    if height < MIN_EDGE || width < MIN_EDGE {
        return Err(Error::Shape(format!(
            "image must be at least {MIN_EDGE}x{MIN_EDGE}, got {height}x{width}"
        )));
    }
    if channels == 0 {
        return Err(Error::Shape("image needs at least one channel".into()));
    }
    Ok(())
}

/// Index into `0..n` for the half-sample symmetric extension
/// (`.. b a | a b c .. x y z | z y ..`).
#[inline]
pub(crate) fn reflect(idx: isize, n: usize) -> usize {
    let n = n as isize;
    let m = idx.rem_euclid(2 * n);
    (if m < n { m } else { 2 * n - 1 - m }) as usize
}

/// Index into `0..n` for the whole-sample symmetric extension
/// (`.. c b | a b c .. x y z | y x ..`), which has zero central
/// difference across the border.
#[inline]
pub(crate) fn reflect101(idx: isize, n: usize) -> usize {
    debug_assert!(n >= 2);
    let n = n as isize;
    let m = idx.rem_euclid(2 * n - 2);
    (if m < n { m } else { 2 * n - 2 - m }) as usize
}
