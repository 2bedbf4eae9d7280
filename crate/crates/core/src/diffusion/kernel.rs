//! Sampled Gaussian kernels and separable convolution with mirrored borders.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::image::{reflect, Image};

/// Odd-length, symmetric, normalized Gaussian kernel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Kernel1D {
    sigma: f64,
    weights: Vec<f64>,
}

impl Kernel1D {
    pub fn gaussian(sigma: f64, size: usize) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::param("sigma", format!("must be > 0, got {sigma}")));
        }
        if size < 3 || size % 2 == 0 {
            return Err(Error::param(
                "size",
                format!("kernel size must be odd and >= 3, got {size}"),
            ));
        }
        let center = (size / 2) as f64;
        let mut weights: Vec<f64> = (0..size)
            .map(|i| {
                let d = i as f64 - center;
                (-d * d / (2.0 * sigma * sigma)).exp()
            })
            .collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        // exact mirror symmetry regardless of summation rounding
        for k in 0..size / 2 {
            weights[size - 1 - k] = weights[k];
        }
        Ok(Self { sigma, weights })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn radius(&self) -> usize {
        self.weights.len() / 2
    }
}

/// `K * u`, per channel: a horizontal pass followed by a vertical pass.
pub fn convolve_gaussian(img: &Image, kernel: &Kernel1D) -> Image {
    let (h, w, ch) = img.shape();
    let mut out = Vec::with_capacity(img.as_slice().len());
    let mut scratch = vec![0.0; h * w];
    for c in 0..ch {
        let start = out.len();
        out.resize(start + h * w, 0.0);
        convolve_plane(img.plane(c), h, w, kernel, &mut scratch, &mut out[start..]);
    }
    Image::from_parts(h, w, ch, out)
}

/// Separable convolution of one `h x w` plane into `out`. `scratch` holds the
/// horizontal pass and must have `h * w` elements.
pub(crate) fn convolve_plane(
    src: &[f64],
    h: usize,
    w: usize,
    kernel: &Kernel1D,
    scratch: &mut [f64],
    out: &mut [f64],
) {
    let weights = kernel.weights();
    let r = kernel.radius() as isize;

    // column offsets are identical for every row
    let cols: Vec<Vec<usize>> = (0..w as isize)
        .map(|j| (-r..=r).map(|d| reflect(j + d, w)).collect())
        .collect();
    for i in 0..h {
        let row = &src[i * w..(i + 1) * w];
        for (j, taps) in cols.iter().enumerate() {
            scratch[i * w + j] = taps.iter().zip(weights).map(|(&t, k)| k * row[t]).sum();
        }
    }

    for i in 0..h as isize {
        let dst = &mut out[i as usize * w..(i as usize + 1) * w];
        dst.fill(0.0);
        for (d, k) in (-r..=r).zip(weights) {
            let src_row = reflect(i + d, h) * w;
            for (o, s) in dst.iter_mut().zip(&scratch[src_row..src_row + w]) {
                *o += k * s;
            }
        }
    }
}
