//! Central-difference image gradients.

use crate::image::{reflect101, Image};

/// Per-pixel, per-channel `(du/dx, du/dy)`, channel-planar like [`Image`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    height: usize,
    width: usize,
    channels: usize,
    dx: Vec<f64>,
    dy: Vec<f64>,
}

impl GradientField {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn at(&self, channel: usize, row: usize, col: usize) -> (f64, f64) {
        let k = (channel * self.height + row) * self.width + col;
        (self.dx[k], self.dy[k])
    }

    pub fn dx_plane(&self, channel: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.dx[channel * n..(channel + 1) * n]
    }

    pub fn dy_plane(&self, channel: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.dy[channel * n..(channel + 1) * n]
    }

    /// Euclidean norm of the gradient stacked over all channels.
    pub fn stacked_norm(&self, row: usize, col: usize) -> f64 {
        (0..self.channels)
            .map(|c| {
                let (gx, gy) = self.at(c, row, col);
                gx * gx + gy * gy
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Central differences; x runs along columns, y along rows. Borders use the
/// whole-sample mirror, so the derivative normal to the border is zero there.
pub fn spatial_gradient(img: &Image) -> GradientField {
    let (h, w, ch) = img.shape();
    let mut dx = Vec::with_capacity(h * w * ch);
    let mut dy = Vec::with_capacity(h * w * ch);
    for c in 0..ch {
        let u = img.plane(c);
        for i in 0..h {
            let up = reflect101(i as isize - 1, h) * w;
            let down = reflect101(i as isize + 1, h) * w;
            let row = i * w;
            for j in 0..w {
                let left = reflect101(j as isize - 1, w);
                let right = reflect101(j as isize + 1, w);
                dx.push(0.5 * (u[row + right] - u[row + left]));
                dy.push(0.5 * (u[down + j] - u[up + j]));
            }
        }
    }
    GradientField {
        height: h,
        width: w,
        channels: ch,
        dx,
        dy,
    }
}
