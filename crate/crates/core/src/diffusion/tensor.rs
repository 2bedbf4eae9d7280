//! Symmetric 2x2 tensor fields: structure tensors, their Gaussian-smoothed
//! orientation form, and the Charbonnier diffusion tensor built from them.

use crate::diffusion::gradient::GradientField;
use crate::diffusion::kernel::{convolve_plane, Kernel1D};
use crate::error::{Error, Result};

/// Symmetric matrix `[[a, b], [b, c]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sym2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Eigenpairs of a [`Sym2`], `major >= minor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigen2 {
    pub major: f64,
    pub minor: f64,
    /// Unit eigenvector of `major`; the minor one is its perpendicular.
    pub major_dir: (f64, f64),
}

impl Sym2 {
    pub const IDENTITY: Sym2 = Sym2 {
        a: 1.0,
        b: 0.0,
        c: 1.0,
    };

    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    /// Rank-one tensor `v v^T`.
    pub fn outer(x: f64, y: f64) -> Self {
        Self {
            a: x * x,
            b: x * y,
            c: y * y,
        }
    }

    pub fn det(&self) -> f64 {
        self.a * self.c - self.b * self.b
    }

    pub fn quadratic_form(&self, x: f64, y: f64) -> f64 {
        self.a * x * x + 2.0 * self.b * x * y + self.c * y * y
    }

    /// Closed-form eigendecomposition. When the eigenvalue gap is at most
    /// `1e-12 * max(major, 1)` the axes are returned as eigenvectors.
    pub fn eigen(&self) -> Eigen2 {
        let mean = 0.5 * (self.a + self.c);
        let half_diff = 0.5 * (self.a - self.c);
        let r = half_diff.hypot(self.b);
        let major = mean + r;
        let minor = mean - r;
        if 2.0 * r <= 1e-12 * major.max(1.0) {
            return Eigen2 {
                major,
                minor,
                major_dir: (1.0, 0.0),
            };
        }
        // pick the row of (A - major I) with the larger, cancellation-free entry
        let (x, y) = if half_diff >= 0.0 {
            (r + half_diff, self.b)
        } else {
            (self.b, r - half_diff)
        };
        let n = x.hypot(y);
        Eigen2 {
            major,
            minor,
            major_dir: (x / n, y / n),
        }
    }
}

/// Per-pixel [`Sym2`] field stored as three component planes.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    height: usize,
    width: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl TensorField {
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> Sym2) -> Self {
        let n = height * width;
        let (mut a, mut b, mut c) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for i in 0..height {
            for j in 0..width {
                let t = f(i, j);
                a.push(t.a);
                b.push(t.b);
                c.push(t.c);
            }
        }
        Self {
            height,
            width,
            a,
            b,
            c,
        }
    }

    pub fn uniform(height: usize, width: usize, t: Sym2) -> Self {
        let n = height * width;
        Self {
            height,
            width,
            a: vec![t.a; n],
            b: vec![t.b; n],
            c: vec![t.c; n],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> Sym2 {
        let k = row * self.width + col;
        Sym2 {
            a: self.a[k],
            b: self.b[k],
            c: self.c[k],
        }
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn iter(&self) -> impl Iterator<Item = Sym2> + '_ {
        self.a
            .iter()
            .zip(&self.b)
            .zip(&self.c)
            .map(|((&a, &b), &c)| Sym2 { a, b, c })
    }

    /// Smallest `det` over the field; PSD fields have this `>= 0` up to rounding.
    pub fn min_det(&self) -> f64 {
        self.iter().map(|t| t.det()).fold(f64::INFINITY, f64::min)
    }
}

/// Sum over channels of `grad u_c grad u_c^T`.
pub fn structure_tensor(g: &GradientField) -> TensorField {
    let n = g.height() * g.width();
    let (mut a, mut b, mut c) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for ch in 0..g.channels() {
        for (k, (&gx, &gy)) in g.dx_plane(ch).iter().zip(g.dy_plane(ch)).enumerate() {
            a[k] += gx * gx;
            b[k] += gx * gy;
            c[k] += gy * gy;
        }
    }
    TensorField {
        height: g.height(),
        width: g.width(),
        a,
        b,
        c,
    }
}

/// Component-wise Gaussian smoothing of a tensor field (orientation smoothing).
pub fn smooth_tensor(t: &TensorField, kernel: &Kernel1D) -> TensorField {
    let (h, w) = (t.height, t.width);
    let mut scratch = vec![0.0; h * w];
    let mut smooth = |src: &[f64]| {
        let mut out = vec![0.0; h * w];
        convolve_plane(src, h, w, kernel, &mut scratch, &mut out);
        out
    };
    TensorField {
        height: h,
        width: w,
        a: smooth(&t.a),
        b: smooth(&t.b),
        c: smooth(&t.c),
    }
}

/// Charbonnier diffusivity `1 / sqrt(1 + s / kappa^2)`.
pub fn charbonnier(s: f64, kappa: f64) -> Result<f64> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::param("kappa", format!("must be > 0, got {kappa}")));
    }
    if !(s >= 0.0) {
        return Err(Error::param("s", format!("must be >= 0, got {s}")));
    }
    Ok(charbonnier_unchecked(s, kappa))
}

#[inline]
pub(crate) fn charbonnier_unchecked(s: f64, kappa: f64) -> f64 {
    1.0 / (1.0 + s / (kappa * kappa)).sqrt()
}

/// Diffusion tensor for one structure tensor: the major eigenvalue is mapped
/// through the Charbonnier diffusivity, the minor direction keeps diffusivity 1.
pub fn diffusion_tensor_at(j: Sym2, kappa: f64) -> Sym2 {
    let e = j.eigen();
    // rounding can leave a PSD matrix with a slightly negative major eigenvalue
    let g = charbonnier_unchecked(e.major.max(0.0), kappa);
    let (x, y) = e.major_dir;
    let s = g - 1.0;
    Sym2 {
        a: 1.0 + s * x * x,
        b: s * x * y,
        c: 1.0 + s * y * y,
    }
}

/// Diffusion tensor field `g(J)` for a (smoothed) structure tensor field.
pub fn diffusion_tensor(j: &TensorField, kappa: f64) -> Result<TensorField> {
    charbonnier(0.0, kappa)?;
    Ok(TensorField::from_fn(j.height, j.width, |r, c| {
        diffusion_tensor_at(j.at(r, c), kappa)
    }))
}
