//! Explicit divergence-form update `u + tau * div(D grad u)` and the
//! quadratic energy it descends.
//!
//! Axial fluxes use arithmetic means of `a` (resp. `c`) at half points; the
//! mixed terms use centred differences. Borders reflect `u`, `a` and `c`
//! evenly and `b` oddly, which is how the off-diagonal entry of a tensor field
//! transforms under a mirror. With that choice every boundary flux cancels and
//! the per-channel mean is conserved exactly.

use crate::diffusion::gradient::spatial_gradient;
use crate::diffusion::tensor::{Sym2, TensorField};
use crate::error::{Error, Result};
use crate::image::{reflect, Image};

/// Largest admissible explicit step size.
pub const MAX_TAU: f64 = 0.25;

pub(crate) fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau > 0.0 && tau <= MAX_TAU {
        Ok(())
    } else {
        Err(Error::param(
            "tau",
            format!("must satisfy 0 < tau <= {MAX_TAU}, got {tau}"),
        ))
    }
}

pub fn divergence_step(u: &Image, d: &TensorField, tau: f64) -> Result<Image> {
    check_tau(tau)?;
    let (h, w, ch) = u.shape();
    if d.height() != h || d.width() != w {
        return Err(Error::Shape(format!(
            "tensor field {}x{} does not match image {h}x{w}",
            d.height(),
            d.width()
        )));
    }
    let mut out = Vec::with_capacity(h * w * ch);
    for c in 0..ch {
        let start = out.len();
        out.resize(start + h * w, 0.0);
        step_plane(u.plane(c), d, tau, h, w, &mut out[start..]);
    }
    Ok(Image::from_parts(h, w, ch, out))
}

fn step_plane(u: &[f64], d: &TensorField, tau: f64, h: usize, w: usize, out: &mut [f64]) {
    let (a, b, c) = (d.a(), d.b(), d.c());
    for i in 0..h {
        let row = i * w;
        let up = reflect(i as isize - 1, h) * w;
        let down = reflect(i as isize + 1, h) * w;
        for j in 0..w {
            let left = reflect(j as isize - 1, w);
            let right = reflect(j as isize + 1, w);
            let k = row + j;
            let centre = u[k];

            let a_right = 0.5 * (a[k] + a[row + right]);
            let a_left = 0.5 * (a[k] + a[row + left]);
            let c_down = 0.5 * (c[k] + c[down + j]);
            let c_up = 0.5 * (c[k] + c[up + j]);
            let axial = a_right * (u[row + right] - centre) - a_left * (centre - u[row + left])
                + c_down * (u[down + j] - centre)
                - c_up * (centre - u[up + j]);

            let b_right = if j + 1 == w { -b[k] } else { b[k + 1] };
            let b_left = if j == 0 { -b[k] } else { b[k - 1] };
            let b_down = if i + 1 == h { -b[k] } else { b[k + w] };
            let b_up = if i == 0 { -b[k] } else { b[k - w] };
            let mixed_x = b_right * (u[down + right] - u[up + right])
                - b_left * (u[down + left] - u[up + left]);
            let mixed_y = b_down * (u[down + right] - u[down + left])
                - b_up * (u[up + right] - u[up + left]);

            out[k] = centre + tau * (axial + 0.25 * (mixed_x + mixed_y));
        }
    }
}

/// `1/2 * sum over pixels and channels of grad u^T D grad u`, using the
/// central-difference gradient of `u` itself.
pub fn energy(u: &Image, d: &TensorField) -> Result<f64> {
    if d.height() != u.height() || d.width() != u.width() {
        return Err(Error::Shape(format!(
            "tensor field {}x{} does not match image {}x{}",
            d.height(),
            d.width(),
            u.height(),
            u.width()
        )));
    }
    Ok(quadratic_energy(u, |k| {
        Sym2::new(d.a()[k], d.b()[k], d.c()[k])
    }))
}

/// Discrete Dirichlet energy `1/2 * sum |grad u|^2`.
pub fn dirichlet_energy(u: &Image) -> f64 {
    quadratic_energy(u, |_| Sym2::IDENTITY)
}

fn quadratic_energy(u: &Image, tensor: impl Fn(usize) -> Sym2) -> f64 {
    let g = spatial_gradient(u);
    let mut total = 0.0;
    for c in 0..u.channels() {
        for (k, (&gx, &gy)) in g.dx_plane(c).iter().zip(g.dy_plane(c)).enumerate() {
            total += tensor(k).quadratic_form(gx, gy);
        }
    }
    0.5 * total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn impulse(n: usize) -> Image {
        Image::from_fn(n, n, 1, |_, i, j| if i == n / 2 && j == n / 2 { 1.0 } else { 0.0 }).unwrap()
    }

    #[test]
    fn constant_image_is_fixed() {
        let u = Image::filled(6, 5, 3, 0.4).unwrap();
        let d = TensorField::from_fn(6, 5, |i, j| Sym2::new(0.5 + 0.01 * i as f64, 0.1 * j as f64 - 0.2, 0.9));
        assert_eq!(divergence_step(&u, &d, 0.2).unwrap(), u);
    }

    #[test]
    fn identity_tensor_is_five_point_laplacian() {
        let tau = 0.2;
        let u = impulse(11);
        let d = TensorField::uniform(11, 11, Sym2::IDENTITY);
        let out = divergence_step(&u, &d, tau).unwrap();
        for i in 0..11usize {
            for j in 0..11usize {
                let expected = match (i.abs_diff(5), j.abs_diff(5)) {
                    (0, 0) => 1.0 - 4.0 * tau,
                    (1, 0) | (0, 1) => tau,
                    _ => 0.0,
                };
                assert_abs_diff_eq!(out.get(0, i, j), expected, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn rejects_tau_out_of_bounds() {
        let u = Image::filled(4, 4, 1, 0.0).unwrap();
        let d = TensorField::uniform(4, 4, Sym2::IDENTITY);
        for tau in [0.0, -0.1, 0.26, f64::NAN] {
            assert!(matches!(
                divergence_step(&u, &d, tau),
                Err(Error::Param { field: "tau", .. })
            ));
        }
        assert!(divergence_step(&u, &d, MAX_TAU).is_ok());
    }

    #[test]
    fn shape_mismatch() {
        let u = Image::filled(4, 4, 1, 0.0).unwrap();
        let d = TensorField::uniform(4, 5, Sym2::IDENTITY);
        assert!(divergence_step(&u, &d, 0.1).is_err());
        assert!(energy(&u, &d).is_err());
    }

    #[test]
    fn energy_of_constant_and_identity() {
        let u = Image::filled(5, 5, 2, 0.3).unwrap();
        assert_eq!(dirichlet_energy(&u), 0.0);
        // unit ramp in x: interior gradient (1, 0), borders have zero normal derivative
        let ramp = Image::from_fn(4, 5, 1, |_, _, j| j as f64).unwrap();
        let d = TensorField::uniform(4, 5, Sym2::IDENTITY);
        assert_abs_diff_eq!(energy(&ramp, &d).unwrap(), 0.5 * 4.0 * 3.0, epsilon = 1e-15);
        assert_eq!(energy(&ramp, &d).unwrap(), dirichlet_energy(&ramp));
    }
}
