//! The multi-step diffusion driver.

use std::ops::ControlFlow;

use crate::diffusion::gradient::spatial_gradient;
use crate::diffusion::kernel::{convolve_gaussian, Kernel1D};
use crate::diffusion::stencil::divergence_step;
use crate::diffusion::tensor::{diffusion_tensor, smooth_tensor, structure_tensor, TensorField};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::params::DiffusionParams;

/// One emitted intermediate image.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub image: Image,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub snapshots: Vec<Snapshot>,
    /// Number of update steps actually performed.
    pub steps_done: usize,
    pub cancelled: bool,
}

/// Precomputed kernels for one parameter set.
#[derive(Debug, Clone)]
pub struct Diffuser {
    params: DiffusionParams,
    presmooth: Kernel1D,
    orient: Kernel1D,
}

impl Diffuser {
    pub fn new(params: &DiffusionParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params: params.clone(),
            presmooth: Kernel1D::gaussian(params.presmooth_sigma, params.presmooth_kernel)?,
            orient: Kernel1D::gaussian(params.orient_sigma, params.orient_kernel)?,
        })
    }

    pub fn params(&self) -> &DiffusionParams {
        &self.params
    }

    /// `g(K * (grad u_sigma grad u_sigma^T))` for the current state.
    pub fn diffusion_tensor(&self, u: &Image) -> TensorField {
        let smoothed = convolve_gaussian(u, &self.presmooth);
        let j = smooth_tensor(&structure_tensor(&spatial_gradient(&smoothed)), &self.orient);
        diffusion_tensor(&j, self.params.kappa).expect("kappa validated on construction")
    }

    /// One explicit update; also returns the tensor field it used.
    pub fn step(&self, u: &Image) -> (Image, TensorField) {
        let d = self.diffusion_tensor(u);
        let next = divergence_step(u, &d, self.params.tau).expect("tau validated on construction");
        (next, d)
    }

    /// Runs all steps, calling `observe(step, &u)` after each one. Returning
    /// `ControlFlow::Break` from the observer stops the run after that step.
    pub fn run_with(
        &self,
        img: &Image,
        mut observe: impl FnMut(usize, &Image) -> ControlFlow<()>,
    ) -> Result<RunOutcome> {
        let wanted = self.params.snapshot_steps();
        let mut next_snap = wanted.iter().copied().peekable();
        let mut snapshots = Vec::with_capacity(wanted.len());
        let mut u = img.clone();

        if next_snap.peek() == Some(&0) {
            next_snap.next();
            snapshots.push(Snapshot {
                step: 0,
                image: u.clone(),
            });
        }
        for step in 1..=self.params.steps {
            u = self.step(&u).0;
            if let Some((row, col, channel)) = u.find_non_finite() {
                return Err(Error::NonFinite {
                    step,
                    row,
                    col,
                    channel,
                });
            }
            if next_snap.peek() == Some(&step) {
                next_snap.next();
                snapshots.push(Snapshot {
                    step,
                    image: u.clone(),
                });
            }
            if observe(step, &u).is_break() {
                return Ok(RunOutcome {
                    snapshots,
                    steps_done: step,
                    cancelled: step < self.params.steps,
                });
            }
        }
        Ok(RunOutcome {
            snapshots,
            steps_done: self.params.steps,
            cancelled: false,
        })
    }
}

/// Diffuses `img` for `params.steps` steps and returns the requested snapshots
/// (or the final image when none are listed).
pub fn eed_run(img: &Image, params: &DiffusionParams) -> Result<Vec<Snapshot>> {
    Ok(Diffuser::new(params)?
        .run_with(img, |_, _| ControlFlow::Continue(()))?
        .snapshots)
}
