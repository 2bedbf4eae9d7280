//! Edge enhancing diffusion with orientation smoothing.
//!
//! One step of the scheme is
//!
//! ```text
//! u_s = K_presmooth * u
//! J   = K_orient * sum_c grad(u_s,c) grad(u_s,c)^T
//! D   = g(mu_1) v_1 v_1^T + v_2 v_2^T        (eigenpairs of J, g = Charbonnier)
//! u  <- u + tau * div(D grad u)
//! ```

pub mod gradient;
pub mod kernel;
pub mod run;
pub mod stencil;
pub mod tensor;

pub use gradient::{spatial_gradient, GradientField};
pub use kernel::{convolve_gaussian, Kernel1D};
pub use run::{eed_run, Diffuser, RunOutcome, Snapshot};
pub use stencil::{dirichlet_energy, divergence_step, energy, MAX_TAU};
pub use tensor::{
    charbonnier, diffusion_tensor, diffusion_tensor_at, smooth_tensor, structure_tensor, Eigen2,
    Sym2, TensorField,
};
