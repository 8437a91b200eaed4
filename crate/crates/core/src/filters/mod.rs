//! Grey-level feature filters.
//!
//! Every filter is a pure function of a [`GrayImage`] and is generic over the
//! floating point type of its output. Windows and convolutions use mirror
//! borders throughout.

mod diffusion;
mod gradient;
mod hessian;
pub mod kernel;
mod laplacian;
mod morphology;
mod stats;

pub use diffusion::{anisotropic_diffusion, DiffusionConfig};
pub use gradient::{gradient_features, GRADIENT_SIGMAS};
pub use hessian::{
    frangi, hessian_features, sorted_eigenvalues, vesselness, FrangiConfig, HessianField, Polarity,
    HESSIAN_SIGMA,
};
pub use kernel::{convolve, Kernel, Kernel1D};
pub use laplacian::{laplacian_features, log_kernel, sharpen_kernel, LOG_KERNELS};
pub use morphology::{dilate, erode, morph_feature, Element, MorphConfig, StructuringElement};
pub use stats::{local_stats, STATS_WINDOW};
