//! Retinal vessel segmentation by region growing driven by a pixel
//! classifier, with connectivity features that follow the evolving labelling.
//!
//! The pipeline: [`features::build_stack`] computes 35 grey-level planes,
//! [`forest::train`] fits a random forest on labelled pixels,
//! [`growseg::select_seeds`] picks seeds from the largest vesselness
//! component, and [`growseg::segment`] grows the vessel set outward, scoring
//! each frontier pixel with connectivity measured against the labels so far.
//! [`harness`] evaluates masks and score maps and runs whole datasets.

pub mod connectivity;
pub mod error;
pub mod features;
pub mod filters;
pub mod forest;
pub mod growseg;
pub mod harness;
pub mod raster;
mod scalar;
pub mod synthetic;

pub use error::{Error, ErrorClass, Result};
pub use raster::{BinaryMask, GrayImage, Pixel, Plane};
pub use scalar::Scalar;

/// Response plane in double precision.
pub type FloatPlane = Plane<f64>;
/// Response plane in single precision.
pub type FloatPlane32 = Plane<f32>;
/// Double precision feature stack, the default for training and inference.
pub type FeatureStack = features::FeatureStack<f64>;
/// Single precision feature stack, matching the on-disk cache.
pub type FeatureStack32 = features::FeatureStack<f32>;
/// Double precision Hessian field.
pub type HessianField = filters::HessianField<f64>;
