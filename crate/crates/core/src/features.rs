//! The canonical 37-dimensional per-pixel feature vector.
//!
//! | index  | feature                                                       |
//! |--------|---------------------------------------------------------------|
//! | 0, 1   | immediate and radial connectivity (live, from current labels) |
//! | 2..=11 | Hessian: det, Ixx, Ixy, Iyx, Iyy, l1, l2, ridge, modulus, trace |
//! | 12..=14| vesselness at scales 1..1, 1..2, 2..3                         |
//! | 15..=17| LoG 3x3, LoG 20x20, sharpen                                   |
//! | 18..=22| 7x7 mean, geometric mean, max, min, median                    |
//! | 23..=26| anisotropic diffusion, four configurations                    |
//! | 27..=32| erosion/dilation, six configurations                          |
//! | 33..=36| gradient magnitude: linear, Gaussian sigma 1, 2, 3            |

mod cache;

use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use cache::{read_samples, read_stack, write_samples, write_stack, write_stack_text};

use crate::connectivity::{ConnectivityConfig, ConnectivityNeighborhoods};
use crate::error::{Error, Result};
use crate::filters::{
    anisotropic_diffusion, frangi, gradient_features, hessian_features, laplacian_features,
    local_stats, morph_feature, DiffusionConfig, FrangiConfig, MorphConfig, Polarity, LOG_KERNELS,
    STATS_WINDOW,
};
use crate::raster::{BinaryMask, GrayImage, Pixel, Plane};
use crate::scalar::Scalar;

pub const FEATURE_COUNT: usize = 37;
pub const GREY_FEATURE_COUNT: usize = 35;
pub const CONNECTIVITY_COUNT: usize = FEATURE_COUNT - GREY_FEATURE_COUNT;

pub type FeatureVector = [f64; FEATURE_COUNT];

/// Feature families, used for grouping in importance ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureFamily {
    Connectivity,
    Hessian,
    Frangi,
    Laplacian,
    Sharpen,
    Stats,
    Diffusion,
    Morphology,
    Gradient,
}

impl FeatureFamily {
    pub const ALL: [Self; 9] = [
        Self::Connectivity,
        Self::Hessian,
        Self::Frangi,
        Self::Laplacian,
        Self::Sharpen,
        Self::Stats,
        Self::Diffusion,
        Self::Morphology,
        Self::Gradient,
    ];

    /// Indices of the family in the feature vector.
    pub fn indices(self) -> Range<usize> {
        match self {
            Self::Connectivity => 0..2,
            Self::Hessian => 2..12,
            Self::Frangi => 12..15,
            Self::Laplacian => 15..17,
            Self::Sharpen => 17..18,
            Self::Stats => 18..23,
            Self::Diffusion => 23..27,
            Self::Morphology => 27..33,
            Self::Gradient => 33..37,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Connectivity => "connectivity",
            Self::Hessian => "hessian",
            Self::Frangi => "frangi",
            Self::Laplacian => "laplacian",
            Self::Sharpen => "sharpen",
            Self::Stats => "stats",
            Self::Diffusion => "diffusion",
            Self::Morphology => "morphology",
            Self::Gradient => "gradient",
        }
    }
}

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "conn_immediate",
    "conn_radial",
    "hess_det",
    "hess_xx",
    "hess_xy",
    "hess_yx",
    "hess_yy",
    "hess_l1",
    "hess_l2",
    "hess_ridge",
    "hess_modulus",
    "hess_trace",
    "frangi_1_1",
    "frangi_1_2",
    "frangi_2_3",
    "log_3",
    "log_20",
    "sharpen",
    "mean",
    "geo_mean",
    "max",
    "min",
    "median",
    "diffusion_10_3_0.5",
    "diffusion_20_4_0.3",
    "diffusion_40_6_0.8",
    "diffusion_35_3_2",
    "morph_e1_d1_cross",
    "morph_e3_d1_cross",
    "morph_e1_d3_cross",
    "morph_e1_d1_disc",
    "morph_e3_d1_disc",
    "morph_e1_d3_disc",
    "grad_linear",
    "grad_gauss_1",
    "grad_gauss_2",
    "grad_gauss_3",
];

/// Parameters of the grey-level filter bank. Only the vesselness polarity
/// varies between modalities; every other parameter is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FilterBank {
    pub polarity: Polarity,
}

impl FilterBank {
    pub fn new(polarity: Polarity) -> Self {
        Self { polarity }
    }

    pub fn frangi_configs(&self) -> [FrangiConfig; 3] {
        FrangiConfig::feature_set(self.polarity)
    }

    /// Smallest image side the bank can process.
    pub fn min_side(&self) -> usize {
        LOG_KERNELS[1].0
    }
}

/// The 35 precomputed grey-level planes of one image, in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStack<T> {
    width: usize,
    height: usize,
    planes: Vec<Plane<T>>,
}

impl<T: Scalar> FeatureStack<T> {
    pub fn from_planes(planes: Vec<Plane<T>>) -> Result<Self> {
        if planes.len() != GREY_FEATURE_COUNT {
            return Err(Error::InvalidConfig(format!(
                "feature stack needs {GREY_FEATURE_COUNT} planes, got {}",
                planes.len()
            )));
        }
        let dims = planes[0].dims();
        if let Some(p) = planes.iter().find(|p| p.dims() != dims) {
            return Err(Error::DimensionMismatch {
                expected: dims,
                found: p.dims(),
            });
        }
        Ok(Self {
            width: dims.0,
            height: dims.1,
            planes,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn planes(&self) -> &[Plane<T>] {
        &self.planes
    }

    /// Plane holding feature-vector index `index` (2..37).
    pub fn plane(&self, index: usize) -> &Plane<T> {
        &self.planes[index - CONNECTIVITY_COUNT]
    }

    /// Writes the grey-level part of the vector (indices 2..37) for `pixel`.
    #[inline]
    pub fn fill_grey(&self, pixel: Pixel, out: &mut FeatureVector) {
        let i = pixel.0 * self.width + pixel.1;
        for (slot, plane) in out[CONNECTIVITY_COUNT..].iter_mut().zip(&self.planes) {
            *slot = plane.data()[i].as_f64();
        }
    }

    /// Full vector with connectivity measured against `labels`.
    pub fn vector_at(
        &self,
        labels: &BinaryMask,
        pixel: Pixel,
        cfg: &ConnectivityConfig,
    ) -> Result<FeatureVector> {
        VectorBuilder::new(self, cfg)?.vector_at(labels, pixel)
    }
}

fn check_dims(expected: (usize, usize), found: (usize, usize)) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Computes all 35 grey-level planes. Families are evaluated in parallel;
/// each plane is computed sequentially, so results do not depend on thread count.
pub fn build_stack<T: Scalar>(image: &GrayImage, bank: &FilterBank) -> Result<FeatureStack<T>> {
    let min = bank.min_side();
    if image.width() < min || image.height() < min {
        return Err(Error::ImageTooSmall {
            width: image.width(),
            height: image.height(),
            min,
        });
    }
    let frangi_cfgs = bank.frangi_configs();

    let ((hessian, (frangi_planes, laplacian)), ((stats, gradient), (diffusion, morphology))) =
        rayon::join(
            || {
                rayon::join(
                    || hessian_features::<T>(image),
                    || {
                        let f: Result<Vec<_>> =
                            frangi_cfgs.iter().map(|c| frangi::<T>(image, c)).collect();
                        (f, laplacian_features::<T>(image))
                    },
                )
            },
            || {
                rayon::join(
                    || (local_stats::<T>(image, STATS_WINDOW), gradient_features::<T>(image)),
                    || {
                        rayon::join(
                            || -> Result<Vec<_>> {
                                DiffusionConfig::FEATURE_SET
                                    .iter()
                                    .map(|c| anisotropic_diffusion::<T>(image, c))
                                    .collect()
                            },
                            || -> Result<Vec<_>> {
                                MorphConfig::FEATURE_SET
                                    .iter()
                                    .map(|c| morph_feature::<T>(image, c))
                                    .collect()
                            },
                        )
                    },
                )
            },
        );

    let mut planes = Vec::with_capacity(GREY_FEATURE_COUNT);
    planes.extend(hessian);
    planes.extend(frangi_planes?);
    planes.extend(laplacian?);
    planes.extend(stats?);
    planes.extend(diffusion?);
    planes.extend(morphology?);
    planes.extend(gradient);
    FeatureStack::from_planes(planes)
}

/// Assembles feature vectors for one stack with precomputed neighbourhoods.
#[derive(Debug, Clone)]
pub struct VectorBuilder<'a, T> {
    stack: &'a FeatureStack<T>,
    hoods: ConnectivityNeighborhoods,
    cfg: ConnectivityConfig,
}

impl<'a, T: Scalar> VectorBuilder<'a, T> {
    pub fn new(stack: &'a FeatureStack<T>, cfg: &ConnectivityConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            stack,
            hoods: ConnectivityNeighborhoods::new(stack.dims(), cfg),
            cfg: *cfg,
        })
    }

    pub fn neighborhoods(&self) -> &ConnectivityNeighborhoods {
        &self.hoods
    }

    pub fn vector_at(&self, labels: &BinaryMask, pixel: Pixel) -> Result<FeatureVector> {
        check_dims(self.stack.dims(), labels.dims())?;
        let conn = self.hoods.features(labels, pixel, &self.cfg)?;
        let mut v = [0.0; FEATURE_COUNT];
        v[..CONNECTIVITY_COUNT].copy_from_slice(&conn);
        self.stack.fill_grey(pixel, &mut v);
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledSample {
    pub vector: FeatureVector,
    pub vessel: bool,
}

/// Which eligible pixels become training samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    #[default]
    All,
    /// Every n-th eligible pixel in row-major order, starting with the first.
    EveryNth(usize),
    /// At most `n` pixels drawn uniformly without replacement, kept in row-major order.
    Cap { n: usize, seed: u64 },
}

fn select_pixels(eligible: Vec<Pixel>, sampling: Sampling) -> Result<Vec<Pixel>> {
    Ok(match sampling {
        Sampling::All => eligible,
        Sampling::EveryNth(0) => {
            return Err(Error::InvalidConfig("sampling stride must be positive".into()))
        }
        Sampling::EveryNth(n) => eligible.into_iter().step_by(n).collect(),
        Sampling::Cap { n, .. } if n >= eligible.len() => eligible,
        Sampling::Cap { n, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut picked = rand::seq::index::sample(&mut rng, eligible.len(), n).into_vec();
            picked.sort_unstable();
            picked.into_iter().map(|i| eligible[i]).collect()
        }
    })
}

/// Labelled samples from a precomputed stack. Connectivity is measured
/// against the ground truth itself.
pub fn samples_from_stack<T: Scalar>(
    stack: &FeatureStack<T>,
    ground_truth: &BinaryMask,
    fov: Option<&BinaryMask>,
    cfg: &ConnectivityConfig,
    sampling: Sampling,
) -> Result<Vec<LabeledSample>> {
    check_dims(stack.dims(), ground_truth.dims())?;
    if let Some(f) = fov {
        check_dims(stack.dims(), f.dims())?;
    }
    let eligible = match fov {
        Some(f) => f.pixels(),
        None => BinaryMask::full(stack.width(), stack.height()).pixels(),
    };
    let builder = VectorBuilder::new(stack, cfg)?;
    select_pixels(eligible, sampling)?
        .into_iter()
        .map(|p| {
            Ok(LabeledSample {
                vector: builder.vector_at(ground_truth, p)?,
                vessel: ground_truth.get(p.0, p.1),
            })
        })
        .collect()
}

/// Builds the stack of `image` and extracts labelled samples from it.
pub fn training_set(
    image: &GrayImage,
    ground_truth: &BinaryMask,
    fov: Option<&BinaryMask>,
    bank: &FilterBank,
    cfg: &ConnectivityConfig,
    sampling: Sampling,
) -> Result<Vec<LabeledSample>> {
    check_dims(image.dims(), ground_truth.dims())?;
    let stack = build_stack::<f64>(image, bank)?;
    samples_from_stack(&stack, ground_truth, fov, cfg, sampling)
}
