//! Live connectivity features.
//!
//! A pixel's connectivity evidence is a function of `n`, the number of pixels
//! in a fixed neighbourhood of size `K` that are currently labelled vessel.
//! Two normalisations of that count are supported:
//!
//! * exponential: `P = (e^n - 1) / (e^K - 1)`
//! * fraction: `P = n / K`
//!
//! The binary feature fires when `P > t_c`. Pixels outside the image count as
//! non-vessel and never shrink `K`.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, Pixel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProbabilityMode {
    Exponential,
    #[default]
    Fraction,
}

impl FromStr for ProbabilityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exponential" => Ok(Self::Exponential),
            "fraction" => Ok(Self::Fraction),
            other => Err(Error::InvalidConfig(format!("unknown connectivity mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeatureForm {
    /// 1 when the probability exceeds the threshold, else 0.
    #[default]
    Binary,
    /// The probability itself.
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectivityConfig {
    /// Probability threshold of the binary feature.
    pub t_c: f64,
    /// Radius of the radial neighbourhood as a fraction of the image diagonal.
    pub radial_fraction: f64,
    pub mode: ProbabilityMode,
    pub form: FeatureForm,
}

impl Default for ConnectivityConfig {
    fn default() -> Self {
        Self {
            t_c: 0.05,
            radial_fraction: 0.007,
            mode: ProbabilityMode::Fraction,
            form: FeatureForm::Binary,
        }
    }
}

impl ConnectivityConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_c > 0.0 && self.t_c < 1.0) {
            return Err(Error::InvalidConfig(format!("t_c = {} not in (0, 1)", self.t_c)));
        }
        if !(self.radial_fraction > 0.0 && self.radial_fraction < 0.5) {
            return Err(Error::InvalidConfig(format!(
                "radial fraction {} not in (0, 0.5)",
                self.radial_fraction
            )));
        }
        Ok(())
    }

    /// Radius of the radial neighbourhood for an image of the given size.
    pub fn radial_radius(&self, width: usize, height: usize) -> usize {
        let diag = ((width * width + height * height) as f64).sqrt();
        ((self.radial_fraction * diag).round() as usize).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeighborhoodKind {
    /// The 8 pixels at Chebyshev distance 1.
    Immediate,
    /// Every pixel within the radial radius (Euclidean).
    Radial,
}

/// Offsets of a connectivity neighbourhood, `(0, 0)` excluded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhood {
    offsets: Vec<(isize, isize)>,
}

impl Neighborhood {
    pub fn immediate() -> Self {
        let offsets = (-1..=1)
            .flat_map(|dr| (-1..=1).map(move |dc| (dr, dc)))
            .filter(|&o| o != (0, 0))
            .collect();
        Self { offsets }
    }

    pub fn disc(radius: usize) -> Self {
        let r = radius as isize;
        let offsets = (-r..=r)
            .flat_map(|dr| (-r..=r).map(move |dc| (dr, dc)))
            .filter(|&(dr, dc)| (dr, dc) != (0, 0) && dr * dr + dc * dc <= r * r)
            .collect();
        Self { offsets }
    }

    pub fn new(kind: NeighborhoodKind, dims: (usize, usize), cfg: &ConnectivityConfig) -> Self {
        match kind {
            NeighborhoodKind::Immediate => Self::immediate(),
            NeighborhoodKind::Radial => Self::disc(cfg.radial_radius(dims.0, dims.1)),
        }
    }

    pub fn offsets(&self) -> &[(isize, isize)] {
        &self.offsets
    }

    /// Neighbourhood size `K`.
    pub fn size(&self) -> usize {
        self.offsets.len()
    }

    /// Number of vessel-labelled neighbours of `pixel`.
    pub fn count_vessels(&self, labels: &BinaryMask, pixel: Pixel) -> Result<usize> {
        check_bounds(labels, pixel)?;
        let (r, c) = (pixel.0 as isize, pixel.1 as isize);
        Ok(self
            .offsets
            .iter()
            .filter(|&&(dr, dc)| labels.get_or_false(r + dr, c + dc))
            .count())
    }
}

fn check_bounds(labels: &BinaryMask, (row, col): Pixel) -> Result<()> {
    if row >= labels.height() || col >= labels.width() {
        return Err(Error::OutOfBounds {
            row,
            col,
            width: labels.width(),
            height: labels.height(),
        });
    }
    Ok(())
}

/// Probability from a vessel count `n` out of `k` neighbours.
pub fn probability_from_count(n: usize, k: usize, mode: ProbabilityMode) -> f64 {
    if n == 0 || k == 0 {
        return 0.0;
    }
    if n == k {
        return 1.0;
    }
    match mode {
        ProbabilityMode::Fraction => n as f64 / k as f64,
        // (e^n - 1) / (e^k - 1) == e^(n - k) * (1 - e^-n) / (1 - e^-k), stable for large k
        ProbabilityMode::Exponential => {
            ((n as f64 - k as f64).exp() * (-(-(n as f64)).exp_m1())) / (-(-(k as f64)).exp_m1())
        }
    }
}

pub fn vessel_probability(
    labels: &BinaryMask,
    pixel: Pixel,
    hood: &Neighborhood,
    mode: ProbabilityMode,
) -> Result<f64> {
    let n = hood.count_vessels(labels, pixel)?;
    Ok(probability_from_count(n, hood.size(), mode))
}

/// Feature value from a vessel count.
pub fn feature_from_count(n: usize, k: usize, cfg: &ConnectivityConfig) -> f64 {
    let p = probability_from_count(n, k, cfg.mode);
    match cfg.form {
        FeatureForm::Continuous => p,
        FeatureForm::Binary => {
            if p > cfg.t_c {
                1.0
            } else {
                0.0
            }
        }
    }
}

pub fn connectivity_feature(
    labels: &BinaryMask,
    pixel: Pixel,
    hood: &Neighborhood,
    cfg: &ConnectivityConfig,
) -> Result<f64> {
    let n = hood.count_vessels(labels, pixel)?;
    Ok(feature_from_count(n, hood.size(), cfg))
}

/// The immediate and radial neighbourhoods for one image size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectivityNeighborhoods {
    pub immediate: Neighborhood,
    pub radial: Neighborhood,
}

impl ConnectivityNeighborhoods {
    pub fn new(dims: (usize, usize), cfg: &ConnectivityConfig) -> Self {
        Self {
            immediate: Neighborhood::new(NeighborhoodKind::Immediate, dims, cfg),
            radial: Neighborhood::new(NeighborhoodKind::Radial, dims, cfg),
        }
    }

    /// `[immediate, radial]` feature values of `pixel` against `labels`.
    pub fn features(
        &self,
        labels: &BinaryMask,
        pixel: Pixel,
        cfg: &ConnectivityConfig,
    ) -> Result<[f64; 2]> {
        Ok([
            connectivity_feature(labels, pixel, &self.immediate, cfg)?,
            connectivity_feature(labels, pixel, &self.radial, cfg)?,
        ])
    }
}
