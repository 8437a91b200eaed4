use super::kernel::{gaussian_derivative_kernel, gaussian_kernel, separable};
use crate::error::{Error, Result};
use crate::raster::{GrayImage, Plane};
use crate::scalar::Scalar;

/// Scale of the standalone Hessian features.
pub const HESSIAN_SIGMA: f64 = 1.0;

/// Gaussian second derivatives of an image and their eigenvalues.
///
/// `lambda1` is the eigenvalue of smaller magnitude: `|lambda1| <= |lambda2|`.
#[derive(Debug, Clone)]
pub struct HessianField<T> {
    pub ixx: Plane<T>,
    pub ixy: Plane<T>,
    pub iyy: Plane<T>,
    pub lambda1: Plane<T>,
    pub lambda2: Plane<T>,
}

/// Eigenvalues of `[[a, b], [b, c]]`, ordered by magnitude.
#[inline]
pub fn sorted_eigenvalues<T: Scalar>(a: T, b: T, c: T) -> (T, T) {
    let two = T::of(2.0);
    let mean = (a + c) / two;
    let dev = ((a - c) / two).hypot(b);
    let (e1, e2) = (mean + dev, mean - dev);
    if e1.abs() <= e2.abs() {
        (e1, e2)
    } else {
        (e2, e1)
    }
}

impl<T: Scalar> HessianField<T> {
    /// Hessian of `plane` at scale `sigma`, multiplied by `scale_factor`.
    pub fn compute(plane: &Plane<T>, sigma: f64, scale_factor: f64) -> Self {
        let g = gaussian_kernel::<T>(sigma);
        let d1 = gaussian_derivative_kernel::<T>(sigma, 1);
        let d2 = gaussian_derivative_kernel::<T>(sigma, 2);
        let s = T::of(scale_factor);
        let scale = |p: Plane<T>| if scale_factor == 1.0 { p } else { p.map(|v| v * s) };

        let ixx = scale(separable(plane, &d2, &g));
        let iyy = scale(separable(plane, &g, &d2));
        let ixy = scale(separable(plane, &d1, &d1));

        let (w, h) = plane.dims();
        let mut l1 = Vec::with_capacity(w * h);
        let mut l2 = Vec::with_capacity(w * h);
        for i in 0..w * h {
            let (a, b) = sorted_eigenvalues(ixx.data()[i], ixy.data()[i], iyy.data()[i]);
            l1.push(a);
            l2.push(b);
        }
        Self {
            ixx,
            ixy,
            iyy,
            lambda1: Plane::new(w, h, l1).expect("dims"),
            lambda2: Plane::new(w, h, l2).expect("dims"),
        }
    }
}

/// The ten Hessian feature planes at unit scale, in order: determinant,
/// Ixx, Ixy, Iyx, Iyy, lambda1, lambda2, ridge strength `(l1^2 - l2^2)^2`,
/// Frobenius modulus, trace.
pub fn hessian_features<T: Scalar>(image: &GrayImage) -> [Plane<T>; 10] {
    let f = HessianField::compute(&image.to_plane::<T>(), HESSIAN_SIGMA, 1.0);
    let two = T::of(2.0);
    let det = f.ixx.zip_map(&f.iyy, |a, c| a * c).zip_map(&f.ixy, |ac, b| ac - b * b);
    let ridge = f.lambda1.zip_map(&f.lambda2, |a, b| {
        let d = a * a - b * b;
        d * d
    });
    let modulus = f
        .ixx
        .zip_map(&f.iyy, |a, c| a * a + c * c)
        .zip_map(&f.ixy, |s, b| (s + two * b * b).sqrt());
    let trace = f.ixx.zip_map(&f.iyy, |a, c| a + c);
    [
        det,
        f.ixx.clone(),
        f.ixy.clone(),
        f.ixy,
        f.iyy,
        f.lambda1,
        f.lambda2,
        ridge,
        modulus,
        trace,
    ]
}

/// Which vessels the vesselness filter responds to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Polarity {
    /// Dark vessels on a bright background (fundus green channel).
    #[default]
    DarkOnBright,
    /// Bright vessels on a dark background (angiography, SLO).
    BrightOnDark,
}

impl std::str::FromStr for Polarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dark-on-bright" => Ok(Polarity::DarkOnBright),
            "bright-on-dark" => Ok(Polarity::BrightOnDark),
            other => Err(Error::InvalidConfig(format!("unknown polarity '{other}'"))),
        }
    }
}

impl std::fmt::Display for Polarity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Polarity::DarkOnBright => "dark-on-bright",
            Polarity::BrightOnDark => "bright-on-dark",
        })
    }
}

/// Multiscale vesselness parameters. `beta1` weighs the blob ratio
/// `lambda1 / lambda2`, `beta2` the structureness `sqrt(l1^2 + l2^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrangiConfig {
    pub sigma_start: f64,
    pub sigma_end: f64,
    pub sigma_step: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub polarity: Polarity,
}

impl FrangiConfig {
    pub fn new(sigma_start: f64, sigma_end: f64, polarity: Polarity) -> Self {
        Self {
            sigma_start,
            sigma_end,
            sigma_step: 1.0,
            beta1: 2.0,
            beta2: 1.0,
            polarity,
        }
    }

    /// The three vesselness feature configurations: scales 1..1, 1..2, 2..3.
    pub fn feature_set(polarity: Polarity) -> [Self; 3] {
        [
            Self::new(1.0, 1.0, polarity),
            Self::new(1.0, 2.0, polarity),
            Self::new(2.0, 3.0, polarity),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.sigma_start > 0.0
            && self.sigma_start <= self.sigma_end
            && self.sigma_step > 0.0
            && self.beta1 > 0.0
            && self.beta2 > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("frangi parameters {self:?}")))
        }
    }

    pub fn scales(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut k = 0;
        loop {
            let s = self.sigma_start + k as f64 * self.sigma_step;
            if s > self.sigma_end + 1e-9 {
                break;
            }
            out.push(s);
            k += 1;
        }
        out
    }
}

/// Vesselness of one eigenvalue pair (`|l1| <= |l2|`).
#[inline]
pub fn vesselness<T: Scalar>(l1: T, l2: T, cfg: &FrangiConfig) -> T {
    let wrong_sign = match cfg.polarity {
        Polarity::DarkOnBright => l2 <= T::zero(),
        Polarity::BrightOnDark => l2 >= T::zero(),
    };
    if wrong_sign {
        return T::zero();
    }
    let two = T::of(2.0);
    let rb = l1 / l2;
    let s2 = l1 * l1 + l2 * l2;
    let b1 = T::of(cfg.beta1);
    let b2 = T::of(cfg.beta2);
    let blob = (-(rb * rb) / (two * b1 * b1)).exp();
    let structure = T::one() - (-s2 / (two * b2 * b2)).exp();
    blob * structure
}

/// Maximum vesselness over the configured scales, using the
/// sigma^2-normalised Hessian at each scale. Values lie in `[0, 1]`.
pub fn frangi<T: Scalar>(image: &GrayImage, cfg: &FrangiConfig) -> Result<Plane<T>> {
    cfg.validate()?;
    let plane = image.to_plane::<T>();
    let (w, h) = plane.dims();
    let mut best = Plane::<T>::zeros(w, h);
    for sigma in cfg.scales() {
        let field = HessianField::compute(&plane, sigma, sigma * sigma);
        for (i, out) in best.data_mut().iter_mut().enumerate() {
            let v = vesselness(field.lambda1.data()[i], field.lambda2.data()[i], cfg);
            if v > *out {
                *out = v;
            }
        }
    }
    Ok(best)
}
