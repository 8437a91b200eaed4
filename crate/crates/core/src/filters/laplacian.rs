use super::kernel::{convolve, Kernel};
use crate::error::{Error, Result};
use crate::raster::{GrayImage, Plane};
use crate::scalar::Scalar;

/// (size, sigma) of the two Laplacian-of-Gaussian kernels.
pub const LOG_KERNELS: [(usize, f64); 2] = [(3, 0.5), (20, 3.0)];

/// Laplacian of Gaussian sampled on a `size x size` grid around its geometric
/// centre and shifted to zero sum.
pub fn log_kernel<T: Scalar>(size: usize, sigma: f64) -> Kernel<T> {
    let centre = (size as f64 - 1.0) / 2.0;
    let s2 = sigma * sigma;
    let norm = -1.0 / (std::f64::consts::PI * s2 * s2);
    let mut coeffs = Vec::with_capacity(size * size);
    for r in 0..size {
        for c in 0..size {
            let (y, x) = (r as f64 - centre, c as f64 - centre);
            let q = (x * x + y * y) / (2.0 * s2);
            coeffs.push(T::of(norm * (1.0 - q) * (-q).exp()));
        }
    }
    Kernel::new(size, size, coeffs).expect("square kernel").zero_mean()
}

/// 3x3 sharpening kernel: 9 at the centre, -1 around it.
pub fn sharpen_kernel<T: Scalar>() -> Kernel<T> {
    Kernel::from_rows(&[&[-1.0, -1.0, -1.0], &[-1.0, 9.0, -1.0], &[-1.0, -1.0, -1.0]])
        .expect("3x3")
}

/// LoG 3x3, LoG 20x20 and sharpen responses.
pub fn laplacian_features<T: Scalar>(image: &GrayImage) -> Result<[Plane<T>; 3]> {
    let min = LOG_KERNELS[1].0;
    if image.width() < min || image.height() < min {
        return Err(Error::ImageTooSmall {
            width: image.width(),
            height: image.height(),
            min,
        });
    }
    let plane = image.to_plane::<T>();
    let [(n0, s0), (n1, s1)] = LOG_KERNELS;
    Ok([
        convolve(&plane, &log_kernel(n0, s0))?,
        convolve(&plane, &log_kernel(n1, s1))?,
        convolve(&plane, &sharpen_kernel())?,
    ])
}
