//! Correlation kernels and the convolution primitives every filter builds on.
//!
//! Outputs are evaluated as `gain * x(p) + sum_k w_k * (x(p + o_k) - x(p))`,
//! which equals the plain weighted sum but is exactly `gain * c` on a constant
//! image. Derivative and zero-mean kernels carry `gain = 0`.

use crate::error::{Error, Result};
use crate::raster::{reflect, Plane};
use crate::scalar::Scalar;

/// Dense 2-D correlation kernel anchored at `anchor = (row, col)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel<T> {
    width: usize,
    height: usize,
    anchor: (usize, usize),
    coeffs: Vec<T>,
    gain: T,
}

impl<T: Scalar> Kernel<T> {
    /// Builds a kernel with the default anchor `(height / 2, width / 2)`: the
    /// centre of odd kernels, the lower-right cell of the central 2x2 block of
    /// even ones.
    pub fn new(width: usize, height: usize, coeffs: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 || coeffs.len() != width * height {
            return Err(Error::InvalidConfig(format!(
                "kernel {width}x{height} with {} coefficients",
                coeffs.len()
            )));
        }
        let gain = coeffs.iter().copied().sum();
        Ok(Self {
            width,
            height,
            anchor: (height / 2, width / 2),
            coeffs,
            gain,
        })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::InvalidConfig("ragged kernel rows".into()));
        }
        Self::new(
            width,
            height,
            rows.iter().flat_map(|r| r.iter().map(|&v| T::of(v))).collect(),
        )
    }

    /// Shifts the coefficients to sum to zero and pins the gain at exactly 0.
    pub fn zero_mean(mut self) -> Self {
        let mean = self.gain / T::of(self.coeffs.len() as f64);
        for c in &mut self.coeffs {
            *c = *c - mean;
        }
        self.gain = T::zero();
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn anchor(&self) -> (usize, usize) {
        self.anchor
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn gain(&self) -> T {
        self.gain
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> T {
        self.coeffs[row * self.width + col]
    }
}

/// 1-D correlation kernel with its anchor at `len / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel1D<T> {
    coeffs: Vec<T>,
    gain: T,
}

impl<T: Scalar> Kernel1D<T> {
    pub fn new(coeffs: Vec<T>, gain: T) -> Self {
        assert!(!coeffs.is_empty(), "empty 1-D kernel");
        Self { coeffs, gain }
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn anchor(&self) -> usize {
        self.coeffs.len() / 2
    }

    pub fn gain(&self) -> T {
        self.gain
    }

    /// Outer product `column x row` as a dense kernel, keeping the gain.
    pub fn outer(column: &Self, row: &Self) -> Kernel<T> {
        let (h, w) = (column.coeffs.len(), row.coeffs.len());
        let mut coeffs = Vec::with_capacity(w * h);
        for &a in &column.coeffs {
            for &b in &row.coeffs {
                coeffs.push(a * b);
            }
        }
        Kernel {
            width: w,
            height: h,
            anchor: (h / 2, w / 2),
            coeffs,
            gain: column.gain * row.gain,
        }
    }
}

/// Half-width of the sampled Gaussian kernels.
pub fn gaussian_radius(sigma: f64) -> usize {
    ((4.0 * sigma).ceil() as usize).max(1)
}

fn gaussian_samples(sigma: f64) -> (isize, Vec<f64>) {
    let r = gaussian_radius(sigma) as isize;
    let s2 = 2.0 * sigma * sigma;
    (r, (-r..=r).map(|i| (-((i * i) as f64) / s2).exp()).collect())
}

/// Sampled Gaussian normalised to unit sum.
pub fn gaussian_kernel<T: Scalar>(sigma: f64) -> Kernel1D<T> {
    let (_, g) = gaussian_samples(sigma);
    let total: f64 = g.iter().sum();
    Kernel1D::new(g.iter().map(|v| T::of(v / total)).collect(), T::one())
}

/// Sampled Gaussian derivative of order 1 or 2, scaled so that it returns the
/// exact derivative of linear (order 1) or quadratic (order 2) signals.
pub fn gaussian_derivative_kernel<T: Scalar>(sigma: f64, order: u8) -> Kernel1D<T> {
    let (r, g) = gaussian_samples(sigma);
    let xs = (-r..=r).map(|i| i as f64);
    let coeffs: Vec<f64> = match order {
        1 => {
            let raw: Vec<f64> = xs.zip(&g).map(|(x, g)| x * g).collect();
            let moment: f64 = (-r..=r).zip(&raw).map(|(i, k)| i as f64 * k).sum();
            raw.iter().map(|k| k / moment).collect()
        }
        2 => {
            let s2 = sigma * sigma;
            let raw: Vec<f64> = xs.zip(&g).map(|(x, g)| (x * x / (s2 * s2) - 1.0 / s2) * g).collect();
            let mean = raw.iter().sum::<f64>() / raw.len() as f64;
            let centred: Vec<f64> = raw.iter().map(|k| k - mean).collect();
            let moment: f64 = (-r..=r)
                .zip(&centred)
                .map(|(i, k)| 0.5 * (i * i) as f64 * k)
                .sum();
            centred.iter().map(|k| k / moment).collect()
        }
        _ => panic!("unsupported derivative order {order}"),
    };
    Kernel1D::new(coeffs.into_iter().map(T::of).collect(), T::zero())
}

/// Central difference `(x[i+1] - x[i-1]) / 2`.
pub fn central_difference_kernel<T: Scalar>() -> Kernel1D<T> {
    Kernel1D::new(vec![T::of(-0.5), T::zero(), T::of(0.5)], T::zero())
}

/// Discrete cross-correlation with mirror borders.
pub fn convolve<T: Scalar>(image: &Plane<T>, kernel: &Kernel<T>) -> Result<Plane<T>> {
    let (w, h) = image.dims();
    if kernel.width > w || kernel.height > h {
        return Err(Error::KernelLargerThanImage {
            kernel_w: kernel.width,
            kernel_h: kernel.height,
            width: w,
            height: h,
        });
    }
    let (ar, ac) = kernel.anchor;
    let pw = w + kernel.width - 1;
    let ph = h + kernel.height - 1;
    let mut padded = Vec::with_capacity(pw * ph);
    for pr in 0..ph {
        let r = reflect(pr as isize - ar as isize, h);
        for pc in 0..pw {
            padded.push(image.get(r, reflect(pc as isize - ac as isize, w)));
        }
    }

    let taps: Vec<(usize, T)> = (0..kernel.height)
        .flat_map(|kr| (0..kernel.width).map(move |kc| (kr, kc)))
        .filter_map(|(kr, kc)| {
            let v = kernel.at(kr, kc);
            (v != T::zero()).then_some((kr * pw + kc, v))
        })
        .collect();

    let mut out = Vec::with_capacity(w * h);
    for r in 0..h {
        for c in 0..w {
            let base = r * pw + c;
            let centre = padded[base + ar * pw + ac];
            let mut acc = T::zero();
            for &(off, k) in &taps {
                acc = acc + k * (padded[base + off] - centre);
            }
            out.push(kernel.gain * centre + acc);
        }
    }
    Plane::new(w, h, out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Along a row (varying column, the x direction).
    Horizontal,
    /// Along a column (varying row, the y direction).
    Vertical,
}

/// 1-D correlation along one axis with mirror borders; kernels longer than
/// the image fold repeatedly.
pub fn correlate_1d<T: Scalar>(image: &Plane<T>, kernel: &Kernel1D<T>, axis: Axis) -> Plane<T> {
    let (w, h) = image.dims();
    let a = kernel.anchor() as isize;
    let n = match axis {
        Axis::Horizontal => w,
        Axis::Vertical => h,
    };
    // index tables: for position i, tap j reads reflect(i + j - a)
    let len = kernel.coeffs.len();
    let table: Vec<usize> = (0..n)
        .flat_map(|i| (0..len).map(move |j| reflect(i as isize + j as isize - a, n)))
        .collect();
    let data = image.data();
    let mut out = vec![T::zero(); w * h];
    let mut line = vec![T::zero(); n];
    let lines = if axis == Axis::Horizontal { h } else { w };
    for l in 0..lines {
        for (i, v) in line.iter_mut().enumerate() {
            *v = match axis {
                Axis::Horizontal => data[l * w + i],
                Axis::Vertical => data[i * w + l],
            };
        }
        for i in 0..n {
            let centre = line[i];
            let idx = &table[i * len..(i + 1) * len];
            let mut acc = T::zero();
            for (&k, &src) in kernel.coeffs.iter().zip(idx) {
                acc = acc + k * (line[src] - centre);
            }
            let v = kernel.gain * centre + acc;
            match axis {
                Axis::Horizontal => out[l * w + i] = v,
                Axis::Vertical => out[i * w + l] = v,
            }
        }
    }
    Plane::new(w, h, out).expect("same dims")
}

/// Separable correlation: `horizontal` along rows, then `vertical` along columns.
pub fn separable<T: Scalar>(
    image: &Plane<T>,
    horizontal: &Kernel1D<T>,
    vertical: &Kernel1D<T>,
) -> Plane<T> {
    correlate_1d(&correlate_1d(image, horizontal, Axis::Horizontal), vertical, Axis::Vertical)
}
