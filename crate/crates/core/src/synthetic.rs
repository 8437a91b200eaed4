//! Seeded generator of retina-like test images: a dark branching vessel tree
//! rooted at a single disc point, over a bright, slowly varying background
//! with additive Gaussian noise. Ground truth is exact by construction.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, GrayImage, MIN_SIDE};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub width: usize,
    pub height: usize,
    /// Vessels leaving the root point.
    pub trunks: usize,
    /// Branching depth below the trunks.
    pub generations: u32,
    /// Vessel width range in pixels; trunks start at `max_width`.
    pub max_width: f64,
    pub min_width: f64,
    pub background: f64,
    /// Peak amplitude of the low-frequency background texture.
    pub texture: f64,
    /// Darkening of the widest vessel; thinner vessels are fainter.
    pub contrast: f64,
    pub noise_sigma: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            width: 256,
            height: 256,
            trunks: 4,
            generations: 3,
            max_width: 4.0,
            min_width: 1.0,
            background: 170.0,
            texture: 20.0,
            contrast: 60.0,
            noise_sigma: 4.0,
        }
    }
}

impl SyntheticConfig {
    pub fn with_size(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < MIN_SIDE || self.height < MIN_SIDE {
            return Err(Error::ImageTooSmall {
                width: self.width,
                height: self.height,
                min: MIN_SIDE,
            });
        }
        let ok = self.trunks > 0
            && self.min_width > 0.0
            && self.min_width <= self.max_width
            && self.noise_sigma >= 0.0
            && self.texture >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("bad synthetic config {self:?}")))
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticImage {
    pub image: GrayImage,
    pub ground_truth: BinaryMask,
    /// The root point all vessels grow from, always a ground-truth pixel.
    pub root: (usize, usize),
}

struct Branch {
    y: f64,
    x: f64,
    heading: f64,
    width: f64,
    generation: u32,
}

struct Canvas {
    w: usize,
    h: usize,
    coverage: Vec<f64>,
    truth: Vec<bool>,
}

impl Canvas {
    /// Marks one centreline sample of radius `width / 2`.
    fn stamp(&mut self, y: f64, x: f64, width: f64, strength: f64) {
        let r = width / 2.0;
        let reach = (r + 1.0).ceil() as isize;
        let (cy, cx) = (y.round() as isize, x.round() as isize);
        for py in cy - reach..=cy + reach {
            for px in cx - reach..=cx + reach {
                if py < 0 || px < 0 || py as usize >= self.h || px as usize >= self.w {
                    continue;
                }
                let i = py as usize * self.w + px as usize;
                let d = ((py as f64 - y).powi(2) + (px as f64 - x).powi(2)).sqrt();
                let cover = (r + 0.5 - d).clamp(0.0, 1.0) * strength;
                self.coverage[i] = self.coverage[i].max(cover);
                if d <= r || (py, px) == (cy, cx) {
                    self.truth[i] = true;
                }
            }
        }
    }

    fn inside(&self, y: f64, x: f64) -> bool {
        y >= 0.0 && x >= 0.0 && y <= (self.h - 1) as f64 && x <= (self.w - 1) as f64
    }
}

/// Generates one image. The same `(cfg, seed)` always gives the same output.
pub fn generate(cfg: &SyntheticConfig, seed: u64) -> Result<SyntheticImage> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (cfg.width, cfg.height);
    let mut canvas = Canvas {
        w,
        h,
        coverage: vec![0.0; w * h],
        truth: vec![false; w * h],
    };

    let root_y = h as f64 * rng.gen_range(0.4..0.6);
    let root_x = w as f64 * rng.gen_range(0.3..0.7);
    let offset = rng.gen_range(0.0..2.0 * PI);
    let mut stack: Vec<Branch> = (0..cfg.trunks)
        .map(|k| Branch {
            y: root_y,
            x: root_x,
            heading: offset + 2.0 * PI * k as f64 / cfg.trunks as f64 + rng.gen_range(-0.3..0.3),
            width: cfg.max_width,
            generation: 0,
        })
        .collect();

    let diag = ((w * w + h * h) as f64).sqrt();
    let bend = Normal::new(0.0, 0.06).expect("finite sigma");
    const STEP: f64 = 0.5;
    while let Some(b) = stack.pop() {
        let max_len = diag * rng.gen_range(0.35..0.6) / (1.0 + b.generation as f64 * 0.5);
        let strength = 0.45 + 0.55 * (b.width - cfg.min_width) / (cfg.max_width - cfg.min_width).max(1e-9);
        let (mut y, mut x, mut heading, mut width) = (b.y, b.x, b.heading, b.width);
        let mut travelled = 0.0;
        let mut next_fork = rng.gen_range(15.0..40.0);
        while travelled < max_len && canvas.inside(y, x) {
            canvas.stamp(y, x, width, strength.min(1.0));
            heading += bend.sample(&mut rng) * STEP;
            y += heading.sin() * STEP;
            x += heading.cos() * STEP;
            travelled += STEP;
            width = (width - 0.002).max(cfg.min_width);
            if travelled >= next_fork && b.generation < cfg.generations {
                next_fork = travelled + rng.gen_range(20.0..50.0);
                let side = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                stack.push(Branch {
                    y,
                    x,
                    heading: heading + side * rng.gen_range(0.5..1.1),
                    width: (width * 0.7).max(cfg.min_width),
                    generation: b.generation + 1,
                });
            }
        }
    }

    let waves: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            let angle = rng.gen_range(0.0..PI);
            let period = rng.gen_range(0.3..1.0) * diag;
            let k = 2.0 * PI / period;
            (k * angle.cos(), k * angle.sin(), rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.5..1.0))
        })
        .collect();
    let norm: f64 = waves.iter().map(|wv| wv.3).sum();
    let noise = Normal::new(0.0, cfg.noise_sigma.max(f64::MIN_POSITIVE)).expect("finite sigma");
    let mut pixels = Vec::with_capacity(w * h);
    for r in 0..h {
        for c in 0..w {
            let tex: f64 = waves
                .iter()
                .map(|&(ky, kx, phase, amp)| amp * (ky * r as f64 + kx * c as f64 + phase).sin())
                .sum::<f64>()
                / norm;
            let base = cfg.background + cfg.texture * tex;
            let n = if cfg.noise_sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            let v = base - cfg.contrast * canvas.coverage[r * w + c] + n;
            pixels.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    let root = (
        (root_y.round() as usize).min(h - 1),
        (root_x.round() as usize).min(w - 1),
    );
    Ok(SyntheticImage {
        image: GrayImage::new(w, h, pixels)?,
        ground_truth: BinaryMask::new(w, h, canvas.truth)?,
        root,
    })
}

/// `count` images, the i-th generated with seed `seed + i`.
pub fn dataset(cfg: &SyntheticConfig, count: usize, seed: u64) -> Result<Vec<SyntheticImage>> {
    (0..count as u64).map(|i| generate(cfg, seed + i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{connected_components, Adjacency};

    #[test]
    fn deterministic_per_seed() {
        let cfg = SyntheticConfig::with_size(64, 64);
        let a = generate(&cfg, 3).unwrap();
        let b = generate(&cfg, 3).unwrap();
        let c = generate(&cfg, 4).unwrap();
        assert_eq!(a.image, b.image);
        assert_eq!(a.ground_truth, b.ground_truth);
        assert_ne!(a.image, c.image);
    }

    #[test]
    fn tree_is_one_component_through_the_root() {
        for seed in 0..10 {
            let s = generate(&SyntheticConfig::with_size(128, 96), seed).unwrap();
            let comps = connected_components(&s.ground_truth, Adjacency::Eight);
            assert_eq!(comps.count(), 1, "seed {seed}");
            assert!(s.ground_truth.get(s.root.0, s.root.1));
            let frac = s.ground_truth.count() as f64 / (128.0 * 96.0);
            assert!(frac > 0.02 && frac < 0.4, "vessel fraction {frac}");
        }
    }

    #[test]
    fn vessels_are_darker_than_background() {
        let s = generate(&SyntheticConfig::default(), 1).unwrap();
        let mean = |want: bool| {
            let v: Vec<f64> = s
                .image
                .data()
                .iter()
                .zip(s.ground_truth.data())
                .filter(|(_, &g)| g == want)
                .map(|(&p, _)| p as f64)
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!(mean(true) + 20.0 < mean(false));
    }
}
