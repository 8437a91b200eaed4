//! Seed selection and classifier-driven region growing.
//!
//! Growth proceeds in sweeps. Each sweep collects the unvisited pixels at
//! Chebyshev distance 1 from the pixels labelled vessel in the previous sweep
//! (the seeds, initially), scores them in row-major order and labels a pixel
//! vessel as soon as its score exceeds the decision threshold, so later
//! pixels of the same sweep see it in their connectivity features. Every
//! pixel is scored at most once. Growth stops when a sweep has no frontier.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::connectivity::ConnectivityConfig;
use crate::error::{Error, Result};
use crate::features::{FeatureStack, FeatureVector, VectorBuilder};
use crate::filters::{frangi, FrangiConfig, Polarity};
use crate::forest::ForestModel;
use crate::raster::{largest_component, BinaryMask, GrayImage, Pixel, Plane};
use crate::scalar::Scalar;

/// Per-pixel vessel probability; pixels never reached by growth hold 0.
pub type ScoreMap = Plane<f64>;

/// Anything that turns a pixel's feature vector into a vessel probability.
pub trait PixelScorer {
    fn score(&self, pixel: Pixel, features: &FeatureVector) -> f64;
}

impl PixelScorer for ForestModel {
    fn score(&self, _pixel: Pixel, features: &FeatureVector) -> f64 {
        self.proba(features)
    }
}

/// Scores every pixel with the same value.
#[derive(Debug, Clone, Copy)]
pub struct ConstantScorer(pub f64);

impl PixelScorer for ConstantScorer {
    fn score(&self, _: Pixel, _: &FeatureVector) -> f64 {
        self.0
    }
}

/// Scores 1 inside the mask and 0 outside, ignoring features.
#[derive(Debug, Clone)]
pub struct MaskScorer<'a>(pub &'a BinaryMask);

impl PixelScorer for MaskScorer<'_> {
    fn score(&self, (r, c): Pixel, _: &FeatureVector) -> f64 {
        if self.0.get(r, c) {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedProvenance {
    AutoFrangi,
    Manual,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedSet {
    pixels: Vec<Pixel>,
    provenance: SeedProvenance,
}

impl SeedSet {
    pub fn new(
        mut pixels: Vec<Pixel>,
        dims: (usize, usize),
        provenance: SeedProvenance,
    ) -> Result<Self> {
        if pixels.is_empty() {
            return Err(Error::NoSeedsFound);
        }
        let (w, h) = dims;
        if let Some(&(row, col)) = pixels.iter().find(|&&(r, c)| r >= h || c >= w) {
            return Err(Error::OutOfBounds {
                row,
                col,
                width: w,
                height: h,
            });
        }
        pixels.sort_unstable();
        if let Some(pair) = pixels.windows(2).find(|p| p[0] == p[1]) {
            return Err(Error::InvalidConfig(format!("duplicate seed {:?}", pair[0])));
        }
        Ok(Self { pixels, provenance })
    }

    /// Parses a manual seed list `"r,c;r,c;..."`.
    pub fn parse(list: &str, dims: (usize, usize)) -> Result<Self> {
        let bad = |item: &str| Error::InvalidConfig(format!("bad seed '{item}', expected row,col"));
        let pixels = list
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|item| {
                let (r, c) = item.split_once(',').ok_or_else(|| bad(item))?;
                Ok((
                    r.trim().parse().map_err(|_| bad(item))?,
                    c.trim().parse().map_err(|_| bad(item))?,
                ))
            })
            .collect::<Result<Vec<Pixel>>>()?;
        Self::new(pixels, dims, SeedProvenance::Manual)
    }

    /// Seeds in row-major order.
    pub fn pixels(&self) -> &[Pixel] {
        &self.pixels
    }

    pub fn provenance(&self) -> SeedProvenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }
}

/// Vesselness configuration used to place seeds: scales 1..3.
pub fn seed_frangi_config(polarity: Polarity) -> FrangiConfig {
    FrangiConfig {
        sigma_start: 1.0,
        sigma_end: 3.0,
        sigma_step: 1.0,
        beta1: 0.5,
        beta2: 15.0,
        polarity,
    }
}

/// Otsu's threshold of `values` over a 256-bin histogram spanning their
/// range; values strictly above the returned level form the upper class.
/// `None` if the values are all equal.
pub fn otsu_threshold(values: &[f64]) -> Option<f64> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if values.is_empty() || hi <= lo {
        return None;
    }
    const BINS: usize = 256;
    let width = (hi - lo) / BINS as f64;
    let mut hist = [0u64; BINS];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(BINS - 1);
        hist[b] += 1;
    }
    let total = values.len() as f64;
    let weighted_total: f64 = hist.iter().enumerate().map(|(i, &n)| i as f64 * n as f64).sum();
    let (mut w0, mut sum0) = (0.0, 0.0);
    let (mut best, mut best_bin) = (-1.0, 0);
    for (i, &n) in hist.iter().enumerate().take(BINS - 1) {
        w0 += n as f64;
        sum0 += i as f64 * n as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let m0 = sum0 / w0;
        let m1 = (weighted_total - sum0) / w1;
        let between = w0 * w1 * (m0 - m1).powi(2);
        if between > best {
            best = between;
            best_bin = i;
        }
    }
    Some(lo + (best_bin + 1) as f64 * width)
}

/// Seeds from the vesselness response: Otsu-binarised inside the FOV, then
/// every pixel of the largest 8-connected component.
pub fn select_seeds(
    image: &GrayImage,
    cfg: &FrangiConfig,
    fov: Option<&BinaryMask>,
) -> Result<SeedSet> {
    if let Some(f) = fov {
        if f.dims() != image.dims() {
            return Err(Error::DimensionMismatch {
                expected: image.dims(),
                found: f.dims(),
            });
        }
    }
    let response = frangi::<f64>(image, cfg)?;
    let (w, h) = image.dims();
    let inside = |i: usize| fov.is_none_or(|f| f.data()[i]);
    let values: Vec<f64> = (0..w * h)
        .filter(|&i| inside(i))
        .map(|i| response.data()[i])
        .collect();
    let level = otsu_threshold(&values).ok_or(Error::NoSeedsFound)?;
    let binary = BinaryMask::new(
        w,
        h,
        (0..w * h)
            .map(|i| inside(i) && response.data()[i] > level)
            .collect(),
    )?;
    let component = largest_component(&binary).map_err(|_| Error::NoSeedsFound)?;
    SeedSet::new(component.pixels(), image.dims(), SeedProvenance::AutoFrangi)
}

/// Frontier size and number of pixels labelled vessel in one sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sweep {
    pub frontier: usize,
    pub accepted: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub mask: BinaryMask,
    pub scores: ScoreMap,
    /// Pixels scored by the classifier plus the seeds.
    pub visited: BinaryMask,
}

const NEIGHBOURS: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

fn grow<T: Scalar, S: PixelScorer + ?Sized>(
    stack: &FeatureStack<T>,
    scorer: &S,
    seeds: &SeedSet,
    cfg: &ConnectivityConfig,
    threshold: f64,
    mut log: Option<&mut Vec<Sweep>>,
) -> Result<Segmentation> {
    let (w, h) = stack.dims();
    if let Some(&(row, col)) = seeds.pixels().iter().find(|&&(r, c)| r >= h || c >= w) {
        return Err(Error::DimensionMismatch {
            expected: (w, h),
            found: (col + 1, row + 1),
        });
    }
    let builder = VectorBuilder::new(stack, cfg)?;
    let mut labels = BinaryMask::empty(w, h);
    let mut visited = BinaryMask::empty(w, h);
    let mut queued = vec![false; w * h];
    let mut scores = ScoreMap::zeros(w, h);

    for &(r, c) in seeds.pixels() {
        labels.set(r, c, true);
        visited.set(r, c, true);
        queued[r * w + c] = true;
        scores.set(r, c, 1.0);
    }

    let mut newest: Vec<Pixel> = seeds.pixels().to_vec();
    let mut frontier: Vec<Pixel> = Vec::new();
    loop {
        frontier.clear();
        for &(r, c) in &newest {
            for (dr, dc) in NEIGHBOURS {
                let (nr, nc) = (r as isize + dr, c as isize + dc);
                if nr < 0 || nc < 0 || nr as usize >= h || nc as usize >= w {
                    continue;
                }
                let i = nr as usize * w + nc as usize;
                if !queued[i] {
                    queued[i] = true;
                    frontier.push((nr as usize, nc as usize));
                }
            }
        }
        if frontier.is_empty() {
            break;
        }
        frontier.sort_unstable();
        newest.clear();
        for &(r, c) in &frontier {
            debug_assert!(!visited.get(r, c), "pixel ({r}, {c}) scored twice");
            let v = builder.vector_at(&labels, (r, c))?;
            let s = scorer.score((r, c), &v);
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::Invariant(format!(
                    "score {s} at ({r}, {c}) outside [0, 1]"
                )));
            }
            scores.set(r, c, s);
            visited.set(r, c, true);
            if s > threshold {
                labels.set(r, c, true);
                newest.push((r, c));
            }
        }
        if let Some(log) = log.as_deref_mut() {
            log.push(Sweep {
                frontier: frontier.len(),
                accepted: newest.len(),
            });
        }
    }
    Ok(Segmentation {
        mask: labels,
        scores,
        visited,
    })
}

/// Grows the vessel set from `seeds`, scoring frontier pixels with `scorer`.
pub fn segment<T: Scalar, S: PixelScorer + ?Sized>(
    stack: &FeatureStack<T>,
    scorer: &S,
    seeds: &SeedSet,
    cfg: &ConnectivityConfig,
    threshold: f64,
) -> Result<Segmentation> {
    grow(stack, scorer, seeds, cfg, threshold, None)
}

/// Same as [`segment`], also returning one [`Sweep`] record per sweep.
pub fn grow_trace<T: Scalar, S: PixelScorer + ?Sized>(
    stack: &FeatureStack<T>,
    scorer: &S,
    seeds: &SeedSet,
    cfg: &ConnectivityConfig,
    threshold: f64,
) -> Result<(Segmentation, Vec<Sweep>)> {
    let mut log = Vec::new();
    let seg = grow(stack, scorer, seeds, cfg, threshold, Some(&mut log))?;
    Ok((seg, log))
}

const SCORES_MAGIC: &[u8; 4] = b"ELSC";

/// Writes a score map: `"ELSC"`, version `u32 = 1`, width `u32`, height
/// `u32`, then row-major little-endian `f64` values.
pub fn save_scores(scores: &ScoreMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::with_capacity(16 + scores.data().len() * 8);
    buf.extend_from_slice(SCORES_MAGIC);
    buf.extend_from_slice(&1u32.to_le_bytes());
    buf.extend_from_slice(&(scores.width() as u32).to_le_bytes());
    buf.extend_from_slice(&(scores.height() as u32).to_le_bytes());
    for v in scores.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let file = File::create(path).map_err(|e| Error::write(path, e))?;
    let mut out = BufWriter::new(file);
    out.write_all(&buf)
        .and_then(|_| out.flush())
        .map_err(|e| Error::write(path, e))
}

pub fn load_scores(path: impl AsRef<Path>) -> Result<ScoreMap> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::read(path, e))?;
    let corrupt = |m: &str| Error::CorruptCache(format!("{}: {m}", path.display()));
    if bytes.len() < 16 || &bytes[..4] != SCORES_MAGIC {
        return Err(corrupt("not a score map"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    if word(4) != 1 {
        return Err(corrupt("unsupported version"));
    }
    let (w, h) = (word(8) as usize, word(12) as usize);
    if bytes.len() != 16 + w * h * 8 {
        return Err(corrupt("size does not match dimensions"));
    }
    let data = bytes[16..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    ScoreMap::new(w, h, data)
}
