//! Little-endian binary caches for feature stacks and labelled samples.
//!
//! Stack: `"ELFV"`, version `u32 = 1`, width `u32`, height `u32`,
//! plane count `u32 = 35`, then each plane row-major as `f32`.
//!
//! Samples: `"ELSV"`, version `u32 = 1`, sample count `u64`, feature count
//! `u32 = 37`, then per sample 37 `f32` values and a `u8` label (1 = vessel).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{FeatureStack, LabeledSample, FEATURE_COUNT, FEATURE_NAMES, GREY_FEATURE_COUNT};
use crate::error::{Error, Result};
use crate::raster::Plane;
use crate::scalar::Scalar;

const STACK_MAGIC: &[u8; 4] = b"ELFV";
const SAMPLES_MAGIC: &[u8; 4] = b"ELSV";
const VERSION: u32 = 1;

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|_| Error::CorruptCache(format!("truncated while reading {what}")))?;
        Ok(buf)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(what)?))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes(what)?))
    }

    fn f32(&mut self, what: &str) -> Result<f32> {
        Ok(f32::from_le_bytes(self.bytes(what)?))
    }

    fn header(&mut self, magic: &[u8; 4]) -> Result<()> {
        let got: [u8; 4] = self.bytes("magic")?;
        if &got != magic {
            return Err(Error::CorruptCache(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&got),
                String::from_utf8_lossy(magic)
            )));
        }
        let version = self.u32("version")?;
        if version != VERSION {
            return Err(Error::CorruptCache(format!("unsupported version {version}")));
        }
        Ok(())
    }

    fn expect_eof(&mut self) -> Result<()> {
        let mut extra = [0u8; 1];
        match self.inner.read(&mut extra) {
            Ok(0) => Ok(()),
            Ok(_) => Err(Error::CorruptCache("trailing bytes after payload".into())),
            Err(e) => Err(Error::CorruptCache(e.to_string())),
        }
    }
}

fn open(path: &Path) -> Result<Reader<BufReader<File>>> {
    let f = File::open(path).map_err(|e| Error::read(path, e))?;
    Ok(Reader {
        inner: BufReader::new(f),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::write(path, e))
}

pub fn write_stack<T: Scalar>(stack: &FeatureStack<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    let mut buf = Vec::with_capacity(20 + stack.width() * stack.height() * 4 * GREY_FEATURE_COUNT);
    buf.extend_from_slice(STACK_MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(stack.width() as u32).to_le_bytes());
    buf.extend_from_slice(&(stack.height() as u32).to_le_bytes());
    buf.extend_from_slice(&(GREY_FEATURE_COUNT as u32).to_le_bytes());
    for plane in stack.planes() {
        for &v in plane.data() {
            buf.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
        }
    }
    out.write_all(&buf)
        .and_then(|_| out.flush())
        .map_err(|e| Error::write(path, e))
}

pub fn read_stack<T: Scalar>(path: impl AsRef<Path>) -> Result<FeatureStack<T>> {
    let mut r = open(path.as_ref())?;
    r.header(STACK_MAGIC)?;
    let width = r.u32("width")? as usize;
    let height = r.u32("height")? as usize;
    let n = r.u32("plane count")? as usize;
    if n != GREY_FEATURE_COUNT {
        return Err(Error::CorruptCache(format!(
            "plane count {n}, expected {GREY_FEATURE_COUNT}"
        )));
    }
    if width == 0 || height == 0 {
        return Err(Error::CorruptCache(format!("dimensions {width}x{height}")));
    }
    let mut planes = Vec::with_capacity(n);
    for _ in 0..n {
        let mut data = Vec::with_capacity(width * height);
        for _ in 0..width * height {
            data.push(T::of(r.f32("plane data")? as f64));
        }
        planes.push(Plane::new(width, height, data)?);
    }
    r.expect_eof()?;
    FeatureStack::from_planes(planes)
}

pub fn write_samples(samples: &[LabeledSample], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    let mut buf = Vec::with_capacity(20 + samples.len() * (FEATURE_COUNT * 4 + 1));
    buf.extend_from_slice(SAMPLES_MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(samples.len() as u64).to_le_bytes());
    buf.extend_from_slice(&(FEATURE_COUNT as u32).to_le_bytes());
    for s in samples {
        for &v in &s.vector {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
        buf.push(s.vessel as u8);
    }
    out.write_all(&buf)
        .and_then(|_| out.flush())
        .map_err(|e| Error::write(path, e))
}

pub fn read_samples(path: impl AsRef<Path>) -> Result<Vec<LabeledSample>> {
    let mut r = open(path.as_ref())?;
    r.header(SAMPLES_MAGIC)?;
    let count = r.u64("sample count")?;
    let nf = r.u32("feature count")? as usize;
    if nf != FEATURE_COUNT {
        return Err(Error::CorruptCache(format!(
            "feature count {nf}, expected {FEATURE_COUNT}"
        )));
    }
    let mut out = Vec::new();
    for _ in 0..count {
        let mut vector = [0.0; FEATURE_COUNT];
        for v in &mut vector {
            *v = r.f32("sample")? as f64;
        }
        let label = r.bytes::<1>("label")?[0];
        if label > 1 {
            return Err(Error::CorruptCache(format!("label byte {label}")));
        }
        out.push(LabeledSample {
            vector,
            vessel: label == 1,
        });
    }
    r.expect_eof()?;
    Ok(out)
}

/// Text export: a CSV header, then `row,col` and the 35 grey-level values per pixel.
pub fn write_stack_text<T: Scalar>(stack: &FeatureStack<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    let mut line = String::from("row,col");
    for name in &FEATURE_NAMES[FEATURE_COUNT - GREY_FEATURE_COUNT..] {
        line.push(',');
        line.push_str(name);
    }
    line.push('\n');
    let write = |out: &mut BufWriter<File>, s: &str| {
        out.write_all(s.as_bytes()).map_err(|e| Error::write(path, e))
    };
    write(&mut out, &line)?;
    for r in 0..stack.height() {
        for c in 0..stack.width() {
            line.clear();
            line.push_str(&format!("{r},{c}"));
            for p in stack.planes() {
                line.push_str(&format!(",{}", p.get(r, c).as_f64()));
            }
            line.push('\n');
            write(&mut out, &line)?;
        }
    }
    out.flush().map_err(|e| Error::write(path, e))
}
