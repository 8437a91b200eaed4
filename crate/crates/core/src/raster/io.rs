use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use image::codecs::png::PngEncoder;
use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageError, ImageReader};

use super::{BinaryMask, GrayImage};
use crate::error::{Error, Result};

/// How a multi-channel raster is reduced to one channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChannelPolicy {
    /// Green channel of RGB inputs; single-channel inputs pass through.
    #[default]
    GreenOfRgb,
    /// Rec. 601 luma of RGB inputs.
    Luminance,
    /// Accept single-channel inputs only.
    AsIs,
}

fn decode(path: &Path) -> Result<DynamicImage> {
    let reader = ImageReader::open(path)
        .map_err(|e| Error::read(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::read(path, e))?;
    reader.decode().map_err(|e| match e {
        ImageError::Unsupported(u) => Error::UnsupportedFormat {
            path: path.to_path_buf(),
            reason: u.to_string(),
        },
        other => Error::read(path, other),
    })
}

/// Loads a PGM/PPM/PNG raster as a single-channel 8-bit image.
pub fn load_image(path: impl AsRef<Path>, policy: ChannelPolicy) -> Result<GrayImage> {
    let path = path.as_ref();
    let img = decode(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w < super::MIN_SIDE || h < super::MIN_SIDE {
        return Err(Error::ZeroDimension { width: w, height: h });
    }
    let unsupported = |what: &str| Error::UnsupportedFormat {
        path: path.to_path_buf(),
        reason: what.to_string(),
    };
    let data = match img {
        DynamicImage::ImageLuma8(g) => g.into_raw(),
        DynamicImage::ImageLumaA8(g) => g.pixels().map(|p| p.0[0]).collect(),
        DynamicImage::ImageRgb8(_) | DynamicImage::ImageRgba8(_) => {
            if policy == ChannelPolicy::AsIs {
                return Err(unsupported("multi-channel image with as-is channel policy"));
            }
            let rgb = img.to_rgb8();
            match policy {
                ChannelPolicy::Luminance => rgb
                    .pixels()
                    .map(|p| {
                        let [r, g, b] = p.0;
                        (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64).round() as u8
                    })
                    .collect(),
                _ => rgb.pixels().map(|p| p.0[1]).collect(),
            }
        }
        _ => return Err(unsupported("only 8-bit gray and RGB rasters are supported")),
    };
    GrayImage::new(w, h, data)
}

/// Loads a mask; any nonzero intensity is foreground.
pub fn load_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let img = load_image(path, ChannelPolicy::GreenOfRgb)?;
    BinaryMask::new(
        img.width(),
        img.height(),
        img.data().iter().map(|&v| v != 0).collect(),
    )
}

fn write_gray(path: &Path, width: usize, height: usize, data: &[u8]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::write(path, e))?;
    let out = BufWriter::new(file);
    let is_png = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let res = if is_png {
        PngEncoder::new(out).write_image(data, width as u32, height as u32, ExtendedColorType::L8)
    } else {
        PnmEncoder::new(out)
            .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
            .write_image(data, width as u32, height as u32, ExtendedColorType::L8)
    };
    res.map_err(|e| Error::write(path, e))
}

/// Writes a mask as an 8-bit raster, vessel = 255 and background = 0.
///
/// `.png` paths produce PNG; anything else produces binary PGM (P5, maxval 255).
pub fn save_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let data: Vec<u8> = mask.data().iter().map(|&v| if v { 255 } else { 0 }).collect();
    write_gray(path.as_ref(), mask.width(), mask.height(), &data)
}

pub fn save_gray(image: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    write_gray(path.as_ref(), image.width(), image.height(), image.data())
}
