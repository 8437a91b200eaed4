use crate::error::{Error, Result};
use crate::raster::{reflect, GrayImage, Plane};
use crate::scalar::Scalar;

/// Flat structuring element: a support on a grid plus a reference pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuringElement {
    pub width: usize,
    pub height: usize,
    pub anchor: (usize, usize),
    /// Support cells as `(row, col)` grid positions.
    pub support: Vec<(usize, usize)>,
}

impl StructuringElement {
    /// 3x3 cross.
    pub fn cross() -> Self {
        Self {
            width: 3,
            height: 3,
            anchor: (1, 1),
            support: vec![(0, 1), (1, 0), (1, 1), (1, 2), (2, 1)],
        }
    }

    /// Disc of the given diameter inscribed in a `diameter x diameter` grid:
    /// cells whose centre lies within `diameter / 2` of the grid centre.
    pub fn disc(diameter: usize) -> Self {
        let centre = (diameter as f64 - 1.0) / 2.0;
        let radius = diameter as f64 / 2.0;
        let mut support = Vec::new();
        for r in 0..diameter {
            for c in 0..diameter {
                let (dy, dx) = (r as f64 - centre, c as f64 - centre);
                if dx * dx + dy * dy <= radius * radius {
                    support.push((r, c));
                }
            }
        }
        Self {
            width: diameter,
            height: diameter,
            anchor: (diameter / 2, diameter / 2),
            support,
        }
    }

    /// Support as displacements from the anchor.
    pub fn offsets(&self) -> Vec<(isize, isize)> {
        self.support
            .iter()
            .map(|&(r, c)| (r as isize - self.anchor.0 as isize, c as isize - self.anchor.1 as isize))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.support.is_empty() || !self.support.contains(&self.anchor) {
            return Err(Error::InvalidConfig(
                "structuring element must contain its anchor".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Element {
    /// 3x3 cross.
    Cross,
    /// Diameter-10 disc in a 10x10 grid.
    Disc10,
}

impl Element {
    pub fn structuring_element(self) -> StructuringElement {
        match self {
            Element::Cross => StructuringElement::cross(),
            Element::Disc10 => StructuringElement::disc(10),
        }
    }
}

/// `erosions` flat erosions followed by `dilations` flat dilations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MorphConfig {
    pub erosions: usize,
    pub dilations: usize,
    pub element: Element,
}

impl MorphConfig {
    pub const fn new(erosions: usize, dilations: usize, element: Element) -> Self {
        Self {
            erosions,
            dilations,
            element,
        }
    }

    /// The six morphology feature configurations.
    pub const FEATURE_SET: [Self; 6] = [
        Self::new(1, 1, Element::Cross),
        Self::new(3, 1, Element::Cross),
        Self::new(1, 3, Element::Cross),
        Self::new(1, 1, Element::Disc10),
        Self::new(3, 1, Element::Disc10),
        Self::new(1, 3, Element::Disc10),
    ];
}

fn rank_filter<T: Scalar>(
    src: &Plane<T>,
    offsets: &[(isize, isize)],
    pick: impl Fn(T, T) -> T,
) -> Plane<T> {
    let (w, h) = src.dims();
    Plane::from_fn(w, h, |(r, c)| {
        let mut it = offsets
            .iter()
            .map(|&(dr, dc)| src.get(reflect(r as isize + dr, h), reflect(c as isize + dc, w)));
        let first = it.next().expect("nonempty support");
        it.fold(first, &pick)
    })
}

/// Flat erosion: minimum over the element placed at each pixel.
pub fn erode<T: Scalar>(src: &Plane<T>, se: &StructuringElement) -> Plane<T> {
    rank_filter(src, &se.offsets(), |a, b| a.min(b))
}

/// Flat dilation: maximum over the reflected element.
pub fn dilate<T: Scalar>(src: &Plane<T>, se: &StructuringElement) -> Plane<T> {
    let reflected: Vec<_> = se.offsets().into_iter().map(|(r, c)| (-r, -c)).collect();
    rank_filter(src, &reflected, |a, b| a.max(b))
}

pub fn morph_feature<T: Scalar>(image: &GrayImage, cfg: &MorphConfig) -> Result<Plane<T>> {
    let se = cfg.element.structuring_element();
    se.validate()?;
    let mut p = image.to_plane::<T>();
    for _ in 0..cfg.erosions {
        p = erode(&p, &se);
    }
    for _ in 0..cfg.dilations {
        p = dilate(&p, &se);
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elements_are_well_formed() {
        let b1 = StructuringElement::cross();
        let b2 = StructuringElement::disc(10);
        b1.validate().unwrap();
        b2.validate().unwrap();
        assert_eq!(b2.anchor, (5, 5));
        // symmetric about the grid centre
        for &(r, c) in &b2.support {
            assert!(b2.support.contains(&(9 - r, 9 - c)));
            assert!(b2.support.contains(&(c, r)));
        }
        // full middle rows, clipped corners
        assert!(b2.support.contains(&(4, 0)) && b2.support.contains(&(5, 9)));
        assert!(!b2.support.contains(&(0, 0)));
        assert_eq!(b2.support.len(), 80);
    }

    #[test]
    fn isolated_point_vanishes_under_opening() {
        let img = GrayImage::from_fn(7, 7, |p| if p == (3, 3) { 255 } else { 0 }).unwrap();
        let out = morph_feature::<f64>(&img, &MorphConfig::new(1, 1, Element::Cross)).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_image_unchanged() {
        let img = GrayImage::filled(12, 12, 77).unwrap();
        for cfg in MorphConfig::FEATURE_SET {
            assert_eq!(morph_feature::<f64>(&img, &cfg).unwrap(), img.to_plane());
        }
    }

    #[test]
    fn erosion_below_input_below_dilation() {
        let img = GrayImage::from_fn(15, 13, |(r, c)| ((r * 31 + c * 17) % 256) as u8).unwrap();
        let base = img.to_plane::<f64>();
        for el in [Element::Cross, Element::Disc10] {
            let e = morph_feature::<f64>(&img, &MorphConfig::new(1, 0, el)).unwrap();
            let d = morph_feature::<f64>(&img, &MorphConfig::new(0, 1, el)).unwrap();
            for i in 0..base.data().len() {
                assert!(e.data()[i] <= base.data()[i] && base.data()[i] <= d.data()[i]);
            }
        }
    }
}
