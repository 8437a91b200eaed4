use crate::error::{Error, Result};
use crate::raster::{reflect, GrayImage, Plane};
use crate::scalar::Scalar;

pub const STATS_WINDOW: usize = 7;

/// Arithmetic mean, geometric mean, max, min and median over a square
/// mirror-padded window. The geometric mean is `exp(mean(ln(v + 1))) - 1`.
pub fn local_stats<T: Scalar>(image: &GrayImage, window: usize) -> Result<[Plane<T>; 5]> {
    if window.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!("stats window {window} must be odd")));
    }
    let (w, h) = image.dims();
    let half = (window / 2) as isize;
    let n = window * window;
    let ln1p: Vec<T> = (0..=255u8).map(|v| T::of((v as f64 + 1.0).ln())).collect();
    let inv_n = T::of(1.0 / n as f64);

    let mut planes: [Vec<T>; 5] = std::array::from_fn(|_| Vec::with_capacity(w * h));
    let mut buf: Vec<u8> = Vec::with_capacity(n);
    for r in 0..h {
        for c in 0..w {
            buf.clear();
            for dr in -half..=half {
                let rr = reflect(r as isize + dr, h);
                for dc in -half..=half {
                    buf.push(image.get(rr, reflect(c as isize + dc, w)));
                }
            }
            let sum: u32 = buf.iter().map(|&v| v as u32).sum();
            let log_sum: T = buf.iter().map(|&v| ln1p[v as usize]).sum();
            let (lo, mid, hi) = {
                let (_, median, _) = buf.select_nth_unstable(n / 2);
                let median = *median;
                let lo = *buf.iter().min().expect("nonempty");
                let hi = *buf.iter().max().expect("nonempty");
                (lo, median, hi)
            };
            planes[0].push(T::of(sum as f64 / n as f64));
            planes[1].push((log_sum * inv_n).exp() - T::one());
            planes[2].push(T::from_byte(hi));
            planes[3].push(T::from_byte(lo));
            planes[4].push(T::from_byte(mid));
        }
    }
    Ok(planes.map(|d| Plane::new(w, h, d).expect("dims")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image() {
        let img = GrayImage::filled(9, 8, 200).unwrap();
        let planes = local_stats::<f64>(&img, STATS_WINDOW).unwrap();
        for (i, p) in planes.iter().enumerate() {
            for &v in p.data() {
                if i == 1 {
                    assert!((v - 200.0).abs() < 1e-9);
                } else {
                    assert_eq!(v, 200.0);
                }
            }
        }
    }

    #[test]
    fn forced_window_0_to_48() {
        // The 7x7 block at rows 3..10, cols 3..10 holds 0..48; its centre is (6, 6).
        let img = GrayImage::from_fn(13, 13, |(r, c)| {
            if (3..10).contains(&r) && (3..10).contains(&c) {
                ((r - 3) * 7 + (c - 3)) as u8
            } else {
                250
            }
        })
        .unwrap();
        let [mean, _, max, min, median] = local_stats::<f64>(&img, 7).unwrap();
        assert_eq!(mean.get(6, 6), 24.0);
        assert_eq!(median.get(6, 6), 24.0);
        assert_eq!(min.get(6, 6), 0.0);
        assert_eq!(max.get(6, 6), 48.0);
    }

    #[test]
    fn even_window_rejected() {
        let img = GrayImage::filled(9, 9, 1).unwrap();
        assert!(local_stats::<f64>(&img, 6).is_err());
    }
}
