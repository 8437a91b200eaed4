//! Confusion counts, derived rates and tie-aware ROC analysis.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::growseg::ScoreMap;
use crate::raster::BinaryMask;

/// Pixel counts with vessel as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

fn check_dims(expected: (usize, usize), other: &BinaryMask) -> Result<()> {
    if other.dims() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: other.dims(),
        });
    }
    Ok(())
}

/// Counts over pixels inside `fov`, or the whole image without one.
pub fn confusion(
    pred: &BinaryMask,
    gt: &BinaryMask,
    fov: Option<&BinaryMask>,
) -> Result<ConfusionMatrix> {
    check_dims(pred.dims(), gt)?;
    if let Some(f) = fov {
        check_dims(pred.dims(), f)?;
    }
    let mut cm = ConfusionMatrix::default();
    for (i, (&p, &g)) in pred.data().iter().zip(gt.data()).enumerate() {
        if fov.is_some_and(|f| !f.data()[i]) {
            continue;
        }
        match (p, g) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, false) => cm.tn += 1,
            (false, true) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

/// Per-image quality measures. A rate whose denominator is zero is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub tpr: Option<f64>,
    pub tnr: Option<f64>,
    pub accuracy: f64,
    pub f1: Option<f64>,
    pub mcc: Option<f64>,
    pub auc: Option<f64>,
    pub roc: Vec<(f64, f64)>,
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den != 0.0).then(|| num / den)
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricReport> {
    if cm.total() == 0 {
        return Err(Error::EmptyEvaluation);
    }
    let (tp, fp, tn, fn_) = (cm.tp as f64, cm.fp as f64, cm.tn as f64, cm.fn_ as f64);
    let mcc_den = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
    Ok(MetricReport {
        tpr: ratio(tp, tp + fn_),
        tnr: ratio(tn, tn + fp),
        accuracy: (tp + tn) / cm.total() as f64,
        f1: ratio(2.0 * tp, 2.0 * tp + fp + fn_),
        mcc: ratio(tp * tn - fp * fn_, mcc_den),
        auc: None,
        roc: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Roc {
    pub auc: f64,
    /// `(fpr, tpr)` after each distinct score threshold, from (0,0) to (1,1).
    pub points: Vec<(f64, f64)>,
}

/// ROC over `(score, is_positive)` samples; AUC is the Mann-Whitney
/// statistic with ties counting one half.
pub fn roc_from_samples(samples: &[(f64, bool)]) -> Result<Roc> {
    let positives = samples.iter().filter(|s| s.1).count() as u64;
    let negatives = samples.len() as u64 - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::DegenerateClasses {
            positives: positives as usize,
            negatives: negatives as usize,
        });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(|a, b| b.0.total_cmp(&a.0));

    // twice the concordant-pair count plus tied pairs, kept exact
    let mut doubled: u128 = 0;
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut points = vec![(0.0, 0.0)];
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        let (mut gp, mut gn) = (0u64, 0u64);
        while j < sorted.len() && sorted[j].0.total_cmp(&sorted[i].0) == Ordering::Equal {
            if sorted[j].1 {
                gp += 1;
            } else {
                gn += 1;
            }
            j += 1;
        }
        doubled += 2 * gn as u128 * tp as u128 + gn as u128 * gp as u128;
        tp += gp;
        fp += gn;
        points.push((fp as f64 / negatives as f64, tp as f64 / positives as f64));
        i = j;
    }
    Ok(Roc {
        auc: doubled as f64 / (2 * positives as u128 * negatives as u128) as f64,
        points,
    })
}

pub fn roc_auc(scores: &ScoreMap, gt: &BinaryMask, fov: Option<&BinaryMask>) -> Result<Roc> {
    check_dims(scores.dims(), gt)?;
    if let Some(f) = fov {
        check_dims(scores.dims(), f)?;
    }
    let samples: Vec<(f64, bool)> = scores
        .data()
        .iter()
        .zip(gt.data())
        .enumerate()
        .filter(|(i, _)| fov.is_none_or(|f| f.data()[*i]))
        .map(|(_, (&s, &g))| (s, g))
        .collect();
    roc_from_samples(&samples)
}

/// Confusion-based metrics plus AUC and ROC points when scores are given.
pub fn evaluate(
    pred: &BinaryMask,
    gt: &BinaryMask,
    fov: Option<&BinaryMask>,
    scores: Option<&ScoreMap>,
) -> Result<MetricReport> {
    let mut report = metrics(&confusion(pred, gt, fov)?)?;
    if let Some(s) = scores {
        let roc = roc_auc(s, gt, fov)?;
        report.auc = Some(roc.auc);
        report.roc = roc.points;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cm(tp: u64, fp: u64, tn: u64, fn_: u64) -> ConfusionMatrix {
        ConfusionMatrix { tp, fp, tn, fn_ }
    }

    fn pair_oracle(samples: &[(f64, bool)]) -> f64 {
        let (mut num, mut p, mut n) = (0u128, 0u128, 0u128);
        for a in samples.iter().filter(|s| s.1) {
            p += 1;
            for b in samples.iter().filter(|s| !s.1) {
                num += if a.0 > b.0 { 2 } else if a.0 == b.0 { 1 } else { 0 };
            }
        }
        for _ in samples.iter().filter(|s| !s.1) {
            n += 1;
        }
        num as f64 / (2 * p * n) as f64
    }

    #[test]
    fn confusion_examples() {
        let gt = BinaryMask::from_fn(10, 10, |(r, _)| r < 3);
        assert_eq!(confusion(&gt, &gt, None).unwrap(), cm(30, 0, 70, 0));
        let flipped = confusion(&gt.complement(), &gt, None).unwrap();
        assert_eq!((flipped.tp, flipped.tn), (0, 0));
        let pred = BinaryMask::new(2, 2, vec![true, true, false, false]).unwrap();
        let gt = BinaryMask::new(2, 2, vec![true, false, true, false]).unwrap();
        assert_eq!(confusion(&pred, &gt, None).unwrap(), cm(1, 1, 1, 1));
        let fov = BinaryMask::new(2, 2, vec![true, false, false, false]).unwrap();
        assert_eq!(confusion(&pred, &gt, Some(&fov)).unwrap(), cm(1, 0, 0, 0));
        assert!(confusion(&pred, &BinaryMask::empty(3, 2), None).is_err());
    }

    #[test]
    fn metric_fixtures() {
        let m = metrics(&cm(30, 0, 70, 0)).unwrap();
        assert_eq!((m.accuracy, m.tpr, m.tnr, m.f1, m.mcc), (1.0, Some(1.0), Some(1.0), Some(1.0), Some(1.0)));
        let m = metrics(&cm(1, 1, 1, 1)).unwrap();
        assert_eq!((m.accuracy, m.f1, m.mcc), (0.5, Some(0.5), Some(0.0)));
        // joint class flip swaps tp/tn and fp/fn
        let a = metrics(&cm(30, 4, 60, 6)).unwrap();
        let b = metrics(&cm(60, 6, 30, 4)).unwrap();
        assert_eq!(a.accuracy, b.accuracy);
        assert!((a.mcc.unwrap() - b.mcc.unwrap()).abs() < 1e-15);
        let m = metrics(&cm(0, 0, 10, 0)).unwrap();
        assert_eq!((m.tpr, m.f1, m.mcc), (None, None, None));
        assert!(matches!(metrics(&cm(0, 0, 0, 0)), Err(Error::EmptyEvaluation)));
    }

    #[test]
    fn auc_examples() {
        let sep: Vec<_> = (0..10).map(|i| (if i < 4 { 0.9 } else { 0.1 }, i < 4)).collect();
        assert_eq!(roc_from_samples(&sep).unwrap().auc, 1.0);
        let tied: Vec<_> = (0..10).map(|i| (0.3, i < 4)).collect();
        let r = roc_from_samples(&tied).unwrap();
        assert_eq!(r.auc, 0.5);
        assert_eq!(r.points, vec![(0.0, 0.0), (1.0, 1.0)]);
        let six = [(0.9, true), (0.8, true), (0.8, false), (0.4, true), (0.3, false), (0.1, false)];
        assert_eq!(roc_from_samples(&six).unwrap().auc, pair_oracle(&six));
        assert!(matches!(
            roc_from_samples(&[(0.1, true)]),
            Err(Error::DegenerateClasses { positives: 1, negatives: 0 })
        ));
    }

    fn sample_set() -> impl Strategy<Value = Vec<(f64, bool)>> {
        prop::collection::vec((0u8..20, any::<bool>()), 2..400)
            .prop_map(|v| v.into_iter().map(|(s, l)| (s as f64 / 20.0, l)).collect())
            .prop_filter("both classes", |v: &Vec<(f64, bool)>| {
                v.iter().any(|s| s.1) && v.iter().any(|s| !s.1)
            })
    }

    proptest! {
        #[test]
        fn auc_matches_pair_counting(samples in sample_set()) {
            prop_assert_eq!(roc_from_samples(&samples).unwrap().auc, pair_oracle(&samples));
        }

        #[test]
        fn auc_invariant_under_monotone_transform(samples in sample_set()) {
            let moved: Vec<_> = samples.iter().map(|&(s, l)| ((3.0 * s).exp() - 7.0, l)).collect();
            prop_assert_eq!(roc_from_samples(&samples).unwrap().auc, roc_from_samples(&moved).unwrap().auc);
        }

        #[test]
        fn roc_is_a_monotone_staircase(samples in sample_set()) {
            let pts = roc_from_samples(&samples).unwrap().points;
            prop_assert_eq!(pts[0], (0.0, 0.0));
            prop_assert_eq!(*pts.last().unwrap(), (1.0, 1.0));
            for w in pts.windows(2) {
                prop_assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
            }
        }

        #[test]
        fn confusion_ignores_pixels_outside_fov(
            bits in prop::collection::vec(any::<(bool, bool, bool, bool)>(), 36)
        ) {
            let pred = BinaryMask::new(6, 6, bits.iter().map(|b| b.0).collect()).unwrap();
            let gt = BinaryMask::new(6, 6, bits.iter().map(|b| b.1).collect()).unwrap();
            let fov = BinaryMask::new(6, 6, bits.iter().map(|b| b.2).collect()).unwrap();
            let noise: Vec<bool> = bits.iter().map(|b| b.3).collect();
            let mutate = |m: &BinaryMask| BinaryMask::from_fn(6, 6, |(r, c)| {
                let i = r * 6 + c;
                if fov.data()[i] { m.data()[i] } else { noise[i] }
            });
            prop_assert_eq!(
                confusion(&pred, &gt, Some(&fov)).unwrap(),
                confusion(&mutate(&pred), &mutate(&gt), Some(&fov)).unwrap()
            );
        }
    }
}
