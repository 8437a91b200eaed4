//! CSV output for per-image metrics and ROC curves.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::metrics::MetricReport;
use crate::error::{Error, Result};

pub const REPORT_HEADER: &str = "image_id,tp_rate,tn_rate,accuracy,auc,f1,mcc";
/// Written in place of a metric whose denominator is zero or that was not computed.
pub const UNDEFINED: &str = "undefined";

#[derive(Debug, Clone, PartialEq)]
pub struct ImageReport {
    pub id: String,
    pub metrics: MetricReport,
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| UNDEFINED.to_string(), |x| format!("{x:.6}"))
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let defined: Vec<f64> = values.flatten().collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

/// Unweighted per-image mean of every metric, skipping images where the
/// metric is undefined. `None` for an empty report list.
pub fn mean_metrics(reports: &[ImageReport]) -> Option<MetricReport> {
    if reports.is_empty() {
        return None;
    }
    let col = |f: fn(&MetricReport) -> Option<f64>| mean_of(reports.iter().map(|r| f(&r.metrics)));
    Some(MetricReport {
        tpr: col(|m| m.tpr),
        tnr: col(|m| m.tnr),
        accuracy: col(|m| Some(m.accuracy)).expect("accuracy always defined"),
        f1: col(|m| m.f1),
        mcc: col(|m| m.mcc),
        auc: col(|m| m.auc),
        roc: Vec::new(),
    })
}

fn row(out: &mut String, id: &str, m: &MetricReport) {
    let _ = writeln!(
        out,
        "{id},{},{},{},{},{},{}",
        cell(m.tpr),
        cell(m.tnr),
        cell(Some(m.accuracy)),
        cell(m.auc),
        cell(m.f1),
        cell(m.mcc)
    );
}

/// Report CSV text: one row per image in order, then a `mean` row when
/// there is more than one image.
pub fn report_csv(reports: &[ImageReport]) -> String {
    let mut out = format!("{REPORT_HEADER}\n");
    for r in reports {
        row(&mut out, &r.id, &r.metrics);
    }
    if reports.len() > 1 {
        if let Some(mean) = mean_metrics(reports) {
            row(&mut out, "mean", &mean);
        }
    }
    out
}

pub fn write_report(reports: &[ImageReport], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, report_csv(reports)).map_err(|e| Error::write(path, e))
}

pub fn roc_csv(points: &[(f64, f64)]) -> String {
    let mut out = String::from("fpr,tpr\n");
    for (fpr, tpr) in points {
        let _ = writeln!(out, "{fpr:.6},{tpr:.6}");
    }
    out
}

pub fn write_roc(points: &[(f64, f64)], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, roc_csv(points)).map_err(|e| Error::write(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(acc: f64, mcc: Option<f64>) -> MetricReport {
        MetricReport {
            tpr: Some(0.5),
            tnr: Some(1.0),
            accuracy: acc,
            f1: Some(2.0 / 3.0),
            mcc,
            auc: None,
            roc: Vec::new(),
        }
    }

    #[test]
    fn csv_layout_and_undefined_token() {
        let rows = vec![
            ImageReport { id: "a".into(), metrics: report(0.9, None) },
            ImageReport { id: "b".into(), metrics: report(0.8, Some(0.25)) },
        ];
        let text = report_csv(&rows);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], REPORT_HEADER);
        assert_eq!(lines[1], "a,0.500000,1.000000,0.900000,undefined,0.666667,undefined");
        assert_eq!(lines[3], "mean,0.500000,1.000000,0.850000,undefined,0.666667,0.250000");
    }

    #[test]
    fn roc_csv_lists_points() {
        assert_eq!(roc_csv(&[(0.0, 0.0), (1.0, 1.0)]), "fpr,tpr\n0.000000,0.000000\n1.000000,1.000000\n");
    }
}
