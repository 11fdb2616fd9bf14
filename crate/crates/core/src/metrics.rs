//! Evaluation: confusion matrix, per-class detection rate / precision / F1,
//! and micro- or macro-averaged one-vs-rest ROC curves.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub num_classes: usize,
    pub counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.num_classes + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.num_classes).map(|i| self.get(i, i)).sum()
    }

    pub fn row(&self, truth: usize) -> &[u64] {
        &self.counts[truth * self.num_classes..(truth + 1) * self.num_classes]
    }
}

pub fn confusion(truth: &[usize], predicted: &[usize], num_classes: usize) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(Error::Shape(format!(
            "{} true labels vs {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::NoRows);
    }
    let mut counts = vec![0u64; num_classes * num_classes];
    for (&t, &p) in truth.iter().zip(predicted) {
        if t >= num_classes || p >= num_classes {
            return Err(Error::Config(format!(
                "label pair ({t}, {p}) out of range for {num_classes} classes"
            )));
        }
        counts[t * num_classes + p] += 1;
    }
    Ok(ConfusionMatrix { num_classes, counts })
}

/// Per-class figures. `None` marks a ratio whose denominator is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: usize,
    pub support: u64,
    pub detection_rate: Option<f64>,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub accuracy: f64,
    pub classes: Vec<ClassMetrics>,
    /// Means over the classes where the figure is defined.
    pub macro_detection_rate: Option<f64>,
    pub macro_precision: Option<f64>,
    pub macro_f1: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn defined_mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = values.flatten().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn class_report(cm: &ConfusionMatrix) -> Result<ClassReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::NoRows);
    }
    let c = cm.num_classes;
    let classes: Vec<ClassMetrics> = (0..c)
        .map(|i| {
            let tp = cm.get(i, i);
            let support: u64 = cm.row(i).iter().sum();
            let predicted: u64 = (0..c).map(|t| cm.get(t, i)).sum();
            let detection_rate = ratio(tp, support);
            let precision = ratio(tp, predicted);
            let f1 = match (precision, detection_rate) {
                (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
                (Some(_), Some(_)) => Some(0.0),
                _ => None,
            };
            ClassMetrics {
                class: i,
                support,
                detection_rate,
                precision,
                f1,
            }
        })
        .collect();
    Ok(ClassReport {
        accuracy: cm.trace() as f64 / total as f64,
        macro_detection_rate: defined_mean(classes.iter().map(|m| m.detection_rate)),
        macro_precision: defined_mean(classes.iter().map(|m| m.precision)),
        macro_f1: defined_mean(classes.iter().map(|m| m.f1)),
        classes,
    })
}

impl ClassReport {
    /// Aligned plain-text table; `names` falls back to class indices.
    pub fn to_text(&self, names: Option<&[String]>) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.5}"));
        let label = |i: usize| names.and_then(|n| n.get(i).cloned()).unwrap_or_else(|| i.to_string());
        let width = (0..self.classes.len())
            .map(|i| label(i).len())
            .max()
            .unwrap_or(5)
            .max(5);
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<width$}  {:>9}  {:>14}  {:>10}  {:>10}",
            "class", "support", "detection_rate", "precision", "f1"
        );
        for m in &self.classes {
            let _ = writeln!(
                s,
                "{:<width$}  {:>9}  {:>14}  {:>10}  {:>10}",
                label(m.class),
                m.support,
                fmt(m.detection_rate),
                fmt(m.precision),
                fmt(m.f1)
            );
        }
        let _ = writeln!(
            s,
            "{:<width$}  {:>9}  {:>14}  {:>10}  {:>10}",
            "macro",
            "",
            fmt(self.macro_detection_rate),
            fmt(self.macro_precision),
            fmt(self.macro_f1)
        );
        let _ = writeln!(s, "accuracy {:.6}", self.accuracy);
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    Micro,
    Macro,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocResult {
    pub mode: Averaging,
    /// `(fpr, tpr)` from `(0,0)` to `(1,1)`, fpr nondecreasing.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// Trapezoidal area under a piecewise-linear curve.
pub fn auc_from_points(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) * 0.5)
        .sum()
}

/// ROC of one binary problem. Thresholds sweep the distinct scores from the
/// top; tied scores move both rates in one diagonal step.
pub fn binary_roc(scores: &[f64], positive: &[bool]) -> Result<Vec<(f64, f64)>> {
    let p = positive.iter().filter(|&&b| b).count();
    let n = positive.len() - p;
    if p == 0 || n == 0 {
        return Err(Error::DegenerateRoc("need both positive and negative samples".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if positive[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / n as f64, tp as f64 / p as f64));
    }
    Ok(points)
}

/// Lowest and highest TPR a curve takes at `x` (they differ on vertical
/// segments).
fn tpr_span(points: &[(f64, f64)], x: f64) -> (f64, f64) {
    let mut lo = None;
    let mut hi = None;
    for &(f, t) in points {
        if f == x {
            lo.get_or_insert(t);
            hi = Some(t);
        }
    }
    if let (Some(lo), Some(hi)) = (lo, hi) {
        return (lo, hi);
    }
    let j = points.iter().position(|&(f, _)| f > x).unwrap_or(points.len() - 1);
    let (f0, t0) = points[j - 1];
    let (f1, t1) = points[j];
    let t = t0 + (t1 - t0) * (x - f0) / (f1 - f0);
    (t, t)
}

/// One-vs-rest ROC over `N×c` class scores.
///
/// Micro pools all `N·c` indicator/score pairs into one curve. Macro averages
/// the per-class curves of the classes present in `truth`; its AUC is the
/// mean of their AUCs.
pub fn roc(scores: &Matrix, truth: &[usize], mode: Averaging) -> Result<RocResult> {
    let c = scores.cols();
    if scores.rows() != truth.len() {
        return Err(Error::Shape(format!(
            "{} score rows for {} labels",
            scores.rows(),
            truth.len()
        )));
    }
    if let Some(&bad) = truth.iter().find(|&&l| l >= c) {
        return Err(Error::Config(format!("label {bad} out of range for {c} classes")));
    }
    let mut present = vec![false; c];
    truth.iter().for_each(|&l| present[l] = true);
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(Error::DegenerateRoc("truth contains fewer than two classes".into()));
    }
    match mode {
        Averaging::Micro => {
            let flags: Vec<bool> = truth.iter().flat_map(|&l| (0..c).map(move |j| j == l)).collect();
            let points = binary_roc(scores.as_slice(), &flags)?;
            let auc = auc_from_points(&points);
            Ok(RocResult { mode, points, auc })
        }
        Averaging::Macro => {
            let mut curves = Vec::new();
            for class in (0..c).filter(|&j| present[j]) {
                let s: Vec<f64> = scores.iter_rows().map(|r| r[class]).collect();
                let flags: Vec<bool> = truth.iter().map(|&l| l == class).collect();
                curves.push(binary_roc(&s, &flags)?);
            }
            let auc = curves.iter().map(|p| auc_from_points(p)).sum::<f64>() / curves.len() as f64;
            let mut grid: Vec<f64> = curves.iter().flatten().map(|&(f, _)| f).collect();
            grid.sort_by(f64::total_cmp);
            grid.dedup();
            let k = curves.len() as f64;
            let mut points = Vec::with_capacity(grid.len() * 2);
            for x in grid {
                let (lo, hi) = curves
                    .iter()
                    .map(|p| tpr_span(p, x))
                    .fold((0.0, 0.0), |(a, b), (l, h)| (a + l, b + h));
                points.push((x, lo / k));
                if hi != lo {
                    points.push((x, hi / k));
                }
            }
            Ok(RocResult { mode, points, auc })
        }
    }
}

pub fn write_roc_csv<W: std::io::Write>(roc: &RocResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["fpr", "tpr"])?;
    for (f, t) in &roc.points {
        w.write_record([format!("{f}"), format!("{t}")])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_roc_csv<R: std::io::Read>(input: R) -> Result<Vec<(f64, f64)>> {
    let mut r = csv::Reader::from_reader(input);
    let mut points = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |j: usize, name: &str| -> Result<f64> {
            rec.get(j).and_then(|s| s.parse().ok()).ok_or_else(|| Error::Parse {
                row: i + 1,
                column: name.into(),
                message: "not a number".into(),
            })
        };
        points.push((parse(0, "fpr")?, parse(1, "tpr")?));
    }
    Ok(points)
}
