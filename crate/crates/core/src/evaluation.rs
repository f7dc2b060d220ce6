//! Greedy detection-to-ground-truth matching, precision/recall/F1 and the
//! best-F1 threshold sweep.

use serde::{Deserialize, Serialize};

use crate::detection::{Detection, DetectionList};
use crate::error::{Error, Result};

/// Default matching tolerance, in pixels.
pub const DEFAULT_TOLERANCE: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GtPoint {
    pub row: f64,
    pub col: f64,
}

/// Ground-truth cell positions in pixel coordinates.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GroundTruth(Vec<GtPoint>);

impl GroundTruth {
    pub fn new(points: Vec<GtPoint>) -> Result<Self> {
        if let Some(i) = points.iter().position(|p| !(p.row.is_finite() && p.col.is_finite())) {
            return Err(Error::invalid(
                format!("ground_truth[{i}]"),
                "coordinates must be finite",
            ));
        }
        Ok(Self(points))
    }

    pub fn from_coords(coords: &[(f64, f64)]) -> Result<Self> {
        Self::new(coords.iter().map(|&(row, col)| GtPoint { row, col }).collect())
    }

    /// Checks every point lies inside an image of the given shape.
    pub fn check_bounds(&self, rows: usize, cols: usize) -> Result<()> {
        let (mr, mc) = ((rows - 1) as f64, (cols - 1) as f64);
        match self
            .0
            .iter()
            .position(|p| p.row < 0.0 || p.col < 0.0 || p.row > mr || p.col > mc)
        {
            Some(i) => Err(Error::invalid(
                format!("ground_truth[{i}]"),
                format!("({}, {}) outside a {rows}x{cols} image", self.0[i].row, self.0[i].col),
            )),
            None => Ok(()),
        }
    }

    pub fn points(&self) -> &[GtPoint] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MatchResult {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    /// `(detection index, ground-truth index)` for every true positive.
    pub pairs: Vec<(usize, usize)>,
}

/// Per-detection outcome of the greedy pass: the matched ground-truth index.
fn greedy_assign(dets: &[Detection], gt: &GroundTruth, tol: f64) -> Vec<Option<usize>> {
    let mut taken = vec![false; gt.len()];
    dets.iter()
        .map(|d| {
            let mut best: Option<(f64, usize)> = None;
            for (j, g) in gt.points().iter().enumerate() {
                if taken[j] {
                    continue;
                }
                let dist = (d.row - g.row).hypot(d.col - g.col);
                // strict `<` keeps the lowest index on distance ties
                if dist <= tol && best.is_none_or(|(bd, _)| dist < bd) {
                    best = Some((dist, j));
                }
            }
            best.map(|(_, j)| {
                taken[j] = true;
                j
            })
        })
        .collect()
}

/// Greedy matching in the given detection order: each detection takes the
/// nearest unmatched ground-truth point within `tol` (Euclidean).
pub fn match_detections(dets: &[Detection], gt: &GroundTruth, tol: f64) -> MatchResult {
    let pairs: Vec<(usize, usize)> = greedy_assign(dets, gt, tol)
        .into_iter()
        .enumerate()
        .filter_map(|(i, g)| g.map(|j| (i, j)))
        .collect();
    let tp = pairs.len();
    MatchResult {
        tp,
        fp: dets.len() - tp,
        fn_: gt.len() - tp,
        pairs,
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// `(precision, recall, F1)`; each is 0 when its denominator is 0.
pub fn prf1(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64) {
    let tp_f = tp as f64;
    let pre = ratio(tp_f, (tp + fp) as f64);
    let rec = ratio(tp_f, (tp + fn_) as f64);
    let f1 = ratio(2.0 * pre * rec, pre + rec);
    (pre, rec, f1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Detections with pseudo-likelihood `>= threshold` are kept.
    /// `+∞` (no detections) serializes as the string `"inf"`.
    #[serde(with = "threshold_serde")]
    pub threshold: f64,
}

impl EvalReport {
    fn from_counts(tp: usize, fp: usize, fn_: usize, threshold: f64) -> Self {
        let (precision, recall, f1) = prf1(tp, fp, fn_);
        Self {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1,
            threshold,
        }
    }

    /// Human-readable one-paragraph summary.
    pub fn summary(&self) -> String {
        format!(
            "threshold {}: TP={} FP={} FN={} precision={:.4} recall={:.4} F1={:.4}",
            self.threshold, self.tp, self.fp, self.fn_, self.precision, self.recall, self.f1
        )
    }
}

mod threshold_serde {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *t == f64::INFINITY {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*t)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Repr::Str(s) => Err(de::Error::custom(format!("invalid threshold {s:?}"))),
        }
    }
}

/// Reports for every candidate threshold, from `+∞` down to the smallest
/// pseudo-likelihood. Greedy matching of a prefix is a prefix of the full
/// greedy pass, so one pass serves every threshold.
pub fn threshold_sweep(dets: &DetectionList, gt: &GroundTruth, tol: f64) -> Vec<EvalReport> {
    let assigned = greedy_assign(dets.as_slice(), gt, tol);
    let mut out = vec![EvalReport::from_counts(0, 0, gt.len(), f64::INFINITY)];
    let mut tp = 0;
    for (i, (d, a)) in dets.iter().zip(&assigned).enumerate() {
        tp += usize::from(a.is_some());
        let last_of_value = dets
            .as_slice()
            .get(i + 1)
            .is_none_or(|next| next.pseudo_likelihood != d.pseudo_likelihood);
        if last_of_value {
            let kept = i + 1;
            out.push(EvalReport::from_counts(
                tp,
                kept - tp,
                gt.len() - tp,
                d.pseudo_likelihood,
            ));
        }
    }
    out
}

/// The report with the highest F1 over all candidate thresholds; ties go
/// to the largest threshold.
pub fn best_threshold(dets: &DetectionList, gt: &GroundTruth, tol: f64) -> EvalReport {
    let mut best: Option<EvalReport> = None;
    for r in threshold_sweep(dets, gt, tol) {
        if best.as_ref().is_none_or(|b| r.f1 > b.f1) {
            best = Some(r);
        }
    }
    best.expect("sweep always contains the +inf candidate")
}
