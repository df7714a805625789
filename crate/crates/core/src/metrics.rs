//! Evaluation metrics: sarcasm classification, textual-target EM and token F1,
//! and COCO-style average precision for visual targets.
//!
//! All ratios are in `[0, 1]`; display layers multiply by 100.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parser::{ParsedAnswer, ParsedResponse};
use crate::text;
use crate::types::{BBox, Label, Sample};

/// Number of recall sample points used by the interpolated AP.
pub const RECALL_POINTS: usize = 101;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("length mismatch: {preds} predictions vs {refs} references")]
    LengthMismatch { preds: usize, refs: usize },
    #[error("empty evaluation set")]
    Empty,
    #[error("detection refers to unknown image `{0}`")]
    UnknownImage(String),
    #[error("no IoU thresholds given")]
    EmptyThresholds,
    #[error("IoU threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("detection confidence {0} outside [0, 1]")]
    InvalidConfidence(f64),
    #[error("prediction/reference ids are not aligned: {0}")]
    IdMismatch(String),
}

/// Confusion counts with the sarcastic class as positive. Merging is
/// associative and commutative, so partial counts from workers can be summed
/// in any order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn record(&mut self, pred: Label, gt: Label) {
        match (pred.is_sarcastic(), gt.is_sarcastic()) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }

    pub fn merge(self, other: ConfusionCounts) -> ConfusionCounts {
        ConfusionCounts {
            tp: self.tp + other.tp,
            fp: self.fp + other.fp,
            tn: self.tn + other.tn,
            fn_: self.fn_ + other.fn_,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn report(&self) -> ClassificationReport {
        let positive = class_prf(self.tp, self.fp, self.fn_);
        // Negative class: swap roles of the counts.
        let negative = class_prf(self.tn, self.fn_, self.fp);
        ClassificationReport {
            accuracy: ratio(self.tp + self.tn, self.total()),
            precision: positive.0,
            recall: positive.1,
            macro_f1: (positive.2 + negative.2) / 2.0,
            positive_f1: positive.2,
            counts: *self,
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// (precision, recall, f1) of one class from its own tp/fp/fn.
fn class_prf(tp: u64, fp: u64, fn_: u64) -> (f64, f64, f64) {
    let p = ratio(tp, tp + fp);
    let r = ratio(tp, tp + fn_);
    (p, r, f1(p, r))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub macro_f1: f64,
    /// F1 of the sarcastic class alone, reported next to the macro average.
    pub positive_f1: f64,
    #[serde(flatten)]
    pub counts: ConfusionCounts,
}

pub fn classification_report(preds: &[Label], refs: &[Label]) -> Result<ClassificationReport, MetricsError> {
    if preds.len() != refs.len() {
        return Err(MetricsError::LengthMismatch { preds: preds.len(), refs: refs.len() });
    }
    if preds.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut counts = ConfusionCounts::default();
    for (&p, &g) in preds.iter().zip(refs) {
        counts.record(p, g);
    }
    Ok(counts.report())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmMode {
    /// Case-fold, strip edge punctuation per token, collapse whitespace.
    #[default]
    Normalized,
    /// Raw string equality.
    Strict,
}

pub fn text_em(pred: &str, gt: &str, mode: EmMode) -> f64 {
    let equal = match mode {
        EmMode::Normalized => text::normalize(pred) == text::normalize(gt),
        EmMode::Strict => pred == gt,
    };
    if equal {
        1.0
    } else {
        0.0
    }
}

/// Mean exact match over `(pred, gt)` pairs; 0 for an empty corpus.
pub fn corpus_em<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>, mode: EmMode) -> f64 {
    let (sum, n) = pairs.into_iter().fold((0.0, 0usize), |(s, n), (p, g)| (s + text_em(p, g, mode), n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// F1 over normalized token sets. Both empty is a perfect match.
pub fn text_token_f1(pred: &str, gt: &str) -> f64 {
    let p = text::token_set(pred);
    let g = text::token_set(gt);
    match (p.is_empty(), g.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let common = p.intersection(&g).count() as f64;
    f1(common / p.len() as f64, common / g.len() as f64)
}

/// One scored predicted box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub image_id: String,
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub confidence: f64,
}

/// IoU thresholds `0.50, 0.55, …, 0.95`, each the double nearest `k/100`.
pub fn coco_thresholds() -> Vec<f64> {
    (0..10).map(|i| f64::from(50 + 5 * i) / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct APReport {
    pub ap: f64,
    pub ap50: f64,
    pub ap75: f64,
    pub per_threshold: BTreeMap<String, f64>,
}

fn threshold_key(t: f64) -> String {
    let two = format!("{t:.2}");
    if two.parse::<f64>() == Ok(t) {
        two
    } else {
        t.to_string()
    }
}

pub fn visual_ap(
    dets: &[Detection],
    gts: &BTreeMap<String, Vec<BBox>>,
    thresholds: &[f64],
) -> Result<APReport, MetricsError> {
    if thresholds.is_empty() {
        return Err(MetricsError::EmptyThresholds);
    }
    if let Some(&t) = thresholds.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(MetricsError::InvalidThreshold(t));
    }
    for d in dets {
        if !gts.contains_key(&d.image_id) {
            return Err(MetricsError::UnknownImage(d.image_id.clone()));
        }
        if !(0.0..=1.0).contains(&d.confidence) {
            return Err(MetricsError::InvalidConfidence(d.confidence));
        }
    }

    let mut order: Vec<usize> = (0..dets.len()).collect();
    // Stable: equal confidences keep input order.
    order.sort_by(|&a, &b| dets[b].confidence.total_cmp(&dets[a].confidence));
    let n_gt: usize = gts.values().map(Vec::len).sum();

    let mut per_threshold = BTreeMap::new();
    let mut sum = 0.0;
    for &t in thresholds {
        let ap = ap_at_threshold(dets, &order, gts, n_gt, t);
        per_threshold.insert(threshold_key(t), ap);
        sum += ap;
    }
    Ok(APReport {
        ap: sum / thresholds.len() as f64,
        ap50: ap_at_threshold(dets, &order, gts, n_gt, 0.5),
        ap75: ap_at_threshold(dets, &order, gts, n_gt, 0.75),
        per_threshold,
    })
}

fn ap_at_threshold(
    dets: &[Detection],
    order: &[usize],
    gts: &BTreeMap<String, Vec<BBox>>,
    n_gt: usize,
    threshold: f64,
) -> f64 {
    if n_gt == 0 {
        return if dets.is_empty() { 1.0 } else { 0.0 };
    }
    let mut used: HashMap<&str, Vec<bool>> =
        gts.iter().map(|(id, boxes)| (id.as_str(), vec![false; boxes.len()])).collect();

    let mut recall = Vec::with_capacity(order.len());
    let mut precision = Vec::with_capacity(order.len());
    let (mut tp, mut fp) = (0usize, 0usize);
    for &i in order {
        let det = &dets[i];
        let flags = used.get_mut(det.image_id.as_str()).expect("image ids checked");
        let mut best: Option<(usize, f64)> = None;
        for (j, gt) in gts[&det.image_id].iter().enumerate() {
            if flags[j] {
                continue;
            }
            let iou = det.bbox.iou(gt);
            if best.is_none_or(|(_, b)| iou > b) {
                best = Some((j, iou));
            }
        }
        match best {
            Some((j, iou)) if iou >= threshold => {
                flags[j] = true;
                tp += 1;
            }
            _ => fp += 1,
        }
        recall.push(tp as f64 / n_gt as f64);
        precision.push(tp as f64 / (tp + fp) as f64);
    }
    interpolated_ap(&recall, &precision)
}

/// 101-point interpolated area under a PR sequence whose recall is
/// nondecreasing.
fn interpolated_ap(recall: &[f64], precision: &[f64]) -> f64 {
    let mut envelope = precision.to_vec();
    for k in (1..envelope.len()).rev() {
        envelope[k - 1] = envelope[k - 1].max(envelope[k]);
    }
    let total: f64 = (0..RECALL_POINTS)
        .map(|i| {
            let r = i as f64 / 100.0;
            let k = recall.partition_point(|&rc| rc < r);
            envelope.get(k).copied().unwrap_or(0.0)
        })
        .sum();
    total / RECALL_POINTS as f64
}

/// Combined report over classification, textual and visual targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MstiReport {
    #[serde(flatten)]
    pub classification: ClassificationReport,
    pub em: f64,
    pub token_f1: f64,
    #[serde(flatten)]
    pub visual: APReport,
    pub n_samples: usize,
    pub format_failures: usize,
}

/// Evaluates predictions against references, matching by id. Predicted boxes
/// become detections with confidence 1.0 in reference order. Malformed
/// responses count as "not sarcastic" with no targets.
pub fn msti_evaluate(preds: &[(String, ParsedResponse)], refs: &[Sample]) -> Result<MstiReport, MetricsError> {
    if refs.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut by_id: HashMap<&str, &ParsedResponse> = HashMap::with_capacity(preds.len());
    for (id, p) in preds {
        if by_id.insert(id.as_str(), p).is_some() {
            return Err(MetricsError::IdMismatch(format!("duplicate prediction id `{id}`")));
        }
    }
    if preds.len() != refs.len() {
        return Err(MetricsError::IdMismatch(format!("{} predictions for {} references", preds.len(), refs.len())));
    }

    let empty = ParsedAnswer::default();
    let mut counts = ConfusionCounts::default();
    let (mut em_sum, mut f1_sum) = (0.0, 0.0);
    let mut format_failures = 0;
    let mut dets = Vec::new();
    let mut gts = BTreeMap::new();
    for sample in refs {
        let resp = by_id
            .get(sample.id.as_str())
            .ok_or_else(|| MetricsError::IdMismatch(format!("no prediction for `{}`", sample.id)))?;
        let answer = if resp.format_ok {
            &resp.answer
        } else {
            format_failures += 1;
            &empty
        };
        counts.record(answer.label, sample.label);
        em_sum += text_em(&answer.keywords, &sample.text_target, EmMode::Normalized);
        f1_sum += text_token_f1(&answer.keywords, &sample.text_target);
        if gts.insert(sample.id.clone(), sample.visual_targets.clone()).is_some() {
            return Err(MetricsError::IdMismatch(format!("duplicate reference id `{}`", sample.id)));
        }
        dets.extend(answer.boxes.iter().map(|b| Detection { image_id: sample.id.clone(), bbox: *b, confidence: 1.0 }));
    }
    let n = refs.len() as f64;
    Ok(MstiReport {
        classification: counts.report(),
        em: em_sum / n,
        token_f1: f1_sum / n,
        visual: visual_ap(&dets, &gts, &coco_thresholds())?,
        n_samples: refs.len(),
        format_failures,
    })
}
