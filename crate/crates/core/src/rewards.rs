//! Per-completion rewards and group-relative advantages.
//!
//! Each completion earns five components (format, label accuracy, box IoU,
//! keyword match, over-generation penalty) that are combined by
//! [`reward_total`]. Totals within a sampling group are then standardized
//! into advantages.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{reward_total, RewardConfig, RewardVector, TextRewardMode};
use crate::metrics::text_token_f1;
use crate::parser::{parse_response, ParsedResponse};
use crate::text;
use crate::types::{BBox, Label, Sample};

/// Inputs shorter than this never trigger the copy penalty.
pub const MIN_COPY_INPUT_TOKENS: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RewardError {
    #[error("group needs at least 2 completions, got {0}")]
    GroupTooSmall(usize),
    #[error(transparent)]
    Component(#[from] crate::config::ComponentOutOfRange),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupScores {
    pub totals: Vec<f64>,
    pub advantages: Vec<f64>,
}

pub fn reward_format(r: &ParsedResponse) -> f64 {
    if r.format_ok {
        1.0
    } else {
        0.0
    }
}

pub fn reward_accuracy(pred: Label, gt: Label) -> f64 {
    if pred == gt {
        1.0
    } else {
        0.0
    }
}

/// Greedy descending-IoU pairing; the IoU sum is divided by
/// `max(|pred|, |gt|)` so unmatched boxes on either side dilute the reward.
pub fn reward_box(pred: &[BBox], gt: &[BBox]) -> f64 {
    if gt.is_empty() || pred.is_empty() {
        return if gt.is_empty() && pred.is_empty() { 1.0 } else { 0.0 };
    }
    let mut pairs: Vec<(usize, usize, f64)> = Vec::with_capacity(pred.len() * gt.len());
    for (i, p) in pred.iter().enumerate() {
        for (j, g) in gt.iter().enumerate() {
            pairs.push((i, j, p.iou(g)));
        }
    }
    pairs.sort_by(|a, b| b.2.total_cmp(&a.2));
    let mut pred_used = vec![false; pred.len()];
    let mut gt_used = vec![false; gt.len()];
    let mut sum = 0.0;
    for (i, j, iou) in pairs {
        if pred_used[i] || gt_used[j] {
            continue;
        }
        pred_used[i] = true;
        gt_used[j] = true;
        sum += iou;
    }
    sum / pred.len().max(gt.len()) as f64
}

/// 1 iff the comma-separated keyword phrase sets agree after normalization.
pub fn reward_text(pred: &str, gt: &str) -> f64 {
    if text::keyword_phrases(pred) == text::keyword_phrases(gt) {
        1.0
    } else {
        0.0
    }
}

fn reward_text_with(mode: TextRewardMode, pred: &str, gt: &str) -> f64 {
    match mode {
        TextRewardMode::ExactSet => reward_text(pred, gt),
        TextRewardMode::TokenF1 => text_token_f1(pred, gt),
    }
}

/// Which over-generation triggers fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PenaltyTriggers {
    pub box_excess: bool,
    pub verbose: bool,
    pub copying: bool,
}

impl PenaltyTriggers {
    pub fn value(&self) -> f64 {
        let fired = [self.box_excess, self.verbose, self.copying].iter().filter(|&&f| f).count();
        fired as f64 / 3.0
    }
}

pub fn penalty_triggers(r: &ParsedResponse, input_text: &str, cfg: &RewardConfig) -> PenaltyTriggers {
    let box_excess = r.answer.boxes.len() > cfg.n_box_max;
    let verbose = r.think.split_whitespace().count() > cfg.think_word_cap;

    let input_tokens = text::normalized_tokens(input_text);
    let copying = if input_tokens.len() >= MIN_COPY_INPUT_TOKENS {
        let input_set: std::collections::BTreeSet<_> = input_tokens.into_iter().collect();
        let keyword_set = text::token_set(&r.answer.keywords);
        let covered = input_set.iter().filter(|t| keyword_set.contains(*t)).count();
        covered as f64 / input_set.len() as f64 >= cfg.copy_ratio_cap
    } else {
        false
    };
    PenaltyTriggers { box_excess, verbose, copying }
}

/// Mean of three binary sub-penalties: too many boxes, too long a rationale,
/// keywords copying most of the input text.
pub fn penalty_over(r: &ParsedResponse, input_text: &str, cfg: &RewardConfig) -> f64 {
    penalty_triggers(r, input_text, cfg).value()
}

/// All five components and the weighted total for one parsed completion.
pub fn score_response(r: &ParsedResponse, gt: &Sample, cfg: &RewardConfig) -> Result<RewardVector, RewardError> {
    let mut v = RewardVector::components(
        reward_format(r),
        reward_accuracy(r.answer.label, gt.label),
        reward_box(&r.answer.boxes, &gt.visual_targets),
        reward_text_with(cfg.text_reward_mode, &r.answer.keywords, &gt.text_target),
        penalty_over(r, &gt.text, cfg),
    );
    reward_total(&mut v, cfg)?;
    Ok(v)
}

/// `(total - mean) / std` with the population standard deviation, or all
/// zeros when the spread is below `epsilon_std`.
pub fn group_advantages(totals: &[f64], epsilon_std: f64) -> Vec<f64> {
    if totals.is_empty() {
        return Vec::new();
    }
    let n = totals.len() as f64;
    let mean = totals.iter().sum::<f64>() / n;
    let var = totals.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std.is_nan() || std < epsilon_std || std == 0.0 {
        return vec![0.0; totals.len()];
    }
    totals.iter().map(|t| (t - mean) / std).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredGroup {
    pub rewards: Vec<RewardVector>,
    #[serde(flatten)]
    pub scores: GroupScores,
}

pub fn score_group<S: AsRef<str>>(
    completions: &[S],
    gt: &Sample,
    cfg: &RewardConfig,
) -> Result<ScoredGroup, RewardError> {
    if completions.len() < 2 {
        return Err(RewardError::GroupTooSmall(completions.len()));
    }
    let rewards = completions
        .iter()
        .map(|c| score_response(&parse_response(c.as_ref()), gt, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let totals: Vec<f64> = rewards.iter().map(|v| v.total).collect();
    let advantages = group_advantages(&totals, cfg.epsilon_std);
    Ok(ScoredGroup { rewards, scores: GroupScores { totals, advantages } })
}
