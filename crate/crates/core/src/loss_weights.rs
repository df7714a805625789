//! Coordinate-aware token weights for supervised fine-tuning.
//!
//! Tokens overlapping a box coordinate in the answer get weight
//! `lambda_coord`, every other token weight 1. The module never tokenizes:
//! callers pass character spans from their own tokenizer.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parser::{extract_coordinate_spans, CoordSpan};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LossError {
    #[error("bad token spans: {0}")]
    BadSpans(String),
    #[error("lambda_coord must be a finite value >= 1, got {0}")]
    BadLambda(f64),
    #[error("length mismatch: {logprobs} log-probabilities vs {weights} weights")]
    LengthMismatch { logprobs: usize, weights: usize },
    #[error("log-probability at position {index} is {value}; must be <= 0")]
    PositiveLogProb { index: usize, value: f64 },
}

/// Character span `[start, end)` of token `index` in the target text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSpan {
    pub index: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMask {
    pub weights: Vec<f64>,
}

impl WeightMask {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

fn check_spans(target_chars: usize, tokens: &[TokenSpan]) -> Result<(), LossError> {
    let mut prev_end = 0;
    for (pos, t) in tokens.iter().enumerate() {
        if t.index != pos {
            return Err(LossError::BadSpans(format!("token {pos} carries index {}", t.index)));
        }
        if t.start > t.end || t.end > target_chars {
            return Err(LossError::BadSpans(format!("token {pos} span {}..{} out of range", t.start, t.end)));
        }
        if t.start < prev_end {
            return Err(LossError::BadSpans(format!("token {pos} overlaps or precedes its predecessor")));
        }
        prev_end = t.end;
    }
    Ok(())
}

fn intersects(t: &TokenSpan, c: &CoordSpan) -> bool {
    t.start < c.end && c.start < t.end
}

/// Per-token weights: `lambda_coord` for tokens intersecting a coordinate
/// digit run of the first Answer block, 1 otherwise.
pub fn weight_mask(target: &str, tokens: &[TokenSpan], lambda_coord: f64) -> Result<WeightMask, LossError> {
    if !(lambda_coord.is_finite() && lambda_coord >= 1.0) {
        return Err(LossError::BadLambda(lambda_coord));
    }
    check_spans(target.chars().count(), tokens)?;
    let coords = extract_coordinate_spans(target);
    let weights = tokens
        .iter()
        .map(|t| if coords.iter().any(|c| intersects(t, c)) { lambda_coord } else { 1.0 })
        .collect();
    Ok(WeightMask { weights })
}

/// Weighted negative log-likelihood `-sum(w_t * logp_t)`.
pub fn weighted_nll(logprobs: &[f64], mask: &WeightMask) -> Result<f64, LossError> {
    if logprobs.len() != mask.len() {
        return Err(LossError::LengthMismatch { logprobs: logprobs.len(), weights: mask.len() });
    }
    let mut total = 0.0;
    for (index, (&lp, &w)) in logprobs.iter().zip(&mask.weights).enumerate() {
        if lp.is_nan() || lp > 0.0 {
            return Err(LossError::PositiveLogProb { index, value: lp });
        }
        total -= w * lp;
    }
    Ok(total)
}

/// JSON bridge document: `{target, token_spans, lambda}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRequest {
    pub target: String,
    pub token_spans: Vec<TokenSpan>,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
}

fn default_lambda() -> f64 {
    crate::config::DEFAULT_LAMBDA_COORD
}
