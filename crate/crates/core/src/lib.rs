//! Core library for multimodal sarcasm target identification: box and sample
//! types, the structured response grammar, evaluation metrics, reward
//! shaping, coordinate-weighted loss masks, dataset tooling, and a small
//! policy-optimization simulator.

pub mod config;
pub mod dataset;
pub mod ftpo_sim;
pub mod loss_weights;
pub mod metrics;
pub mod parser;
pub mod rewards;
pub mod text;
pub mod types;

pub use config::{reward_total, RewardConfig, RewardVector, TextRewardMode};
pub use parser::{parse_response, render_response, FormatFailure, ParsedAnswer, ParsedResponse};
pub use rewards::{group_advantages, score_group, score_response};
pub use types::{bbox_iou, bbox_validate, BBox, BoxError, Label, PixelBox, Sample, Split};
