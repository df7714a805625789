//! Reward weighting configuration and the per-completion reward vector.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default reward weights `(fmt, acc, box, txt, over)`.
pub const DEFAULT_BETAS: [f64; 5] = [0.05, 0.15, 0.4, 0.4, 0.3];
/// Default weight applied to coordinate tokens in the supervised loss.
pub const DEFAULT_LAMBDA_COORD: f64 = 10.0;
/// Default number of completions sampled per prompt.
pub const DEFAULT_GROUP_SIZE: usize = 4;

/// How the textual-target reward compares keyword phrases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextRewardMode {
    /// Binary equality of normalized keyword-phrase sets.
    #[default]
    ExactSet,
    /// Graded token-set F1 (ablation mode).
    TokenF1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub beta4: f64,
    pub beta5: f64,
    pub n_box_max: usize,
    pub think_word_cap: usize,
    pub copy_ratio_cap: f64,
    pub epsilon_std: f64,
    pub text_reward_mode: TextRewardMode,
}

impl Default for RewardConfig {
    fn default() -> Self {
        let [beta1, beta2, beta3, beta4, beta5] = DEFAULT_BETAS;
        RewardConfig {
            beta1,
            beta2,
            beta3,
            beta4,
            beta5,
            n_box_max: 3,
            think_word_cap: 400,
            copy_ratio_cap: 0.8,
            epsilon_std: 1e-6,
            text_reward_mode: TextRewardMode::ExactSet,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("reward weight {name} must be a nonnegative finite number, got {value}")]
    NegativeWeight { name: &'static str, value: f64 },
    #[error("n_box_max must be at least 1")]
    ZeroBoxCap,
    #[error("copy_ratio_cap must lie in (0, 1], got {0}")]
    CopyRatio(f64),
    #[error("epsilon_std must be a nonnegative finite number, got {0}")]
    EpsilonStd(f64),
}

impl RewardConfig {
    pub fn betas(&self) -> [f64; 5] {
        [self.beta1, self.beta2, self.beta3, self.beta4, self.beta5]
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        const NAMES: [&str; 5] = ["beta1", "beta2", "beta3", "beta4", "beta5"];
        for (name, value) in NAMES.into_iter().zip(self.betas()) {
            if !(value.is_finite() && value >= 0.0) {
                return Err(ConfigError::NegativeWeight { name, value });
            }
        }
        if self.n_box_max < 1 {
            return Err(ConfigError::ZeroBoxCap);
        }
        if !(self.copy_ratio_cap > 0.0 && self.copy_ratio_cap <= 1.0) {
            return Err(ConfigError::CopyRatio(self.copy_ratio_cap));
        }
        if !(self.epsilon_std.is_finite() && self.epsilon_std >= 0.0) {
            return Err(ConfigError::EpsilonStd(self.epsilon_std));
        }
        Ok(())
    }

    /// Lowest and highest reachable totals.
    pub fn total_bounds(&self) -> (f64, f64) {
        (-self.beta5, self.beta1 + self.beta2 + self.beta3 + self.beta4)
    }
}

/// The five reward components of one completion plus their weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardVector {
    pub fmt: f64,
    pub acc: f64,
    #[serde(rename = "box")]
    pub box_: f64,
    pub txt: f64,
    pub over: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("reward component {name} = {value} lies outside [0, 1]")]
pub struct ComponentOutOfRange {
    pub name: &'static str,
    pub value: f64,
}

impl RewardVector {
    pub fn components(fmt: f64, acc: f64, box_: f64, txt: f64, over: f64) -> Self {
        RewardVector { fmt, acc, box_, txt, over, total: 0.0 }
    }
}

/// Weighted total `b1*fmt + b2*acc + b3*box + b4*txt - b5*over`; also stored
/// into `v.total`.
pub fn reward_total(v: &mut RewardVector, cfg: &RewardConfig) -> Result<f64, ComponentOutOfRange> {
    let named = [("fmt", v.fmt), ("acc", v.acc), ("box", v.box_), ("txt", v.txt), ("over", v.over)];
    for (name, value) in named {
        if !(0.0..=1.0).contains(&value) {
            return Err(ComponentOutOfRange { name, value });
        }
    }
    let total =
        cfg.beta1 * v.fmt + cfg.beta2 * v.acc + cfg.beta3 * v.box_ + cfg.beta4 * v.txt - cfg.beta5 * v.over;
    v.total = total;
    Ok(total)
}
