//! The `--config` document: `{"reward": {...}, "ftpo_sim": {...}, "judge": {...}}`.
//! Every section is optional and partial; missing fields keep their defaults.

use std::path::Path;

use msti_core::ftpo_sim::SimConfig;
use msti_core::RewardConfig;
use msti_judge::JudgeClientConfig;
use serde::Deserialize;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub reward: RewardConfig,
    #[serde(default)]
    pub ftpo_sim: SimConfig,
    #[serde(default)]
    pub judge: Option<JudgeClientConfig>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let cfg: ConfigFile = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        cfg.reward.validate().map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(cfg)
    }
}

/// Applies a partial JSON object of reward fields on top of `base`.
pub fn merge_reward_overrides(base: &RewardConfig, overrides: &serde_json::Value) -> Result<RewardConfig, String> {
    let patch = overrides.as_object().ok_or("config overrides must be a JSON object")?;
    let mut merged = serde_json::to_value(base).expect("config serializes");
    let target = merged.as_object_mut().expect("config is an object");
    for (k, v) in patch {
        target.insert(k.clone(), v.clone());
    }
    let cfg: RewardConfig = serde_json::from_value(merged).map_err(|e| e.to_string())?;
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}
