use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Visual perception, reasoning and consistency, each on a 1..=5 scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeScores {
    #[serde(rename = "V")]
    pub v: u8,
    #[serde(rename = "R")]
    pub r: u8,
    #[serde(rename = "C")]
    pub c: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoreError {
    #[error("reply is not a JSON object: {0}")]
    MalformedJson(String),
    #[error("missing key `{0}`")]
    MissingKey(&'static str),
    #[error("unexpected key `{0}`")]
    UnexpectedKey(String),
    #[error("score {key}={value} is not an integer in 1..=5")]
    OutOfRangeScore { key: &'static str, value: String },
}

fn strip_fences(reply: &str) -> &str {
    let t = reply.trim();
    let Some(body) = t.strip_prefix("```") else { return t };
    let Some(body) = body.strip_suffix("```") else { return t };
    // drop an info string such as `json` on the opening fence line
    match body.find('\n') {
        Some(nl) if !body[..nl].contains('{') => body[nl + 1..].trim(),
        _ => body.trim(),
    }
}

/// Parses `{"V": int, "R": int, "C": int}`. Unless `strict`, one surrounding
/// markdown code fence is removed first.
pub fn parse_judge_scores(reply: &str, strict: bool) -> Result<JudgeScores, ScoreError> {
    let body = if strict { reply.trim() } else { strip_fences(reply) };
    let value: serde_json::Value = serde_json::from_str(body).map_err(|e| ScoreError::MalformedJson(e.to_string()))?;
    let obj = value.as_object().ok_or_else(|| ScoreError::MalformedJson("top-level value is not an object".into()))?;
    if let Some(k) = obj.keys().find(|k| !matches!(k.as_str(), "V" | "R" | "C")) {
        return Err(ScoreError::UnexpectedKey(k.clone()));
    }
    let get = |key: &'static str| -> Result<u8, ScoreError> {
        let v = obj.get(key).ok_or(ScoreError::MissingKey(key))?;
        match v.as_u64() {
            Some(n @ 1..=5) => Ok(n as u8),
            _ => Err(ScoreError::OutOfRangeScore { key, value: v.to_string() }),
        }
    };
    Ok(JudgeScores { v: get("V")?, r: get("R")?, c: get("C")? })
}
