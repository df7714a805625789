//! LLM-as-a-judge scoring of rationales on visual perception (V), reasoning
//! (R) and consistency (C), each 1..=5.

pub mod cache;
pub mod client;
pub mod prompt;
pub mod scores;

pub use client::{
    evaluate_corpus, evaluate_corpus_blocking, ImageMode, JudgeClientConfig, JudgeError, JudgeReport, MeanScores,
    SampleFailure, SampleResult,
};
pub use prompt::{build_judge_prompt, JUDGE_TEMPLATE};
pub use scores::{parse_judge_scores, JudgeScores, ScoreError};
