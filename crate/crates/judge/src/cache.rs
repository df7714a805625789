//! On-disk score cache: `<dir>/<model>/<sample id>__<sha256 of response>.json`.
//! Path components are escaped so distinct keys never share a file.

use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::scores::JudgeScores;

pub fn response_digest(response: &str) -> String {
    hex::encode(Sha256::digest(response.as_bytes()))
}

fn escape(component: &str) -> String {
    let mut out = String::with_capacity(component.len());
    for b in component.bytes() {
        if b.is_ascii_alphanumeric() || matches!(b, b'-' | b'.') && !out.is_empty() {
            out.push(b as char);
        } else {
            out.push_str(&format!("_{b:02x}"));
        }
    }
    if out.is_empty() {
        out.push('_');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub model: String,
    pub sample_id: String,
    pub response_sha256: String,
    pub scores: JudgeScores,
}

#[derive(Debug, Clone)]
pub struct ScoreCache {
    root: PathBuf,
}

impl ScoreCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        ScoreCache { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_for(&self, model: &str, sample_id: &str, digest: &str) -> PathBuf {
        self.root.join(escape(model)).join(format!("{}__{digest}.json", escape(sample_id)))
    }

    /// Cached scores, if present and matching the key. Unreadable entries are
    /// treated as misses.
    pub fn get(&self, model: &str, sample_id: &str, digest: &str) -> Option<JudgeScores> {
        let bytes = std::fs::read(self.path_for(model, sample_id, digest)).ok()?;
        let entry: CacheEntry = serde_json::from_slice(&bytes).ok()?;
        (entry.model == model && entry.sample_id == sample_id && entry.response_sha256 == digest).then_some(entry.scores)
    }

    /// Writes to a unique temporary file, then renames over the target.
    pub fn put(&self, entry: &CacheEntry) -> io::Result<()> {
        let path = self.path_for(&entry.model, &entry.sample_id, &entry.response_sha256);
        let dir = path.parent().expect("cache paths have a parent");
        std::fs::create_dir_all(dir)?;
        let tmp = dir.join(format!(
            ".{}.{}.{:?}.tmp",
            path.file_name().and_then(|n| n.to_str()).unwrap_or("entry"),
            std::process::id(),
            std::thread::current().id()
        ));
        std::fs::write(&tmp, serde_json::to_vec_pretty(entry).expect("entries serialize"))?;
        std::fs::rename(&tmp, &path)
    }
}
