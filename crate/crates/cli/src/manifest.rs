use std::fmt::Write as _;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Build version and `git describe` of the source tree.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const GIT_DESCRIBE: &str = env!("FLDSC_GIT_DESCRIBE");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputDigest {
    /// File path, or `stdout`.
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

impl OutputDigest {
    pub fn of(name: impl Into<String>, data: &[u8]) -> Self {
        Self {
            name: name.into(),
            bytes: data.len(),
            sha256: sha256_hex(data),
        }
    }
}

/// Everything needed to reproduce one invocation.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub git_describe: &'static str,
    pub subcommand: String,
    pub argv: Vec<String>,
    /// The subcommand's arguments after defaults are applied.
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub started: String,
    pub finished: String,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub outputs: Vec<OutputDigest>,
    /// Subcommand-specific provenance, such as the code matrix simulated.
    pub metadata: serde_json::Value,
}

pub fn timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

pub fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
