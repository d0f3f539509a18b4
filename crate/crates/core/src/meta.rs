//! Provenance helpers: checksums and the metadata header written at the top
//! of every output artifact.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

pub const TOOL_NAME: &str = "satira";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest.iter() {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Key/value metadata rendered as `# key=value` comment lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunMetadata {
    pub config_hash: String,
    pub segmented: bool,
    /// (lexicon name, sha256 of the file)
    pub lexicons: Vec<(String, String)>,
    pub extra: Vec<(String, String)>,
}

impl RunMetadata {
    pub fn header_lines(&self) -> Vec<String> {
        let mut lines = vec![
            format!("# tool={TOOL_NAME} version={TOOL_VERSION}"),
            format!("# config_hash={}", self.config_hash),
            format!("# segmented={}", self.segmented),
        ];
        for (name, sum) in &self.lexicons {
            lines.push(format!("# lexicon.{name}={sum}"));
        }
        for (k, v) in &self.extra {
            lines.push(format!("# {k}={v}"));
        }
        lines
    }

    pub fn header(&self) -> String {
        let mut s = self.header_lines().join("\n");
        s.push('\n');
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        let lexicons: serde_json::Map<String, serde_json::Value> = self
            .lexicons
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
            .collect();
        let extra: serde_json::Map<String, serde_json::Value> = self
            .extra
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
            .collect();
        serde_json::json!({
            "tool": TOOL_NAME,
            "version": TOOL_VERSION,
            "config_hash": self.config_hash,
            "segmented": self.segmented,
            "lexicons": lexicons,
            "extra": extra,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn header_is_comment_block() {
        let meta = RunMetadata {
            config_hash: "abc".into(),
            segmented: true,
            lexicons: vec![("cliches".into(), "00".into())],
            extra: vec![],
        };
        let h = meta.header();
        assert!(h.lines().all(|l| l.starts_with("# ")));
        assert!(h.contains("# segmented=true"));
        assert!(h.contains("# lexicon.cliches=00"));
    }
}
