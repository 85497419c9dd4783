//! Flat key-value config files with `[section]` headers. Keys are
//! namespaced as `section.key`; `#` starts a comment. Values stay
//! strings here; the CLI parses them into typed flags, with explicit
//! command-line flags taking precedence.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{FhsError, Result};

pub fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    let mut section = String::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            section = line[1..line.len() - 1].trim().to_string();
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            FhsError::InvalidConfig(format!(
                "config line {} is neither `[section]` nor `key = value`: '{raw}'",
                lineno + 1
            ))
        })?;
        let full_key = if section.is_empty() {
            key.trim().to_string()
        } else {
            format!("{}.{}", section, key.trim())
        };
        out.insert(full_key, value.trim().to_string());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_comments() {
        let text = "\n# experiment\n[simulate]\nmodel = simple\ntruth = sine # nonparametric\nn = 200\n\n[sampler]\na = 0.5\n";
        let map = parse_config_str(text).unwrap();
        assert_eq!(map["simulate.model"], "simple");
        assert_eq!(map["simulate.truth"], "sine");
        assert_eq!(map["simulate.n"], "200");
        assert_eq!(map["sampler.a"], "0.5");
    }

    #[test]
    fn malformed_line_is_an_error() {
        assert!(parse_config_str("[a]\nnot a kv line\n").is_err());
    }
}
