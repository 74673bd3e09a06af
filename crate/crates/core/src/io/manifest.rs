use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Issue, IssueKind};
use crate::jump::JumpParams;

/// Bundle manifest: which files hold which data, plus per-maturity forwards
/// and discount factors. Paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub name: String,
    /// Total (jump-inclusive) correlation table.
    pub correlation: String,
    #[serde(rename = "asset")]
    pub assets: Vec<AssetEntry>,
    #[serde(rename = "maturity")]
    pub maturities: Vec<MaturityEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<IndexEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump: Option<JumpParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetEntry {
    pub id: String,
    pub surface: String,
    /// Units held in the basket.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaturityEntry {
    pub t: f64,
    pub discount: f64,
    pub forwards: BTreeMap<String, f64>,
}

/// Target index whose skew the basket is calibrated to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexEntry {
    pub id: String,
    pub surface: String,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text.as_bytes()[..offset.min(text.len())];
    let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
    let col = before.iter().rev().take_while(|&&b| b != b'\n').count() + 1;
    (line, col)
}

pub fn parse_manifest(text: &str, file: &str) -> Result<Manifest, Vec<Issue>> {
    toml::from_str(text).map_err(|e| {
        let msg = e.message().to_string();
        let kind = if msg.starts_with("missing field") || msg.starts_with("unknown field") {
            IssueKind::Schema
        } else {
            IssueKind::Parse
        };
        let issue = Issue::new(kind, file, msg);
        vec![match e.span() {
            Some(s) => {
                let (l, c) = line_col(text, s.start);
                issue.at(l, Some(c))
            }
            None => issue,
        }]
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
name = "demo"
correlation = "correlation.csv"

[[asset]]
id = "A"
surface = "surfaces/A.csv"
weight = 0.5

[[maturity]]
t = 1.0
discount = 0.97
forwards = { A = 100.0 }
"#;

    #[test]
    fn parses_sample() {
        let m = parse_manifest(SAMPLE, "bundle.toml").unwrap();
        assert_eq!(m.assets[0].id, "A");
        assert_eq!(m.maturities[0].forwards["A"], 100.0);
        assert!(m.index.is_none() && m.jump.is_none());
    }

    #[test]
    fn missing_field_is_schema_error() {
        let issues = parse_manifest("name = \"x\"\n", "bundle.toml").unwrap_err();
        assert_eq!(issues[0].kind, IssueKind::Schema);
    }

    #[test]
    fn syntax_error_has_position() {
        let issues = parse_manifest("name = \"x\"\ncorrelation = \n", "bundle.toml").unwrap_err();
        assert_eq!(issues[0].kind, IssueKind::Parse);
        assert_eq!(issues[0].line, Some(2));
    }

    #[test]
    fn serializes_back() {
        let m = parse_manifest(SAMPLE, "bundle.toml").unwrap();
        let again = parse_manifest(&toml::to_string(&m).unwrap(), "bundle.toml").unwrap();
        assert_eq!(m, again);
    }
}
