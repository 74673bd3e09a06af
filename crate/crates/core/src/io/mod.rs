//! Market-data files: per-asset vol surfaces, labeled correlation matrices,
//! the bundle manifest tying them together, and skew report tables.
//!
//! Every parser collects all problems it finds instead of stopping at the
//! first; they surface together as [`DataError::Invalid`].

mod bundle;
mod correlation;
mod manifest;
mod report;
mod surface;

use std::fmt;
use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

pub use bundle::{load_bundle, write_bundle, MarketBundle, MaturityData, MANIFEST_FILE};
pub use correlation::{parse_correlation_csv, write_correlation_csv, LabeledCorrelation};
pub use manifest::{parse_manifest, AssetEntry, IndexEntry, Manifest, MaturityEntry};
pub use report::{format_sig, parse_skew_report, read_skew_report, write_skew_report, SkewTable};
pub use surface::{parse_surface_csv, write_surface_csv, SurfaceRow, SURFACE_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    Io,
    Parse,
    Schema,
    Consistency,
}

impl fmt::Display for IssueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IssueKind::Io => "io",
            IssueKind::Parse => "parse",
            IssueKind::Schema => "schema",
            IssueKind::Consistency => "consistency",
        })
    }
}

/// One validation failure, located as precisely as the format allows.
/// Columns of delimited files count fields from 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Issue {
    pub kind: IssueKind,
    pub file: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl Issue {
    pub(crate) fn new(kind: IssueKind, file: &str, message: impl Into<String>) -> Self {
        Self { kind, file: file.to_string(), line: None, column: None, message: message.into() }
    }

    pub(crate) fn at(mut self, line: usize, column: Option<usize>) -> Self {
        self.line = Some(line);
        self.column = column;
        self
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.file)?;
        if let Some(l) = self.line {
            write!(f, ":{l}")?;
            if let Some(c) = self.column {
                write!(f, ":{c}")?;
            }
        }
        write!(f, ": {} error: {}", self.kind, self.message)
    }
}

fn list(issues: &[Issue]) -> String {
    issues.iter().map(|i| format!("\n  {i}")).collect()
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{} problem(s) in market data:{}", .0.len(), list(.0))]
    Invalid(Vec<Issue>),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Parses a finite decimal number; exponents are allowed, `inf` and `nan` are not.
pub(crate) fn parse_number(field: &str) -> Option<f64> {
    if field.is_empty() || !field.bytes().all(|b| b.is_ascii_digit() || b"+-.eE".contains(&b)) {
        return None;
    }
    field.parse::<f64>().ok().filter(|v| v.is_finite())
}
