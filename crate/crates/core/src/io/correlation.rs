use log::warn;
use nalgebra::DMatrix;

use super::report::format_sig;
use super::surface::records;
use super::{parse_number, Issue, IssueKind};

/// Asymmetry above which symmetrization is reported.
const ASYMMETRY_WARNING: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCorrelation {
    pub labels: Vec<String>,
    pub matrix: DMatrix<f64>,
}

impl LabeledCorrelation {
    /// The matrix reordered to `ids`; `None` unless the labels are exactly `ids`.
    pub fn reordered(&self, ids: &[String]) -> Option<DMatrix<f64>> {
        if ids.len() != self.labels.len() {
            return None;
        }
        let pos: Vec<usize> = ids.iter().map(|id| self.labels.iter().position(|l| l == id)).collect::<Option<_>>()?;
        Some(DMatrix::from_fn(ids.len(), ids.len(), |i, j| self.matrix[(pos[i], pos[j])]))
    }
}

/// Parses a square table whose header row and first column carry the same
/// asset ids in the same order. The first header cell is ignored.
/// Asymmetric input is averaged with its transpose.
pub fn parse_correlation_csv(text: &str, file: &str) -> Result<LabeledCorrelation, Vec<Issue>> {
    let mut issues = Vec::new();
    let records = records(text, file, &mut issues);
    let Some(header) = records.first() else {
        issues.push(Issue::new(IssueKind::Schema, file, "empty correlation file"));
        return Err(issues);
    };
    let header_line = header.position().map_or(1, |p| p.line() as usize);
    let labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let n = labels.len();
    if n == 0 {
        issues.push(Issue::new(IssueKind::Schema, file, "header names no assets").at(header_line, None));
        return Err(issues);
    }
    for (c, l) in labels.iter().enumerate() {
        if l.is_empty() {
            issues.push(Issue::new(IssueKind::Schema, file, "empty asset label").at(header_line, Some(c + 2)));
        } else if labels[..c].contains(l) {
            issues.push(
                Issue::new(IssueKind::Schema, file, format!("duplicate label `{l}`")).at(header_line, Some(c + 2)),
            );
        }
    }
    let body = &records[1..];
    if body.len() != n {
        issues.push(Issue::new(IssueKind::Schema, file, format!("{} labels but {} data rows", n, body.len())));
    }

    let mut m = DMatrix::from_element(n, n, f64::NAN);
    for (i, rec) in body.iter().enumerate().take(n) {
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != n + 1 {
            issues.push(
                Issue::new(IssueKind::Schema, file, format!("expected {} fields, found {}", n + 1, rec.len()))
                    .at(line, None),
            );
            continue;
        }
        if rec[0] != labels[i] {
            issues.push(
                Issue::new(
                    IssueKind::Consistency,
                    file,
                    format!("row label `{}` does not match column label `{}`", &rec[0], labels[i]),
                )
                .at(line, Some(1)),
            );
        }
        for j in 0..n {
            let field = &rec[j + 1];
            let at = |msg: String, kind| Issue::new(kind, file, msg).at(line, Some(j + 2));
            match parse_number(field) {
                None => issues.push(at(format!("`{field}` is not a finite decimal number"), IssueKind::Parse)),
                Some(v) if i == j && (v - 1.0).abs() > 1e-12 => {
                    issues.push(at(format!("diagonal entry {v} must be 1"), IssueKind::Consistency))
                }
                Some(v) if !(-1.0..=1.0).contains(&v) => {
                    issues.push(at(format!("correlation {v} outside [-1, 1]"), IssueKind::Consistency))
                }
                Some(v) => m[(i, j)] = v,
            }
        }
    }
    if !issues.is_empty() {
        return Err(issues);
    }

    let asym = (0..n)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .map(|(i, j)| (m[(i, j)] - m[(j, i)]).abs())
        .fold(0.0f64, f64::max);
    if asym > ASYMMETRY_WARNING {
        warn!("{file}: correlation asymmetric by up to {asym:.3e}; averaging with its transpose");
    }
    let matrix = (&m + m.transpose()) * 0.5;
    Ok(LabeledCorrelation { labels, matrix })
}

/// Renders a labeled correlation table at 12 significant digits.
pub fn write_correlation_csv(c: &LabeledCorrelation) -> String {
    let mut out = String::from("id");
    for l in &c.labels {
        out.push(',');
        out.push_str(l);
    }
    out.push('\n');
    for (i, l) in c.labels.iter().enumerate() {
        out.push_str(l);
        for j in 0..c.labels.len() {
            out.push(',');
            out.push_str(&format_sig(c.matrix[(i, j)], 12));
        }
        out.push('\n');
    }
    out
}
