use std::collections::HashSet;

use csv::StringRecord;

use super::report::format_sig;
use super::{parse_number, Issue, IssueKind};

pub const SURFACE_HEADER: [&str; 3] = ["strike", "maturity", "implied_vol"];

/// One quote of a surface file with its 1-based line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceRow {
    pub line: usize,
    pub strike: f64,
    pub maturity: f64,
    pub implied_vol: f64,
}

const PLACEHOLDER: &str = "#";

/// Records of a comma-separated file with `#` comments, each carrying its
/// physical line. Comment and blank lines become placeholder records before
/// reading, as the csv reader's line count drifts over skipped lines.
pub(crate) fn records(text: &str, file: &str, issues: &mut Vec<Issue>) -> Vec<StringRecord> {
    let padded: String = text
        .lines()
        .map(|l| {
            let t = l.trim();
            if t.is_empty() || t.starts_with('#') {
                PLACEHOLDER
            } else {
                l
            }
        })
        .flat_map(|l| [l, "\n"])
        .collect();
    let mut out = Vec::new();
    let rdr =
        csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(padded.as_bytes());
    for rec in rdr.into_records() {
        match rec {
            Ok(r) if r.len() == 1 && &r[0] == PLACEHOLDER => {}
            Ok(r) => out.push(r),
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line() as usize);
                issues.push(Issue::new(IssueKind::Parse, file, e.to_string()).at(line, None));
            }
        }
    }
    out
}

/// Parses a `strike,maturity,implied_vol` file. Quotes of one maturity must
/// appear in strictly ascending strike order.
pub fn parse_surface_csv(text: &str, file: &str) -> Result<Vec<SurfaceRow>, Vec<Issue>> {
    let mut issues = Vec::new();
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    let mut header_seen = false;

    for rec in records(text, file, &mut issues) {
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if !header_seen {
            header_seen = true;
            if rec.iter().ne(SURFACE_HEADER) {
                issues.push(
                    Issue::new(IssueKind::Schema, file, format!("header must be `{}`", SURFACE_HEADER.join(",")))
                        .at(line, None),
                );
            }
            continue;
        }
        if rec.len() != 3 {
            issues.push(
                Issue::new(IssueKind::Schema, file, format!("expected 3 fields, found {}", rec.len())).at(line, None),
            );
            continue;
        }
        let mut vals = [0.0; 3];
        let mut ok = true;
        for (c, field) in rec.iter().enumerate() {
            match parse_number(field) {
                Some(v) => vals[c] = v,
                None => {
                    ok = false;
                    issues.push(
                        Issue::new(IssueKind::Parse, file, format!("`{field}` is not a finite decimal number"))
                            .at(line, Some(c + 1)),
                    );
                }
            }
        }
        if !ok {
            continue;
        }
        let [strike, maturity, implied_vol] = vals;
        let mut bad = |c: usize, msg: String| {
            ok = false;
            issues.push(Issue::new(IssueKind::Schema, file, msg).at(line, Some(c)));
        };
        if strike <= 0.0 {
            bad(1, format!("strike {strike} must be positive"));
        }
        if maturity <= 0.0 {
            bad(2, format!("maturity {maturity} must be positive"));
        }
        if !(implied_vol > 0.0 && implied_vol < 3.0) {
            bad(3, format!("implied vol {implied_vol} outside (0, 3)"));
        }
        if !ok {
            continue;
        }
        if !seen.insert((strike.to_bits(), maturity.to_bits())) {
            issues.push(
                Issue::new(IssueKind::Schema, file, format!("duplicate strike {strike} at maturity {maturity}"))
                    .at(line, Some(1)),
            );
            continue;
        }
        if let Some(prev) = rows.iter().rev().find(|r: &&SurfaceRow| r.maturity == maturity) {
            if strike < prev.strike {
                issues.push(
                    Issue::new(
                        IssueKind::Consistency,
                        file,
                        format!("strike {strike} follows {} at maturity {maturity}; strikes must ascend", prev.strike),
                    )
                    .at(line, Some(1)),
                );
                continue;
            }
        }
        rows.push(SurfaceRow { line, strike, maturity, implied_vol });
    }
    if !header_seen {
        issues.push(Issue::new(IssueKind::Schema, file, "empty surface file"));
    }
    if issues.is_empty() {
        Ok(rows)
    } else {
        Err(issues)
    }
}

/// Renders quotes as a surface file at 12 significant digits.
pub fn write_surface_csv(rows: &[(f64, f64, f64)]) -> String {
    let mut out = SURFACE_HEADER.join(",");
    out.push('\n');
    for &(k, t, v) in rows {
        out.push_str(&format!("{},{},{}\n", format_sig(k, 12), format_sig(t, 12), format_sig(v, 12)));
    }
    out
}
