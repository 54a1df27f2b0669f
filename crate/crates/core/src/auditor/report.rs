use std::fmt::Write;
use std::str::FromStr;

use thiserror::Error;

use super::{ComplianceReport, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Table,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(ReportFormat::Table),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown format `{other}` (expected table or json)")),
        }
    }
}

const CHECK_WIDTH: usize = 18;
const ROW_WIDTH: usize = 46;
const VERDICT_WIDTH: usize = 10;
const EVIDENCE_WIDTH: usize = 96;

fn cell(text: &str, width: usize) -> String {
    let clean: String = text
        .chars()
        .map(|c| if c == '|' || c.is_control() { ' ' } else { c })
        .collect();
    let mut out: String = clean.chars().take(width).collect();
    if clean.chars().count() > width {
        out.pop();
        out.push('~');
    }
    format!("{out:<width$}")
}

fn table_line(cols: [&str; 4]) -> String {
    format!(
        "| {} | {} | {} | {} |",
        cell(cols[0], CHECK_WIDTH),
        cell(cols[1], ROW_WIDTH),
        cell(cols[2], VERDICT_WIDTH),
        cell(cols[3], EVIDENCE_WIDTH)
    )
}

pub fn render_report(report: &ComplianceReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
            s.push('\n');
            s
        }
        ReportFormat::Table => {
            let mut out = String::new();
            let _ = writeln!(out, "target: {}", report.target);
            let _ = writeln!(out, "time:   {}", report.timestamp);
            let _ = writeln!(out, "style:  {}", report.style);
            out.push_str(&table_line(["check", "table row", "verdict", "evidence"]));
            out.push('\n');
            let _ = writeln!(
                out,
                "|{}|{}|{}|{}|",
                "-".repeat(CHECK_WIDTH + 2),
                "-".repeat(ROW_WIDTH + 2),
                "-".repeat(VERDICT_WIDTH + 2),
                "-".repeat(EVIDENCE_WIDTH + 2)
            );
            for c in &report.checks {
                let evidence = c.evidence.join("; ");
                out.push_str(&table_line([&c.check_id, &c.table_row, c.verdict.as_str(), &evidence]));
                out.push('\n');
            }
            let counts: Vec<String> = report
                .counts
                .iter()
                .map(|(v, n)| format!("{v}={n}"))
                .collect();
            let _ = writeln!(out, "counts: {}", counts.join(" "));
            out
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableParseError {
    #[error("line {0}: unknown verdict `{1}`")]
    Verdict(usize, String),
    #[error("no table header found")]
    NoHeader,
}

/// Recovers `(check_id, verdict)` pairs from a rendered table.
pub fn parse_table(text: &str) -> Result<Vec<(String, Verdict)>, TableParseError> {
    let mut rows = Vec::new();
    let mut in_table = false;
    for (n, line) in text.lines().enumerate() {
        let Some(inner) = line.trim().strip_prefix('|').and_then(|l| l.strip_suffix('|')) else {
            continue;
        };
        let cols: Vec<&str> = inner.split('|').map(str::trim).collect();
        if cols.first() == Some(&"check") {
            in_table = true;
            continue;
        }
        if !in_table || cols.len() < 3 || cols[0].starts_with('-') {
            continue;
        }
        let verdict = cols[2]
            .parse()
            .map_err(|_| TableParseError::Verdict(n + 1, cols[2].to_string()))?;
        rows.push((cols[0].to_string(), verdict));
    }
    if in_table {
        Ok(rows)
    } else {
        Err(TableParseError::NoHeader)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{check, EntryStyle, CHECKS};
    use super::*;
    use proptest::prelude::*;

    fn report(verdicts: &[Verdict]) -> ComplianceReport {
        let checks = CHECKS
            .iter()
            .zip(verdicts)
            .map(|((id, _, _), v)| check(id, *v, vec![format!("evidence | for {id}")]))
            .collect();
        ComplianceReport::new("http://x/wps", EntryStyle::RawWps, true, checks)
    }

    #[test]
    fn empty_report_renders_header_only() {
        let r = ComplianceReport::new("http://x", EntryStyle::Resource, true, vec![]);
        let table = render_report(&r, ReportFormat::Table);
        assert_eq!(parse_table(&table).unwrap(), vec![]);
        assert!(table.contains("| check"));
        assert!(table.contains("counts: yes=0 partial=0 no=0 error=0 not-probed=0"));
    }

    #[test]
    fn printed_counts_equal_tallies() {
        let r = report(&[Verdict::Yes, Verdict::No, Verdict::No, Verdict::Partial]);
        let table = render_report(&r, ReportFormat::Table);
        assert!(table.contains("counts: yes=1 partial=1 no=2 error=0 not-probed=0"));
    }

    #[test]
    fn columns_are_fixed_width() {
        let r = report(&[Verdict::Yes, Verdict::NotProbed]);
        let table = render_report(&r, ReportFormat::Table);
        let widths: Vec<usize> = table
            .lines()
            .filter(|l| l.starts_with('|'))
            .map(|l| l.chars().count())
            .collect();
        assert!(widths.windows(2).all(|w| w[0] == w[1]));
    }

    fn verdict() -> impl Strategy<Value = Verdict> {
        prop::sample::select(Verdict::ALL.to_vec())
    }

    proptest! {
        #[test]
        fn json_table_json_keeps_verdicts(verdicts in prop::collection::vec(verdict(), 0..=9)) {
            let r = report(&verdicts);
            let json = render_report(&r, ReportFormat::Json);
            let back: ComplianceReport = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(&back, &r);
            let table = render_report(&back, ReportFormat::Table);
            prop_assert_eq!(parse_table(&table).unwrap(), r.verdicts());
        }
    }
}
