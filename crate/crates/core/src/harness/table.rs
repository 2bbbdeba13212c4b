use std::fmt;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::keyspace::{validate_key, AffinityRegex};

/// Cell value meaning "none" in a pool table.
pub const NONE_CELL: &str = "--";

/// One row of a pool table: `pool,example_key,step,regex,affinity_key`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolTableRow {
    pub pool: String,
    pub example_key: String,
    pub step: Option<String>,
    pub regex: Option<String>,
    pub affinity_key: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowStatus {
    /// The regex extracts exactly the expected affinity key.
    Match,
    /// Extraction disagrees with the expected column; `got` is `None` when the regex did not match.
    Mismatch { got: Option<String> },
    /// The pool has no regex (and expects no affinity key).
    Ungrouped,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowReport {
    pub row: PoolTableRow,
    pub status: RowStatus,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RegexReport {
    pub rows: Vec<RowReport>,
}

impl RegexReport {
    pub fn matches(&self) -> usize {
        self.count(|s| matches!(s, RowStatus::Match))
    }

    pub fn mismatches(&self) -> usize {
        self.count(|s| matches!(s, RowStatus::Mismatch { .. }))
    }

    pub fn ungrouped(&self) -> usize {
        self.count(|s| matches!(s, RowStatus::Ungrouped))
    }

    fn count(&self, f: impl Fn(&RowStatus) -> bool) -> usize {
        self.rows.iter().filter(|r| f(&r.status)).count()
    }

    pub fn is_clean(&self) -> bool {
        self.mismatches() == 0
    }
}

impl fmt::Display for RegexReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rows {
            let status = match &r.status {
                RowStatus::Match => format!("match {}", r.row.affinity_key.as_deref().unwrap_or("")),
                RowStatus::Mismatch { got } => format!(
                    "MISMATCH expected {} got {}",
                    r.row.affinity_key.as_deref().unwrap_or(NONE_CELL),
                    got.as_deref().unwrap_or("no match")
                ),
                RowStatus::Ungrouped => "n/a (no regex)".to_string(),
            };
            writeln!(f, "{:<14} {:<28} {status}", r.row.pool, r.row.example_key)?;
        }
        write!(
            f,
            "{} match, {} mismatch, {} n/a",
            self.matches(),
            self.mismatches(),
            self.ungrouped()
        )
    }
}

fn cell(v: Option<&str>) -> Option<String> {
    v.map(str::trim)
        .filter(|s| !s.is_empty() && *s != NONE_CELL)
        .map(str::to_string)
}

/// Parses a pool table. An empty input is an empty table.
pub fn read_pool_table<R: Read>(input: R) -> Result<Vec<PoolTableRow>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::BadConfig(format!("pool table row {}: {e}", i + 2)))?;
        let required = |idx: usize, what: &str| {
            cell(rec.get(idx)).ok_or_else(|| Error::BadConfig(format!("pool table row {}: missing {what}", i + 2)))
        };
        rows.push(PoolTableRow {
            pool: required(0, "pool")?,
            example_key: required(1, "example_key")?,
            step: cell(rec.get(2)),
            regex: cell(rec.get(3)),
            affinity_key: cell(rec.get(4)),
        });
    }
    Ok(rows)
}

/// Extracts the affinity key of every example key and checks it against the
/// expected column.
pub fn validate_rows(rows: Vec<PoolTableRow>) -> Result<RegexReport> {
    let mut report = RegexReport::default();
    for row in rows {
        let key = validate_key(&row.example_key)?;
        let status = match &row.regex {
            None if row.affinity_key.is_none() => RowStatus::Ungrouped,
            None => RowStatus::Mismatch { got: None },
            Some(re) => {
                let got = AffinityRegex::new(re)?
                    .extract(key.as_str())
                    .map(|a| a.as_str().to_string());
                if got.is_some() && got == row.affinity_key {
                    RowStatus::Match
                } else {
                    RowStatus::Mismatch { got }
                }
            }
        };
        report.rows.push(RowReport { row, status });
    }
    Ok(report)
}

/// Reads and checks a pool table file.
pub fn validate_regex(table: impl AsRef<Path>) -> Result<RegexReport> {
    let path = table.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    validate_rows(read_pool_table(file)?)
}
