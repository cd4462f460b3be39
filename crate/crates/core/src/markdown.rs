//! Markdown table recovery from raw model output.
//!
//! Recovery runs in two stages. [`extract_candidates`] groups every maximal run
//! of pipe-prefixed lines into a [`CandidateBlock`] without judging it, then
//! [`validate_candidate`] applies four structural checks to each block:
//!
//! 1. header integrity: `|` at both ends, no empty `||` gap;
//! 2. separator row: at least three hyphens per column, optional alignment colons;
//! 3. row consistency: every data line is pipe-delimited with the header's cell count;
//! 4. size: header, separator and at least one data row.
//!
//! Blocks shorter than three lines fail the size check before anything else,
//! since checks 1-3 need a second line to look at.
//!
//! Escaped pipes (`\|`) are not recognized; every pipe is a cell boundary.

use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::model::{CellValue, Origin, Table};

static HEADER_LINE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\|(?:[^|]+\|)+$").unwrap());
static SEPARATOR_LINE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\|(?:[ \t]*:?-{3,}:?[ \t]*\|)+$").unwrap());

/// A maximal run of lines whose first non-whitespace character is `|`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateBlock {
    pub lines: Vec<String>,
    /// 0-based line index of the first line in the source text.
    pub start_line: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FailureKind {
    InvalidHeader,
    InvalidSeparator,
    InvalidDataRow,
    ColumnMismatch,
    TooFewRows,
}

impl FailureKind {
    pub const ALL: [FailureKind; 5] = [
        FailureKind::InvalidHeader,
        FailureKind::InvalidSeparator,
        FailureKind::InvalidDataRow,
        FailureKind::ColumnMismatch,
        FailureKind::TooFewRows,
    ];
}

/// The coarse error taxonomy used in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ErrorClass {
    InvalidRow,
    TooFewRows,
    ColumnMismatch,
}

impl ErrorClass {
    pub const ALL: [ErrorClass; 3] = [
        ErrorClass::InvalidRow,
        ErrorClass::TooFewRows,
        ErrorClass::ColumnMismatch,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorClass::InvalidRow => "InvalidRow",
            ErrorClass::TooFewRows => "TooFewRows",
            ErrorClass::ColumnMismatch => "ColumnMismatch",
        }
    }
}

impl fmt::Display for ErrorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Why a candidate block was rejected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseFailure {
    pub kind: FailureKind,
    /// 0-based line offset within the candidate block.
    pub line_offset: usize,
    pub detail: String,
}

impl ParseFailure {
    fn new(kind: FailureKind, line_offset: usize, detail: impl Into<String>) -> Self {
        ParseFailure {
            kind,
            line_offset,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for ParseFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at line {}: {}", self.kind, self.line_offset, self.detail)
    }
}

pub fn classify_error(failure: &ParseFailure) -> ErrorClass {
    classify_kind(failure.kind)
}

pub fn classify_kind(kind: FailureKind) -> ErrorClass {
    match kind {
        FailureKind::InvalidHeader | FailureKind::InvalidSeparator | FailureKind::InvalidDataRow => {
            ErrorClass::InvalidRow
        }
        FailureKind::TooFewRows => ErrorClass::TooFewRows,
        FailureKind::ColumnMismatch => ErrorClass::ColumnMismatch,
    }
}

fn is_pipe_line(line: &str) -> bool {
    line.trim_start().starts_with('|')
}

pub fn extract_candidates(raw_output: &str) -> Vec<CandidateBlock> {
    let mut blocks = Vec::new();
    let mut current: Option<CandidateBlock> = None;
    for (index, line) in raw_output.lines().enumerate() {
        if is_pipe_line(line) {
            current
                .get_or_insert_with(|| CandidateBlock {
                    lines: Vec::new(),
                    start_line: index,
                })
                .lines
                .push(line.to_string());
        } else if let Some(block) = current.take() {
            blocks.push(block);
        }
    }
    blocks.extend(current);
    blocks
}

/// Cells of a pipe-delimited line, without the outer pipes, each trimmed.
fn split_cells(line: &str) -> Vec<&str> {
    line[1..line.len() - 1].split('|').map(str::trim).collect()
}

fn is_delimited(line: &str) -> bool {
    line.len() >= 2 && line.starts_with('|') && line.ends_with('|')
}

pub fn validate_candidate(block: &CandidateBlock) -> Result<Table, ParseFailure> {
    let lines: Vec<&str> = block.lines.iter().map(|l| l.trim()).collect();
    if lines.len() < 3 {
        return Err(ParseFailure::new(
            FailureKind::TooFewRows,
            lines.len(),
            format!(
                "{} line(s); need a header, a separator and at least one data row",
                lines.len()
            ),
        ));
    }

    let header = lines[0];
    if !HEADER_LINE.is_match(header) {
        return Err(ParseFailure::new(
            FailureKind::InvalidHeader,
            0,
            format!("malformed header line {header:?}"),
        ));
    }
    let headers: Vec<String> = split_cells(header).into_iter().map(String::from).collect();
    let width = headers.len();

    let separator = lines[1];
    if !SEPARATOR_LINE.is_match(separator) {
        return Err(ParseFailure::new(
            FailureKind::InvalidSeparator,
            1,
            format!("malformed separator line {separator:?}"),
        ));
    }
    let separator_width = split_cells(separator).len();
    if separator_width != width {
        return Err(ParseFailure::new(
            FailureKind::ColumnMismatch,
            1,
            format!("separator has {separator_width} columns, header has {width}"),
        ));
    }

    let mut rows = Vec::with_capacity(lines.len() - 2);
    for (offset, line) in lines.iter().enumerate().skip(2) {
        if !is_delimited(line) {
            return Err(ParseFailure::new(
                FailureKind::InvalidDataRow,
                offset,
                format!("data line does not open and close with a pipe: {line:?}"),
            ));
        }
        let cells = split_cells(line);
        if cells.len() != width {
            return Err(ParseFailure::new(
                FailureKind::ColumnMismatch,
                offset,
                format!("data row has {} cells, header has {width}", cells.len()),
            ));
        }
        rows.push(cells.into_iter().map(CellValue::text).collect());
    }

    // Width and row lengths were checked above.
    Ok(Table::new(headers, rows, Origin::ParsedMarkdown).expect("validated table shape"))
}

/// Tables recovered from one model output, plus one failure per rejected block.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseOutcome {
    pub tables: Vec<Table>,
    pub failures: Vec<ParseFailure>,
}

pub fn parse_all(raw_output: &str) -> ParseOutcome {
    let mut outcome = ParseOutcome::default();
    for block in extract_candidates(raw_output) {
        match validate_candidate(&block) {
            Ok(table) => outcome.tables.push(table),
            Err(failure) => outcome.failures.push(failure),
        }
    }
    outcome
}

/// Deterministic minimal rendering: `|h1|h2|`, `|---|---|`, one line per row,
/// no padding, `\n` between lines and no trailing newline.
pub fn serialize_minimal_markdown(table: &Table) -> String {
    let mut lines = Vec::with_capacity(table.rows().len() + 2);
    lines.push(pipe_join(table.column_headers().iter().map(String::as_str)));
    lines.push(pipe_join(std::iter::repeat_n("---", table.width())));
    for row in table.rows() {
        let rendered: Vec<String> = row.iter().map(CellValue::render).collect();
        lines.push(pipe_join(rendered.iter().map(String::as_str)));
    }
    lines.join("\n")
}

fn pipe_join<'a>(cells: impl Iterator<Item = &'a str>) -> String {
    let mut out = String::from("|");
    for cell in cells {
        out.push_str(cell);
        out.push('|');
    }
    out
}
