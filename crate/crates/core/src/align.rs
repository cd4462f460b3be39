//! Cell normalization and greedy assignment of candidate tables to gold layouts.

use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::model::{header_key, CellKind, CellValue, Table, TableSchema};

static PLAIN_INTEGER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[+-]?[0-9]+$").unwrap());
static GROUPED_INTEGER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[+-]?[0-9]{1,3}(?:,[0-9]{3})+$").unwrap());

const NULL_SYNONYMS: [&str; 4] = ["-", "n/a", "null", "none"];

/// Individually switchable normalization rules. Trimming is always applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizationOptions {
    pub collapse_whitespace: bool,
    pub case_fold: bool,
    pub thousands_separators: bool,
    pub null_synonyms: bool,
}

impl Default for NormalizationOptions {
    fn default() -> Self {
        NormalizationOptions {
            collapse_whitespace: true,
            case_fold: true,
            thousands_separators: true,
            null_synonyms: true,
        }
    }
}

/// Normalizes one raw cell string against the layout's cell kind.
///
/// Empty cells are Null for either kind. Numeric layouts additionally parse
/// signed integers (optionally with `,` grouping) and map null synonyms to
/// Null; anything else stays as folded text, which never equals an integer.
pub fn normalize_cell(raw: &str, kind: CellKind, opts: &NormalizationOptions) -> CellValue {
    let trimmed = raw.trim();
    let mut text = if opts.collapse_whitespace {
        trimmed.split_whitespace().collect::<Vec<_>>().join(" ")
    } else {
        trimmed.to_string()
    };
    if opts.case_fold {
        text = text.to_lowercase();
    }
    if text.is_empty() {
        return CellValue::Null;
    }
    if kind == CellKind::NullableInteger {
        if opts.null_synonyms && NULL_SYNONYMS.iter().any(|s| text.eq_ignore_ascii_case(s)) {
            return CellValue::Null;
        }
        let digits = if opts.thousands_separators && GROUPED_INTEGER.is_match(&text) {
            text.replace(',', "")
        } else {
            text.clone()
        };
        if PLAIN_INTEGER.is_match(&digits) {
            if let Ok(n) = digits.parse::<i64>() {
                return CellValue::Integer(n);
            }
        }
    }
    CellValue::Text(text)
}

pub fn normalize_value(cell: &CellValue, kind: CellKind, opts: &NormalizationOptions) -> CellValue {
    match (cell, kind) {
        (CellValue::Null, _) => CellValue::Null,
        (CellValue::Integer(n), CellKind::NullableInteger) => CellValue::Integer(*n),
        (other, _) => normalize_cell(&other.render(), kind, opts),
    }
}

pub fn normalize_table(table: &Table, kind: CellKind, opts: &NormalizationOptions) -> Table {
    table.map_cells(|c| normalize_value(c, kind, opts))
}

/// Number of schema headers found among the candidate's headers,
/// case-insensitively after trimming. Empty candidate headers never match.
pub fn header_overlap_score(candidate: &Table, schema: &TableSchema) -> usize {
    let have: HashSet<String> = candidate
        .column_headers()
        .iter()
        .map(|h| header_key(h))
        .filter(|h| !h.is_empty())
        .collect();
    schema
        .column_headers()
        .iter()
        .filter(|h| have.contains(&header_key(h)))
        .count()
}

/// Which side drives the greedy loop.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentOrder {
    /// Each gold layout, in dataset order, takes its best unassigned candidate.
    #[default]
    GoldFirst,
    /// Each candidate, in document order, takes its best unassigned gold layout.
    CandidateFirst,
}

/// Outcome of matching candidates to gold layouts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentResult {
    /// Indexed by gold position; the assigned candidate index, if any.
    pub assignments: Vec<Option<usize>>,
}

impl AssignmentResult {
    pub fn assigned_count(&self) -> usize {
        self.assignments.iter().flatten().count()
    }

    pub fn missing(&self) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, a)| a.is_none())
            .map(|(g, _)| g)
            .collect()
    }

    /// Assigned / expected. Vacuously 1 when nothing is expected.
    pub fn presence_rate(&self) -> f64 {
        if self.assignments.is_empty() {
            1.0
        } else {
            self.assigned_count() as f64 / self.assignments.len() as f64
        }
    }
}

/// Greedy one-to-one assignment by header overlap. Zero-overlap pairs are
/// never assigned; ties go to the earliest index.
pub fn assign_tables(candidates: &[Table], schemas: &[TableSchema], order: AssignmentOrder) -> AssignmentResult {
    let scores: Vec<Vec<usize>> = schemas
        .iter()
        .map(|s| candidates.iter().map(|c| header_overlap_score(c, s)).collect())
        .collect();
    let mut assignments = vec![None; schemas.len()];
    match order {
        AssignmentOrder::GoldFirst => {
            let mut taken = vec![false; candidates.len()];
            for (gold, row) in scores.iter().enumerate() {
                if let Some(best) = best_index(row.iter().copied(), &taken) {
                    taken[best] = true;
                    assignments[gold] = Some(best);
                }
            }
        }
        AssignmentOrder::CandidateFirst => {
            let mut filled = vec![false; schemas.len()];
            for cand in 0..candidates.len() {
                if let Some(best) = best_index(scores.iter().map(|row| row[cand]), &filled) {
                    filled[best] = true;
                    assignments[best] = Some(cand);
                }
            }
        }
    }
    AssignmentResult { assignments }
}

fn best_index(scores: impl Iterator<Item = usize>, taken: &[bool]) -> Option<usize> {
    let mut best: Option<(usize, usize)> = None;
    for (i, score) in scores.enumerate() {
        if taken[i] || score == 0 {
            continue;
        }
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((i, score));
        }
    }
    best.map(|(i, _)| i)
}
