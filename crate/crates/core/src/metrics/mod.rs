//! Scores for one (predicted, gold) table pair, and run-level aggregation.
//!
//! All pair metrics expect normalized tables (see [`crate::align::normalize_table`])
//! and look only at data rows; the column-header row is never scored.
//! Positional metrics walk the union of both grids, so cells a prediction adds
//! beyond the gold shape are penalized as well as cells it leaves out.

mod report;
pub mod text;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::align::{normalize_table, NormalizationOptions};
use crate::markdown::serialize_minimal_markdown;
use crate::model::{CellKind, CellValue, Table, TableSchema};

pub use report::{
    aggregate, EvaluationReport, ExampleResult, MetricMeans, RmseAggregation, TableResult, TableTypeReport,
};
pub use text::{levenshtein_distance, levenshtein_ratio, rouge_l};

/// True/false positive and false negative counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Counts {
    /// `2tp / (2tp + fp + fn)`; 1 when every count is zero.
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            1.0
        } else {
            (2 * self.tp) as f64 / denom as f64
        }
    }
}

/// Every `(row, col)` present in either grid, row-major.
fn union_positions<'a>(pred: &'a Table, gold: &'a Table) -> impl Iterator<Item = (usize, usize)> + 'a {
    let rows = pred.rows().len().max(gold.rows().len());
    (0..rows).flat_map(move |r| {
        let pw = if r < pred.rows().len() { pred.width() } else { 0 };
        let gw = if r < gold.rows().len() { gold.width() } else { 0 };
        (0..pw.max(gw)).map(move |c| (r, c))
    })
}

fn present(cell: Option<&CellValue>) -> Option<&CellValue> {
    cell.filter(|c| !c.is_null())
}

/// Positional exact-match counts. A gold cell that is matched is a TP; a gold
/// cell that is absent or wrong is an FN; a non-null prediction where gold has
/// nothing is an FP. Null against Null counts nowhere.
pub fn cell_metrics(pred: &Table, gold: &Table) -> Counts {
    let mut counts = Counts::default();
    for (r, c) in union_positions(pred, gold) {
        match (present(pred.cell(r, c)), present(gold.cell(r, c))) {
            (Some(p), Some(g)) if p == g => counts.tp += 1,
            (_, Some(_)) => counts.fn_ += 1,
            (Some(_), None) => counts.fp += 1,
            (None, None) => {}
        }
    }
    counts
}

/// Order-agnostic exact row matching. Rows match iff all cells are equal;
/// duplicates are matched as a multiset.
pub fn row_metrics(pred: &Table, gold: &Table) -> Counts {
    let mut available: HashMap<&[CellValue], usize> = HashMap::new();
    for row in gold.rows() {
        *available.entry(row.as_slice()).or_default() += 1;
    }
    let mut tp = 0;
    for row in pred.rows() {
        if let Some(n) = available.get_mut(row.as_slice()).filter(|n| **n > 0) {
            *n -= 1;
            tp += 1;
        }
    }
    Counts {
        tp,
        fp: pred.rows().len() - tp,
        fn_: gold.rows().len() - tp,
    }
}

/// Same shape and every positional cell equal.
pub fn table_exact(pred: &Table, gold: &Table) -> bool {
    pred.width() == gold.width() && pred.rows() == gold.rows()
}

/// Mean Levenshtein ratio over union positions, absent and Null cells as "".
pub fn positional_cell_levenshtein(pred: &Table, gold: &Table) -> f64 {
    let mut total = 0.0;
    let mut n = 0usize;
    for (r, c) in union_positions(pred, gold) {
        let p = pred.cell(r, c).map(CellValue::render).unwrap_or_default();
        let g = gold.cell(r, c).map(CellValue::render).unwrap_or_default();
        total += levenshtein_ratio(&p, &g);
        n += 1;
    }
    if n == 0 {
        1.0
    } else {
        total / n as f64
    }
}

/// Minimal markdown with the header and separator lines removed.
fn data_rows_markdown(table: &Table) -> String {
    serialize_minimal_markdown(table)
        .splitn(3, '\n')
        .nth(2)
        .unwrap_or("")
        .to_string()
}

/// `(levenshtein ratio, ROUGE-L)` between the serialized data rows of both tables.
pub fn table_string_metrics(pred: &Table, gold: &Table) -> (f64, f64) {
    let p = data_rows_markdown(pred);
    let g = data_rows_markdown(gold);
    (levenshtein_ratio(&p, &g), rouge_l(&p, &g))
}

/// Squared-error accumulator over positions where both gold and prediction are integers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RmseStats {
    pub sum_squared_error: f64,
    pub pairs: usize,
    /// Gold integer positions whose prediction was absent, Null or non-numeric.
    pub excluded: usize,
}

impl RmseStats {
    pub fn value(&self) -> Option<f64> {
        (self.pairs > 0).then(|| (self.sum_squared_error / self.pairs as f64).sqrt())
    }
}

pub fn rmse(pred: &Table, gold: &Table) -> RmseStats {
    let mut stats = RmseStats::default();
    for (r, row) in gold.rows().iter().enumerate() {
        for (c, cell) in row.iter().enumerate() {
            let CellValue::Integer(g) = cell else { continue };
            match pred.cell(r, c) {
                Some(CellValue::Integer(p)) => {
                    let diff = (*p as f64) - (*g as f64);
                    stats.sum_squared_error += diff * diff;
                    stats.pairs += 1;
                }
                _ => stats.excluded += 1,
            }
        }
    }
    stats
}

/// Options that change what gets scored.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoringOptions {
    pub normalization: NormalizationOptions,
    /// Drop the first column of layouts with fixed row headers before scoring.
    pub exclude_row_headers: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScores {
    pub cell: Counts,
    pub cell_f1: f64,
    pub cell_levenshtein: f64,
    pub row: Counts,
    pub row_f1: f64,
    pub table_exact: bool,
    pub table_levenshtein: f64,
    pub table_rouge_l: f64,
    /// Present only for numeric layouts.
    pub rmse: Option<RmseStats>,
}

/// Normalizes both tables against the gold layout and computes every pair metric.
pub fn score_pair(pred: &Table, gold: &Table, schema: &TableSchema, opts: &ScoringOptions) -> PairScores {
    let kind = schema.cell_kind();
    let mut pred = normalize_table(pred, kind, &opts.normalization);
    let mut gold = normalize_table(gold, kind, &opts.normalization);
    if opts.exclude_row_headers && schema.row_header_values().is_some() {
        pred = pred.without_first_column();
        gold = gold.without_first_column();
    }
    score_normalized(&pred, &gold, kind)
}

pub fn score_normalized(pred: &Table, gold: &Table, kind: CellKind) -> PairScores {
    let cell = cell_metrics(pred, gold);
    let row = row_metrics(pred, gold);
    let (table_levenshtein, table_rouge_l) = table_string_metrics(pred, gold);
    PairScores {
        cell,
        cell_f1: cell.f1(),
        cell_levenshtein: positional_cell_levenshtein(pred, gold),
        row,
        row_f1: row.f1(),
        table_exact: table_exact(pred, gold),
        table_levenshtein,
        table_rouge_l,
        rmse: (kind == CellKind::NullableInteger).then(|| rmse(pred, gold)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Origin;

    fn grid(rows: &[&[CellValue]]) -> Table {
        let width = rows.first().map_or(1, |r| r.len());
        Table::new(
            (0..width).map(|i| format!("h{i}")).collect(),
            rows.iter().map(|r| r.to_vec()).collect(),
            Origin::Gold,
        )
        .unwrap()
    }

    fn t(s: &str) -> CellValue {
        CellValue::Text(s.into())
    }

    fn i(n: i64) -> CellValue {
        CellValue::Integer(n)
    }

    #[test]
    fn f1_definition() {
        assert_eq!(Counts::default().f1(), 1.0);
        assert_eq!(Counts { tp: 0, fp: 1, fn_: 0 }.f1(), 0.0);
        assert!((Counts { tp: 3, fp: 0, fn_: 1 }.f1() - 6.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn cell_counts() {
        let gold = grid(&[&[t("a"), t("b")], &[t("c"), t("d")]]);
        assert_eq!(cell_metrics(&gold, &gold), Counts { tp: 4, fp: 0, fn_: 0 });

        let one_wrong = grid(&[&[t("a"), t("b")], &[t("c"), t("x")]]);
        let c = cell_metrics(&one_wrong, &gold);
        assert_eq!(c, Counts { tp: 3, fp: 0, fn_: 1 });
        assert!((c.f1() - 0.857).abs() < 1e-3);

        let extra = grid(&[&[t("a"), t("b")], &[t("c"), t("d")], &[t("e"), t("f")]]);
        assert_eq!(cell_metrics(&extra, &gold).fp, 2);
    }

    #[test]
    fn nulls_in_cell_counts() {
        let gold = grid(&[&[CellValue::Null, i(1)]]);
        let pred = grid(&[&[i(4), CellValue::Null]]);
        assert_eq!(cell_metrics(&pred, &gold), Counts { tp: 0, fp: 1, fn_: 1 });
        let both_null = grid(&[&[CellValue::Null, CellValue::Null]]);
        assert_eq!(cell_metrics(&both_null, &both_null), Counts::default());
    }

    #[test]
    fn row_counts() {
        let r1: &[CellValue] = &[t("a"), i(1)];
        let r2: &[CellValue] = &[t("b"), i(2)];
        let r3: &[CellValue] = &[t("c"), i(3)];
        let gold = grid(&[r1, r2]);
        assert_eq!(row_metrics(&grid(&[r2, r1]), &gold), Counts { tp: 2, fp: 0, fn_: 0 });
        assert_eq!(
            row_metrics(&grid(&[r1, r2, r3]), &gold),
            Counts { tp: 2, fp: 1, fn_: 0 }
        );
        assert_eq!(
            row_metrics(&grid(&[r1, r1]), &grid(&[r1])),
            Counts { tp: 1, fp: 1, fn_: 0 }
        );
    }

    #[test]
    fn exactness() {
        let gold = grid(&[&[t("a"), t("b")]]);
        assert!(table_exact(&gold, &gold));
        assert!(!table_exact(&grid(&[&[t("a"), t("c")]]), &gold));
        assert!(!table_exact(&grid(&[&[t("a"), t("b")], &[t("a"), t("b")]]), &gold));
    }

    #[test]
    fn positional_levenshtein() {
        let gold = grid(&[&[t("abc")]]);
        assert_eq!(positional_cell_levenshtein(&gold, &gold), 1.0);
        assert!((positional_cell_levenshtein(&grid(&[&[t("abd")]]), &gold) - 2.0 / 3.0).abs() < 1e-12);
        let wide = grid(&[&[t("x"), t("y")]]);
        assert!((positional_cell_levenshtein(&grid(&[&[t("x")]]), &wide) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn table_strings() {
        let gold = grid(&[&[t("a"), t("b")], &[t("c"), t("d")]]);
        assert_eq!(table_string_metrics(&gold, &gold), (1.0, 1.0));
        let permuted = grid(&[&[t("c"), t("d")], &[t("a"), t("b")]]);
        let (lev, rouge) = table_string_metrics(&permuted, &gold);
        assert!(lev < 1.0 && rouge < 1.0);
        // "|c|d|\n|a|b|" vs "|a|b|\n|c|d|": 4 substitutions over 11 chars; LCS 2 of 4 tokens.
        assert!((lev - (1.0 - 4.0 / 11.0)).abs() < 1e-12);
        assert!((rouge - 0.5).abs() < 1e-12);

        let empty = Table::new(vec!["h0".into(), "h1".into()], vec![], Origin::Gold).unwrap();
        assert_eq!(table_string_metrics(&empty, &gold), (0.0, 0.0));
    }

    #[test]
    fn rmse_cases() {
        let gold = grid(&[&[i(1), i(4)]]);
        let stats = rmse(&grid(&[&[i(1), i(2)]]), &gold);
        assert_eq!(stats.pairs, 2);
        assert!((stats.value().unwrap() - 2f64.sqrt()).abs() < 1e-9);
        assert_eq!(rmse(&gold, &gold).value(), Some(0.0));
        let nulls = rmse(&grid(&[&[CellValue::Null, CellValue::Null]]), &gold);
        assert_eq!((nulls.value(), nulls.pairs, nulls.excluded), (None, 0, 2));
    }

    #[test]
    fn score_pair_normalizes_and_honours_row_header_flag() {
        let schema = TableSchema::new(
            "team",
            vec!["Team".into(), "Pts".into()],
            Some(vec!["Heat".into()]),
            CellKind::NullableInteger,
        )
        .unwrap();
        let gold = Table::new(
            vec!["Team".into(), "Pts".into()],
            vec![vec![t("Heat"), i(100)]],
            Origin::Gold,
        )
        .unwrap();
        let pred = Table::new(
            vec!["team".into(), "pts".into()],
            vec![vec![t(" HEAT "), t("100")]],
            Origin::ParsedMarkdown,
        )
        .unwrap();
        let s = score_pair(&pred, &gold, &schema, &ScoringOptions::default());
        assert!(s.table_exact);
        assert_eq!(s.cell, Counts { tp: 2, fp: 0, fn_: 0 });
        assert_eq!(s.rmse.unwrap().value(), Some(0.0));

        let misnamed = pred.map_cells(|c| if c == &t(" HEAT ") { t("Miami") } else { c.clone() });
        let opts = ScoringOptions {
            exclude_row_headers: true,
            ..Default::default()
        };
        assert!(score_pair(&misnamed, &gold, &schema, &opts).table_exact);
        assert!(!score_pair(&misnamed, &gold, &schema, &ScoringOptions::default()).table_exact);
    }
}
