//! Descriptive statistics over gold tables and input texts.
//!
//! Row counts include the header row, so a table with one data row has 2 rows.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use tabeval_core::model::{table_shape, ExampleRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub min: usize,
    pub max: usize,
    pub mean: f64,
}

impl Summary {
    fn of(values: &[usize]) -> Option<Summary> {
        let min = *values.iter().min()?;
        let max = *values.iter().max()?;
        let mean = values.iter().sum::<usize>() as f64 / values.len() as f64;
        Some(Summary { min, max, mean })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableStats {
    pub n: usize,
    pub rows: Summary,
    pub cols: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetStats {
    pub n: usize,
    pub words: Option<Summary>,
    pub tables: BTreeMap<String, TableStats>,
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

pub fn describe(records: &[ExampleRecord]) -> DatasetStats {
    let mut shapes: BTreeMap<&str, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for record in records {
        for gold in record.gold_tables() {
            let (data_rows, cols) = table_shape(&gold.table);
            let entry = shapes.entry(gold.schema.table_id()).or_default();
            entry.0.push(data_rows + 1);
            entry.1.push(cols);
        }
    }
    let words: Vec<usize> = records.iter().map(|r| word_count(&r.input_text)).collect();
    DatasetStats {
        n: records.len(),
        words: Summary::of(&words),
        tables: shapes
            .into_iter()
            .map(|(id, (rows, cols))| {
                let stats = TableStats {
                    n: rows.len(),
                    rows: Summary::of(&rows).expect("non-empty"),
                    cols: Summary::of(&cols).expect("non-empty"),
                };
                (id.to_string(), stats)
            })
            .collect(),
    }
}

/// Plain-text rendering, one line per (dataset, table type).
pub fn render_text(named: &[(String, DatasetStats)]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<12} {:<12} {:>6} {:>5} {:>5} {:>8} {:>5} {:>5} {:>8} {:>6} {:>6} {:>6} {:>9}",
        "dataset",
        "table",
        "N",
        "r.min",
        "r.max",
        "r.mean",
        "c.min",
        "c.max",
        "c.mean",
        "texts",
        "w.min",
        "w.max",
        "w.mean"
    )
    .unwrap();
    for (name, stats) in named {
        let (wmin, wmax, wmean) = match stats.words {
            Some(w) => (w.min.to_string(), w.max.to_string(), format!("{:.2}", w.mean)),
            None => ("-".into(), "-".into(), "-".into()),
        };
        for (table, t) in &stats.tables {
            writeln!(
                out,
                "{:<12} {:<12} {:>6} {:>5} {:>5} {:>8.2} {:>5} {:>5} {:>8.2} {:>6} {:>6} {:>6} {:>9}",
                name,
                table,
                t.n,
                t.rows.min,
                t.rows.max,
                t.rows.mean,
                t.cols.min,
                t.cols.max,
                t.cols.mean,
                stats.n,
                wmin,
                wmax,
                wmean
            )
            .unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use tabeval_core::model::{CellKind, CellValue, GoldTable, Origin, Table, TableSchema};

    fn record(id: &str, text: &str, cols: usize) -> ExampleRecord {
        let headers: Vec<String> = (0..cols).map(|i| format!("h{i}")).collect();
        let schema = TableSchema::new("t", headers.clone(), None, CellKind::Text).unwrap();
        let table = Table::new(headers, vec![vec![CellValue::text("x"); cols]], Origin::Gold).unwrap();
        ExampleRecord::new(id, text, vec![GoldTable { schema, table }]).unwrap()
    }

    #[test]
    fn singleton_has_equal_min_max_mean() {
        let s = describe(&[record("a", "one two three", 4)]);
        let t = &s.tables["t"];
        assert_eq!(
            t.rows,
            Summary {
                min: 2,
                max: 2,
                mean: 2.0
            }
        );
        assert_eq!(
            t.cols,
            Summary {
                min: 4,
                max: 4,
                mean: 4.0
            }
        );
        assert_eq!(
            s.words,
            Some(Summary {
                min: 3,
                max: 3,
                mean: 3.0
            })
        );
    }

    #[test]
    fn empty_dataset() {
        let s = describe(&[]);
        assert_eq!(s.n, 0);
        assert!(s.words.is_none() && s.tables.is_empty());
    }

    #[test]
    fn text_rendering_has_one_line_per_table_type() {
        let s = describe(&[record("a", "w", 1), record("b", "w w", 3)]);
        let text = render_text(&[("demo".into(), s)]);
        assert_eq!(text.lines().count(), 2);
        assert!(text.contains("2.00"));
        assert!(text.contains("1.50"));
    }
}
