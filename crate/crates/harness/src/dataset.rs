//! JSON-lines dataset files.
//!
//! One object per line:
//!
//! ```json
//! {"example_id": "e2e-0", "input_text": "...", "gold_tables": [
//!   {"table_id": "restaurant", "column_headers": ["name", "food"],
//!    "row_header_values": null, "cell_kind": "text", "rows": [["The Vaults", "Italian"]]}
//! ]}
//! ```
//!
//! Cells are JSON `null`, integers or strings. Strings are trimmed; in text
//! layouts integers are kept as their decimal text.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use tabeval_core::model::{CellKind, CellValue, ExampleRecord, GoldTable, Origin, Table, TableSchema};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    InvalidRecord { line: usize, message: String },
    #[error("duplicate example_id {example_id:?} on lines {first} and {second}")]
    DuplicateId {
        example_id: String,
        first: usize,
        second: usize,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldTableLine {
    pub table_id: String,
    pub column_headers: Vec<String>,
    #[serde(default)]
    pub row_header_values: Option<Vec<String>>,
    pub cell_kind: CellKind,
    pub rows: Vec<Vec<Value>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordLine {
    pub example_id: String,
    pub input_text: String,
    pub gold_tables: Vec<GoldTableLine>,
}

fn cell_from_json(value: &Value, kind: CellKind) -> Result<CellValue, String> {
    match value {
        Value::Null => Ok(CellValue::Null),
        Value::String(s) => Ok(CellValue::text(s)),
        Value::Number(n) => {
            let int = n
                .as_i64()
                .or_else(|| {
                    n.as_f64()
                        .filter(|f| f.fract() == 0.0 && f.abs() < 9.0e15)
                        .map(|f| f as i64)
                })
                .ok_or_else(|| format!("non-integral number {n}"))?;
            Ok(match kind {
                CellKind::NullableInteger => CellValue::Integer(int),
                CellKind::Text => CellValue::Text(int.to_string()),
            })
        }
        other => Err(format!("cells must be null, integer or string, found {other}")),
    }
}

fn cell_to_json(cell: &CellValue) -> Value {
    match cell {
        CellValue::Null => Value::Null,
        CellValue::Integer(n) => Value::from(*n),
        CellValue::Text(s) => Value::String(s.clone()),
    }
}

impl GoldTableLine {
    fn into_gold(self) -> Result<GoldTable, String> {
        let schema = TableSchema::new(
            self.table_id.clone(),
            self.column_headers.clone(),
            self.row_header_values,
            self.cell_kind,
        )
        .map_err(|e| format!("table {:?}: {e}", self.table_id))?;
        let rows = self
            .rows
            .iter()
            .enumerate()
            .map(|(r, row)| {
                row.iter()
                    .map(|v| cell_from_json(v, self.cell_kind))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| format!("table {:?} row {}: {e}", self.table_id, r + 1))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let table = Table::new(self.column_headers, rows, Origin::Gold)
            .map_err(|e| format!("table {:?}: {e}", self.table_id))?;
        Ok(GoldTable { schema, table })
    }

    pub fn from_gold(gold: &GoldTable) -> Self {
        GoldTableLine {
            table_id: gold.schema.table_id().to_string(),
            column_headers: gold.schema.column_headers().to_vec(),
            row_header_values: gold.schema.row_header_values().map(<[String]>::to_vec),
            cell_kind: gold.schema.cell_kind(),
            rows: gold
                .table
                .rows()
                .iter()
                .map(|row| row.iter().map(cell_to_json).collect())
                .collect(),
        }
    }
}

impl RecordLine {
    pub fn into_record(self) -> Result<ExampleRecord, String> {
        if self.example_id.trim().is_empty() {
            return Err("example_id is empty".into());
        }
        if self.gold_tables.is_empty() {
            return Err("gold_tables is empty".into());
        }
        let golds = self
            .gold_tables
            .into_iter()
            .map(GoldTableLine::into_gold)
            .collect::<Result<Vec<_>, _>>()?;
        let mut ids: Vec<&str> = golds.iter().map(|g| g.schema.table_id()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(format!("table_id {:?} appears twice", w[0]));
        }
        ExampleRecord::new(self.example_id, self.input_text, golds).map_err(|e| e.to_string())
    }

    pub fn from_record(record: &ExampleRecord) -> Self {
        RecordLine {
            example_id: record.example_id.clone(),
            input_text: record.input_text.clone(),
            gold_tables: record.gold_tables().iter().map(GoldTableLine::from_gold).collect(),
        }
    }
}

/// Parses one dataset line. `line` is 1-based and only used in diagnostics.
pub fn parse_line(text: &str, line: usize) -> Result<ExampleRecord, DatasetError> {
    let invalid = |message: String| DatasetError::InvalidRecord { line, message };
    let raw: RecordLine = serde_json::from_str(text).map_err(|e| invalid(e.to_string()))?;
    raw.into_record().map_err(invalid)
}

/// Reads every record, stopping at the first invalid line. Blank lines are skipped.
pub fn ingest_reader(reader: impl BufRead, path: &Path) -> Result<Vec<ExampleRecord>, DatasetError> {
    let mut records = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let text = line.map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if text.trim().is_empty() {
            continue;
        }
        let record = parse_line(&text, line_no)?;
        if let Some(first) = seen.insert(record.example_id.clone(), line_no) {
            return Err(DatasetError::DuplicateId {
                example_id: record.example_id,
                first,
                second: line_no,
            });
        }
        records.push(record);
    }
    Ok(records)
}

pub fn ingest(path: &Path) -> Result<Vec<ExampleRecord>, DatasetError> {
    let file = File::open(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ingest_reader(BufReader::new(file), path)
}

pub fn write_records(records: &[ExampleRecord], mut out: impl Write) -> std::io::Result<()> {
    for record in records {
        serde_json::to_writer(&mut out, &RecordLine::from_record(record))?;
        out.write_all(b"\n")?;
    }
    out.flush()
}
