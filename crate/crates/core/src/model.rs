//! Shared data model: cells, tables, gold layouts and dataset records.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised when constructing model values that would break an invariant.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("a table needs at least one column header")]
    NoColumns,
    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("table id must not be empty")]
    EmptyTableId,
    #[error("schema '{table_id}': column header must not be empty")]
    EmptyHeader { table_id: String },
    #[error("schema '{table_id}': duplicate column header '{header}' (case-insensitive)")]
    DuplicateHeader { table_id: String, header: String },
    #[error("schema '{table_id}': row header list is present but empty")]
    EmptyRowHeaders { table_id: String },
    #[error("schema '{table_id}': duplicate row header '{value}' (case-insensitive)")]
    DuplicateRowHeader { table_id: String, value: String },
    #[error("gold table '{table_id}' does not conform to its schema")]
    NonConforming { table_id: String },
}

/// A single cell. Serialized untagged: JSON `null`, an integer, or a string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CellValue {
    Null,
    Integer(i64),
    Text(String),
}

impl CellValue {
    /// Builds a text cell with surrounding whitespace removed.
    pub fn text(s: impl AsRef<str>) -> Self {
        CellValue::Text(s.as_ref().trim().to_string())
    }

    pub fn is_null(&self) -> bool {
        matches!(self, CellValue::Null)
    }

    /// String rendering used by serializers and string metrics. Null renders as "".
    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for CellValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellValue::Null => Ok(()),
            CellValue::Integer(n) => write!(f, "{n}"),
            CellValue::Text(s) => f.write_str(s),
        }
    }
}

impl From<&str> for CellValue {
    fn from(s: &str) -> Self {
        CellValue::text(s)
    }
}

impl From<i64> for CellValue {
    fn from(n: i64) -> Self {
        CellValue::Integer(n)
    }
}

/// Where a table came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Gold,
    ParsedMarkdown,
    ParsedStructured,
}

/// The declared type of non-header cells in a gold layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    NullableInteger,
    Text,
}

/// A rectangular grid with one header row.
///
/// Equality compares headers and cells only; `origin` is provenance.
#[derive(Debug, Clone, Serialize)]
pub struct Table {
    column_headers: Vec<String>,
    rows: Vec<Vec<CellValue>>,
    origin: Origin,
}

impl Table {
    pub fn new(column_headers: Vec<String>, rows: Vec<Vec<CellValue>>, origin: Origin) -> Result<Self, ModelError> {
        if column_headers.is_empty() {
            return Err(ModelError::NoColumns);
        }
        let width = column_headers.len();
        if let Some((row, cells)) = rows.iter().enumerate().find(|(_, r)| r.len() != width) {
            return Err(ModelError::RaggedRow {
                row,
                expected: width,
                found: cells.len(),
            });
        }
        Ok(Table {
            column_headers,
            rows,
            origin,
        })
    }

    pub fn column_headers(&self) -> &[String] {
        &self.column_headers
    }

    pub fn rows(&self) -> &[Vec<CellValue>] {
        &self.rows
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn width(&self) -> usize {
        self.column_headers.len()
    }

    pub fn cell(&self, row: usize, col: usize) -> Option<&CellValue> {
        self.rows.get(row).and_then(|r| r.get(col))
    }

    /// Returns a copy with every cell passed through `f`. Shape is preserved.
    pub fn map_cells(&self, mut f: impl FnMut(&CellValue) -> CellValue) -> Table {
        Table {
            column_headers: self.column_headers.clone(),
            rows: self.rows.iter().map(|r| r.iter().map(&mut f).collect()).collect(),
            origin: self.origin,
        }
    }

    /// Returns a copy without the first column. Tables with a single column are
    /// returned unchanged.
    pub fn without_first_column(&self) -> Table {
        if self.width() < 2 {
            return self.clone();
        }
        Table {
            column_headers: self.column_headers[1..].to_vec(),
            rows: self.rows.iter().map(|r| r[1..].to_vec()).collect(),
            origin: self.origin,
        }
    }
}

impl PartialEq for Table {
    fn eq(&self, other: &Self) -> bool {
        self.column_headers == other.column_headers && self.rows == other.rows
    }
}

impl Eq for Table {}

/// Case-insensitive comparison key for headers.
pub(crate) fn header_key(s: &str) -> String {
    s.trim().to_lowercase()
}

/// The layout of one expected gold table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSchema {
    table_id: String,
    column_headers: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    row_header_values: Option<Vec<String>>,
    cell_kind: CellKind,
}

impl TableSchema {
    pub fn new(
        table_id: impl Into<String>,
        column_headers: Vec<String>,
        row_header_values: Option<Vec<String>>,
        cell_kind: CellKind,
    ) -> Result<Self, ModelError> {
        let table_id = table_id.into();
        if table_id.is_empty() {
            return Err(ModelError::EmptyTableId);
        }
        if column_headers.is_empty() {
            return Err(ModelError::NoColumns);
        }
        let mut seen = HashSet::new();
        for header in &column_headers {
            if header.trim().is_empty() {
                return Err(ModelError::EmptyHeader { table_id });
            }
            if !seen.insert(header_key(header)) {
                return Err(ModelError::DuplicateHeader {
                    table_id,
                    header: header.clone(),
                });
            }
        }
        if let Some(values) = &row_header_values {
            if values.is_empty() {
                return Err(ModelError::EmptyRowHeaders { table_id });
            }
            let mut seen = HashSet::new();
            for value in values {
                if !seen.insert(header_key(value)) {
                    return Err(ModelError::DuplicateRowHeader {
                        table_id,
                        value: value.clone(),
                    });
                }
            }
        }
        Ok(TableSchema {
            table_id,
            column_headers,
            row_header_values,
            cell_kind,
        })
    }

    pub fn table_id(&self) -> &str {
        &self.table_id
    }

    pub fn column_headers(&self) -> &[String] {
        &self.column_headers
    }

    pub fn row_header_values(&self) -> Option<&[String]> {
        self.row_header_values.as_deref()
    }

    pub fn cell_kind(&self) -> CellKind {
        self.cell_kind
    }
}

/// A gold table together with the layout it was drawn from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldTable {
    pub schema: TableSchema,
    pub table: Table,
}

/// One benchmark example: an input passage and its expected tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExampleRecord {
    pub example_id: String,
    pub input_text: String,
    gold_tables: Vec<GoldTable>,
}

impl ExampleRecord {
    pub fn new(
        example_id: impl Into<String>,
        input_text: impl Into<String>,
        gold_tables: Vec<GoldTable>,
    ) -> Result<Self, ModelError> {
        for gold in &gold_tables {
            if !conforms(&gold.table, &gold.schema) {
                return Err(ModelError::NonConforming {
                    table_id: gold.schema.table_id.clone(),
                });
            }
        }
        Ok(ExampleRecord {
            example_id: example_id.into(),
            input_text: input_text.into(),
            gold_tables,
        })
    }

    pub fn gold_tables(&self) -> &[GoldTable] {
        &self.gold_tables
    }

    pub fn schemas(&self) -> Vec<TableSchema> {
        self.gold_tables.iter().map(|g| g.schema.clone()).collect()
    }
}

/// True when `table` has the schema's column headers (case-insensitively, in
/// order) and, if the schema fixes row headers, its first column lists exactly
/// those values in order.
pub fn conforms(table: &Table, schema: &TableSchema) -> bool {
    let headers_match = table.column_headers.len() == schema.column_headers.len()
        && table
            .column_headers
            .iter()
            .zip(&schema.column_headers)
            .all(|(a, b)| header_key(a) == header_key(b));
    if !headers_match {
        return false;
    }
    match &schema.row_header_values {
        None => true,
        Some(values) => {
            table.rows.len() == values.len()
                && table
                    .rows
                    .iter()
                    .zip(values)
                    .all(|(row, expected)| header_key(&row[0].render()) == header_key(expected))
        }
    }
}

/// `(data rows, columns)`; the header row is not counted.
pub fn table_shape(table: &Table) -> (usize, usize) {
    (table.rows.len(), table.column_headers.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    fn text_row(xs: &[&str]) -> Vec<CellValue> {
        xs.iter().map(CellValue::text).collect()
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let err = Table::new(
            strings(&["a", "b"]),
            vec![text_row(&["1", "2"]), text_row(&["3"])],
            Origin::Gold,
        )
        .unwrap_err();
        assert_eq!(
            err,
            ModelError::RaggedRow {
                row: 1,
                expected: 2,
                found: 1
            }
        );
        assert_eq!(
            Table::new(vec![], vec![], Origin::Gold).unwrap_err(),
            ModelError::NoColumns
        );
    }

    #[test]
    fn text_cells_are_trimmed() {
        assert_eq!(CellValue::text("  The Vaults \t"), CellValue::Text("The Vaults".into()));
    }

    #[test]
    fn conforms_is_case_insensitive() {
        let table = Table::new(strings(&["A", "B"]), vec![], Origin::Gold).unwrap();
        let schema = TableSchema::new("t", strings(&["a", "b"]), None, CellKind::Text).unwrap();
        assert!(conforms(&table, &schema));

        let wide = Table::new(strings(&["A", "B", "C"]), vec![], Origin::Gold).unwrap();
        let narrow = TableSchema::new("t", strings(&["A", "B"]), None, CellKind::Text).unwrap();
        assert!(!conforms(&wide, &narrow));
    }

    #[test]
    fn conforms_checks_row_headers_in_order() {
        let table = Table::new(
            strings(&["Team", "Points"]),
            vec![
                vec![CellValue::text("Lakers"), CellValue::Integer(100)],
                vec![CellValue::text("Celtics"), CellValue::Integer(98)],
            ],
            Origin::Gold,
        )
        .unwrap();
        let schema = TableSchema::new(
            "team",
            strings(&["team", "points"]),
            Some(strings(&["lakers", "celtics"])),
            CellKind::NullableInteger,
        )
        .unwrap();
        assert!(conforms(&table, &schema));

        let swapped = TableSchema::new(
            "team",
            strings(&["team", "points"]),
            Some(strings(&["celtics", "lakers"])),
            CellKind::NullableInteger,
        )
        .unwrap();
        assert!(!conforms(&table, &swapped));

        let short = TableSchema::new(
            "team",
            strings(&["team", "points"]),
            Some(strings(&["lakers"])),
            CellKind::NullableInteger,
        )
        .unwrap();
        assert!(!conforms(&table, &short));
    }

    #[test]
    fn shapes() {
        let headers: Vec<String> = (0..7).map(|i| format!("h{i}")).collect();
        let row = vec![CellValue::Null; 7];
        let t = Table::new(headers, vec![row.clone(), row], Origin::Gold).unwrap();
        assert_eq!(table_shape(&t), (2, 7));

        let t = Table::new(strings(&["only"]), vec![], Origin::Gold).unwrap();
        assert_eq!(table_shape(&t), (0, 1));

        let headers: Vec<String> = (0..9).map(|i| format!("h{i}")).collect();
        let t = Table::new(headers, vec![vec![CellValue::Integer(0); 9]; 3], Origin::Gold).unwrap();
        assert_eq!(table_shape(&t), (3, 9));
    }

    #[test]
    fn schema_invariants() {
        assert!(matches!(
            TableSchema::new("t", strings(&["A", "a"]), None, CellKind::Text),
            Err(ModelError::DuplicateHeader { .. })
        ));
        assert!(matches!(
            TableSchema::new("t", strings(&["A"]), Some(vec![]), CellKind::Text),
            Err(ModelError::EmptyRowHeaders { .. })
        ));
        assert!(matches!(
            TableSchema::new("t", strings(&["A"]), Some(strings(&["x", "X"])), CellKind::Text),
            Err(ModelError::DuplicateRowHeader { .. })
        ));
        assert!(matches!(
            TableSchema::new("", strings(&["A"]), None, CellKind::Text),
            Err(ModelError::EmptyTableId)
        ));
    }

    #[test]
    fn records_reject_non_conforming_gold() {
        let schema = TableSchema::new("t", strings(&["a"]), None, CellKind::Text).unwrap();
        let table = Table::new(strings(&["b"]), vec![], Origin::Gold).unwrap();
        let err = ExampleRecord::new("x", "", vec![GoldTable { schema, table }]).unwrap_err();
        assert!(matches!(err, ModelError::NonConforming { .. }));
    }

    #[test]
    fn cell_value_json_is_untagged() {
        let cells: Vec<CellValue> = serde_json::from_str(r#"[null, 12, "x"]"#).unwrap();
        assert_eq!(
            cells,
            vec![CellValue::Null, CellValue::Integer(12), CellValue::Text("x".into())]
        );
        assert_eq!(serde_json::to_string(&cells).unwrap(), r#"[null,12,"x"]"#);
    }
}
