//! JSON Schema construction for guided decoding, and the inverse mapping from a
//! guided JSON completion back to tables.
//!
//! Property keys must be identifier-safe, so every header is passed through
//! [`sanitize_key`] and the original text is kept in the property's `title`.
//! A table with fixed row headers becomes an object keyed by the sanitized row
//! headers, each holding one property per remaining column. A table without
//! row headers becomes a single flat object with one property per column.
//! Every object is closed (`additionalProperties: false`) and every property is
//! required; cells are `integer|null` or `string|null` depending on the layout's
//! [`CellKind`].

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::model::{CellKind, CellValue, GoldTable, Origin, Table, TableSchema};

pub const SCHEMA_DIALECT: &str = "https://json-schema.org/draft/2020-12/schema";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("no table layouts given")]
    EmptySchemaList,
    #[error("header {0:?} has no identifier-safe characters")]
    Unsanitizable(String),
    #[error("table '{table_id}': {first:?} and {second:?} both map to key '{key}'")]
    KeyCollision {
        table_id: String,
        first: String,
        second: String,
        key: String,
    },
    #[error("table id '{0}' appears more than once")]
    DuplicateTableId(String),
}

/// Turns a header into a property key matching `[a-z_][a-z0-9_]*`.
///
/// camelCase boundaries become underscores, the result is lowercased, every run
/// of non-alphanumeric characters collapses to one `_`, outer underscores are
/// stripped and a leading digit gets an `f_` prefix.
pub fn sanitize_key(header: &str) -> Result<String, SchemaError> {
    let mut out = String::with_capacity(header.len() + 2);
    let mut pending_gap = false;
    let mut prev_lower = false;
    for ch in header.chars() {
        if ch.is_ascii_alphanumeric() {
            if (pending_gap || (prev_lower && ch.is_ascii_uppercase())) && !out.is_empty() {
                out.push('_');
            }
            pending_gap = false;
            prev_lower = ch.is_ascii_lowercase() || ch.is_ascii_digit();
            out.push(ch.to_ascii_lowercase());
        } else {
            pending_gap = true;
            prev_lower = false;
        }
    }
    if out.is_empty() {
        return Err(SchemaError::Unsanitizable(header.to_string()));
    }
    if out.starts_with(|c: char| c.is_ascii_digit()) {
        out.insert_str(0, "f_");
    }
    Ok(out)
}

/// A sanitized property key and the original header it stands for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyTitle {
    pub key: String,
    pub title: String,
}

/// Key/title bookkeeping for one table in a [`SchemaDocument`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableKeys {
    pub table_id: String,
    pub cell_kind: CellKind,
    /// All column headers, in order, including a row-header column if any.
    pub column_headers: Vec<String>,
    /// Keys for the value columns (all columns, or all but the first when rows are fixed).
    pub columns: Vec<KeyTitle>,
    /// Keys for the fixed row headers, when the layout has them.
    pub rows: Option<Vec<KeyTitle>>,
}

impl TableKeys {
    pub fn title_for(&self, key: &str) -> Option<&str> {
        self.columns
            .iter()
            .chain(self.rows.iter().flatten())
            .find(|kt| kt.key == key)
            .map(|kt| kt.title.as_str())
    }
}

/// A guided-decoding schema plus what is needed to invert completions against it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaDocument {
    pub json_schema_text: String,
    pub tables: Vec<TableKeys>,
}

impl SchemaDocument {
    pub fn table_order(&self) -> impl Iterator<Item = &str> {
        self.tables.iter().map(|t| t.table_id.as_str())
    }

    pub fn schema_value(&self) -> Value {
        serde_json::from_str(&self.json_schema_text).expect("schema text is generated JSON")
    }
}

fn keyed(table_id: &str, items: &[String]) -> Result<Vec<KeyTitle>, SchemaError> {
    let mut seen: HashMap<String, &str> = HashMap::new();
    let mut out = Vec::with_capacity(items.len());
    for item in items {
        let key = sanitize_key(item)?;
        if let Some(first) = seen.insert(key.clone(), item) {
            return Err(SchemaError::KeyCollision {
                table_id: table_id.to_string(),
                first: first.to_string(),
                second: item.clone(),
                key,
            });
        }
        out.push(KeyTitle {
            key,
            title: item.clone(),
        });
    }
    Ok(out)
}

fn cell_schema(kind: CellKind, title: &str) -> Value {
    let ty = match kind {
        CellKind::NullableInteger => "integer",
        CellKind::Text => "string",
    };
    json!({ "type": [ty, "null"], "title": title })
}

fn closed_object(title: &str, properties: Map<String, Value>) -> Value {
    let required: Vec<Value> = properties.keys().cloned().map(Value::String).collect();
    json!({
        "type": "object",
        "title": title,
        "properties": properties,
        "required": required,
        "additionalProperties": false,
    })
}

fn table_keys(schema: &TableSchema) -> Result<TableKeys, SchemaError> {
    let table_id = schema.table_id();
    let headers = schema.column_headers();
    let (columns, rows) = match schema.row_header_values() {
        Some(values) => (keyed(table_id, &headers[1..])?, Some(keyed(table_id, values)?)),
        None => (keyed(table_id, headers)?, None),
    };
    Ok(TableKeys {
        table_id: table_id.to_string(),
        cell_kind: schema.cell_kind(),
        column_headers: headers.to_vec(),
        columns,
        rows,
    })
}

fn table_schema_value(keys: &TableKeys) -> Value {
    let cells: Map<String, Value> = keys
        .columns
        .iter()
        .map(|kt| (kt.key.clone(), cell_schema(keys.cell_kind, &kt.title)))
        .collect();
    match &keys.rows {
        None => closed_object(&keys.table_id, cells),
        Some(rows) => {
            let row_props: Map<String, Value> = rows
                .iter()
                .map(|kt| (kt.key.clone(), closed_object(&kt.title, cells.clone())))
                .collect();
            closed_object(&keys.table_id, row_props)
        }
    }
}

pub fn build_schema(schemas: &[TableSchema]) -> Result<SchemaDocument, SchemaError> {
    if schemas.is_empty() {
        return Err(SchemaError::EmptySchemaList);
    }
    let mut tables: Vec<TableKeys> = Vec::with_capacity(schemas.len());
    for schema in schemas {
        if tables.iter().any(|t| t.table_id == schema.table_id()) {
            return Err(SchemaError::DuplicateTableId(schema.table_id().to_string()));
        }
        tables.push(table_keys(schema)?);
    }
    let properties: Map<String, Value> = tables
        .iter()
        .map(|keys| (keys.table_id.clone(), table_schema_value(keys)))
        .collect();
    let mut root = closed_object("tables", properties);
    root.as_object_mut()
        .expect("object")
        .insert("$schema".into(), Value::String(SCHEMA_DIALECT.into()));
    Ok(SchemaDocument {
        json_schema_text: serde_json::to_string(&root).expect("serializable"),
        tables,
    })
}

fn cell_json(cell: &CellValue) -> Value {
    match cell {
        CellValue::Null => Value::Null,
        CellValue::Integer(n) => json!(n),
        CellValue::Text(s) => Value::String(s.clone()),
    }
}

/// The JSON instance a perfect guided completion would produce for one gold table.
///
/// Flat layouts take their values from the first data row.
pub fn gold_instance(keys: &TableKeys, table: &Table) -> Value {
    match &keys.rows {
        None => {
            let row = table.rows().first();
            let obj: Map<String, Value> = keys
                .columns
                .iter()
                .enumerate()
                .map(|(i, kt)| {
                    let v = row.and_then(|r| r.get(i)).map(cell_json).unwrap_or(Value::Null);
                    (kt.key.clone(), v)
                })
                .collect();
            Value::Object(obj)
        }
        Some(rows) => {
            let obj: Map<String, Value> = rows
                .iter()
                .enumerate()
                .map(|(r, row_kt)| {
                    let cells: Map<String, Value> = keys
                        .columns
                        .iter()
                        .enumerate()
                        .map(|(c, kt)| {
                            let v = table.cell(r, c + 1).map(cell_json).unwrap_or(Value::Null);
                            (kt.key.clone(), v)
                        })
                        .collect();
                    (row_kt.key.clone(), Value::Object(cells))
                })
                .collect();
            Value::Object(obj)
        }
    }
}

/// The full guided completion a perfect model would produce for `golds`.
pub fn gold_document_instance(doc: &SchemaDocument, golds: &[GoldTable]) -> Value {
    let obj: Map<String, Value> = doc
        .tables
        .iter()
        .zip(golds)
        .map(|(keys, gold)| (keys.table_id.clone(), gold_instance(keys, &gold.table)))
        .collect();
    Value::Object(obj)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StructuredFailureKind {
    MalformedJson,
    MissingTable,
    InvalidTable,
    MissingRow,
    InvalidCell,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuredFailure {
    pub kind: StructuredFailureKind,
    pub table_id: Option<String>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveredTable {
    pub table_id: String,
    pub table: Table,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StructuredOutcome {
    pub tables: Vec<RecoveredTable>,
    pub failures: Vec<StructuredFailure>,
}

impl StructuredOutcome {
    pub fn table(&self, table_id: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.table_id == table_id).map(|t| &t.table)
    }
}

fn failure(kind: StructuredFailureKind, table_id: Option<&str>, detail: String) -> StructuredFailure {
    StructuredFailure {
        kind,
        table_id: table_id.map(String::from),
        detail,
    }
}

fn json_cell(value: &Value, kind: CellKind) -> Option<CellValue> {
    match (value, kind) {
        (Value::Null, _) => Some(CellValue::Null),
        (Value::Number(n), CellKind::NullableInteger) => n
            .as_i64()
            .or_else(|| {
                n.as_f64()
                    .filter(|f| f.fract() == 0.0 && f.abs() < 9.0e15)
                    .map(|f| f as i64)
            })
            .map(CellValue::Integer),
        (Value::String(s), CellKind::Text) => Some(CellValue::text(s)),
        _ => None,
    }
}

fn warn_extra_keys(obj: &Map<String, Value>, known: &[&str], context: &str) {
    for key in obj.keys().filter(|k| !known.contains(&k.as_str())) {
        tracing::warn!(key = %key, context, "ignoring unexpected key in structured output");
    }
}

/// Reads cells for `columns` out of one row object. Bad or missing cells become Null.
fn read_cells(
    obj: &Map<String, Value>,
    keys: &TableKeys,
    context: &str,
    failures: &mut Vec<StructuredFailure>,
) -> Vec<CellValue> {
    let known: Vec<&str> = keys.columns.iter().map(|kt| kt.key.as_str()).collect();
    warn_extra_keys(obj, &known, context);
    keys.columns
        .iter()
        .map(|kt| match obj.get(&kt.key) {
            None => {
                failures.push(failure(
                    StructuredFailureKind::InvalidCell,
                    Some(&keys.table_id),
                    format!("{context}: missing cell '{}'", kt.key),
                ));
                CellValue::Null
            }
            Some(v) => json_cell(v, keys.cell_kind).unwrap_or_else(|| {
                failures.push(failure(
                    StructuredFailureKind::InvalidCell,
                    Some(&keys.table_id),
                    format!("{context}: cell '{}' has wrong type: {v}", kt.key),
                ));
                CellValue::Null
            }),
        })
        .collect()
}

fn recover_table(value: &Value, keys: &TableKeys, failures: &mut Vec<StructuredFailure>) -> Option<Table> {
    let Some(obj) = value.as_object() else {
        failures.push(failure(
            StructuredFailureKind::InvalidTable,
            Some(&keys.table_id),
            format!("expected an object, found {value}"),
        ));
        return None;
    };
    let rows = match &keys.rows {
        None => vec![read_cells(obj, keys, &keys.table_id, failures)],
        Some(row_keys) => {
            let known: Vec<&str> = row_keys.iter().map(|kt| kt.key.as_str()).collect();
            warn_extra_keys(obj, &known, &keys.table_id);
            row_keys
                .iter()
                .map(|row_kt| {
                    let mut row = vec![CellValue::text(&row_kt.title)];
                    match obj.get(&row_kt.key).and_then(Value::as_object) {
                        Some(row_obj) => {
                            let context = format!("{}.{}", keys.table_id, row_kt.key);
                            row.extend(read_cells(row_obj, keys, &context, failures));
                        }
                        None => {
                            failures.push(failure(
                                StructuredFailureKind::MissingRow,
                                Some(&keys.table_id),
                                format!("row '{}' missing or not an object", row_kt.key),
                            ));
                            row.extend(std::iter::repeat_n(CellValue::Null, keys.columns.len()));
                        }
                    }
                    row
                })
                .collect()
        }
    };
    Some(
        Table::new(keys.column_headers.clone(), rows, Origin::ParsedStructured)
            .expect("rows are built to header width"),
    )
}

/// Inverts a guided completion: sanitized keys are swapped back to their
/// titles and each top-level table object becomes a [`Table`], rows in layout
/// order. Unparseable JSON reports every expected table missing.
pub fn parse_structured_output(json_text: &str, doc: &SchemaDocument) -> StructuredOutcome {
    let mut outcome = StructuredOutcome::default();
    let root = match serde_json::from_str::<Value>(json_text) {
        Ok(Value::Object(root)) => root,
        Ok(other) => {
            outcome.failures.push(failure(
                StructuredFailureKind::MalformedJson,
                None,
                format!("top level is not an object: {}", type_name(&other)),
            ));
            outcome.failures.extend(missing_all(doc));
            return outcome;
        }
        Err(err) => {
            outcome
                .failures
                .push(failure(StructuredFailureKind::MalformedJson, None, err.to_string()));
            outcome.failures.extend(missing_all(doc));
            return outcome;
        }
    };
    let known: Vec<&str> = doc.table_order().collect();
    warn_extra_keys(&root, &known, "root");
    for keys in &doc.tables {
        match root.get(&keys.table_id) {
            None => outcome.failures.push(failure(
                StructuredFailureKind::MissingTable,
                Some(&keys.table_id),
                "table absent from output".into(),
            )),
            Some(value) => {
                if let Some(table) = recover_table(value, keys, &mut outcome.failures) {
                    outcome.tables.push(RecoveredTable {
                        table_id: keys.table_id.clone(),
                        table,
                    });
                }
            }
        }
    }
    outcome
}

fn missing_all(doc: &SchemaDocument) -> Vec<StructuredFailure> {
    doc.tables
        .iter()
        .map(|k| {
            failure(
                StructuredFailureKind::MissingTable,
                Some(&k.table_id),
                "no usable JSON in output".into(),
            )
        })
        .collect()
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}
