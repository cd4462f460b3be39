//! Adapters from public benchmark releases to the dataset line format.
//!
//! * `e2e`: the E2E NLG CSV release (`mr`, `ref` columns). Each meaning
//!   representation `attr[value], ...` becomes a one-row text table.
//! * `rotowire`: the text-to-table release, a `.data` file of tables
//!   (`<NEWLINE>`-separated rows, `Team:` / `Player:` section markers) plus a
//!   parallel `.text` file of summaries.
//! * `livesum`: JSON lines with `text` and `table`, where `table` is either a
//!   markdown table or an array of rows whose first row holds the headers.
//!
//! Lines that cannot be converted are skipped and reported, so one malformed
//! source line does not sink a whole split.

use std::io::{BufRead, Read};
use std::sync::LazyLock;

use regex::Regex;
use serde_json::Value;
use tabeval_core::markdown::parse_all;
use tabeval_core::model::{CellKind, CellValue, ExampleRecord, GoldTable, Origin, Table, TableSchema};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SourceFormat {
    E2e,
    Rotowire,
    Livesum,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skipped {
    /// 1-based line (or CSV record) number in the source.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct Converted {
    pub records: Vec<ExampleRecord>,
    pub skipped: Vec<Skipped>,
}

impl Converted {
    fn push(&mut self, line: usize, result: Result<ExampleRecord, String>) {
        match result {
            Ok(r) => self.records.push(r),
            Err(reason) => self.skipped.push(Skipped { line, reason }),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConvertError {
    #[error("read error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Format(String),
}

static MR_ITEM: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\s*([^\[\],][^\[\]]*?)\s*\[([^\]]*)\]\s*(?:,|$)").unwrap());

/// Splits an E2E meaning representation into (attribute, value) pairs.
pub fn parse_mr(mr: &str) -> Result<Vec<(String, String)>, String> {
    let mut pairs = Vec::new();
    let mut consumed = 0;
    for cap in MR_ITEM.captures_iter(mr) {
        let whole = cap.get(0).unwrap();
        if whole.start() != consumed {
            return Err(format!(
                "unparsable text in meaning representation near {:?}",
                &mr[consumed..whole.start()]
            ));
        }
        consumed = whole.end();
        pairs.push((cap[1].trim().to_string(), cap[2].trim().to_string()));
    }
    if consumed != mr.len() && !mr[consumed..].trim().is_empty() {
        return Err(format!(
            "unparsable text in meaning representation near {:?}",
            &mr[consumed..]
        ));
    }
    if pairs.is_empty() {
        return Err("empty meaning representation".into());
    }
    Ok(pairs)
}

fn e2e_record(n: usize, mr: &str, text: &str) -> Result<ExampleRecord, String> {
    let pairs = parse_mr(mr)?;
    let headers: Vec<String> = pairs.iter().map(|(a, _)| a.clone()).collect();
    let row: Vec<CellValue> = pairs.iter().map(|(_, v)| CellValue::text(v)).collect();
    let schema = TableSchema::new("restaurant", headers.clone(), None, CellKind::Text).map_err(|e| e.to_string())?;
    let table = Table::new(headers, vec![row], Origin::Gold).map_err(|e| e.to_string())?;
    ExampleRecord::new(format!("e2e-{n:05}"), text.trim(), vec![GoldTable { schema, table }]).map_err(|e| e.to_string())
}

pub fn convert_e2e(csv_source: impl Read) -> Result<Converted, ConvertError> {
    let mut reader = csv::Reader::from_reader(csv_source);
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .ok_or_else(|| ConvertError::Format(format!("E2E CSV has no {name:?} column")))
    };
    let (mr_col, ref_col) = (column("mr")?, column("ref")?);
    let mut out = Converted::default();
    for (i, row) in reader.records().enumerate() {
        let n = i + 1;
        let row = row?;
        let result = match (row.get(mr_col), row.get(ref_col)) {
            (Some(mr), Some(text)) => e2e_record(n, mr, text),
            _ => Err("short CSV record".into()),
        };
        out.push(n + 1, result);
    }
    Ok(out)
}

fn split_row(line: &str) -> Vec<String> {
    let t = line.trim();
    let t = t.strip_prefix('|').unwrap_or(t);
    let t = t.strip_suffix('|').unwrap_or(t);
    t.split('|').map(|c| c.trim().to_string()).collect()
}

fn numeric_cell(raw: &str) -> Result<CellValue, String> {
    match raw.trim() {
        "" | "-" | "N/A" | "n/a" => Ok(CellValue::Null),
        s => s
            .replace(',', "")
            .parse::<i64>()
            .map(CellValue::Integer)
            .map_err(|_| format!("non-integer cell {s:?}")),
    }
}

/// A numeric table whose first column names the rows.
fn row_keyed_table(table_id: &str, mut headers: Vec<String>, rows: Vec<Vec<String>>) -> Result<GoldTable, String> {
    if headers.first().is_some_and(|h| h.is_empty()) {
        let mut chars = table_id.chars();
        headers[0] = chars
            .next()
            .map(|c| c.to_uppercase().chain(chars).collect())
            .unwrap_or_default();
    }
    let width = headers.len();
    let mut names = Vec::with_capacity(rows.len());
    let mut cells = Vec::with_capacity(rows.len());
    for (r, row) in rows.into_iter().enumerate() {
        if row.len() != width {
            return Err(format!(
                "{table_id} row {} has {} cells, header has {width}",
                r + 1,
                row.len()
            ));
        }
        let mut out = vec![CellValue::text(&row[0])];
        for raw in &row[1..] {
            out.push(numeric_cell(raw).map_err(|e| format!("{table_id} row {}: {e}", r + 1))?);
        }
        names.push(row[0].trim().to_string());
        cells.push(out);
    }
    let schema = TableSchema::new(table_id, headers.clone(), Some(names), CellKind::NullableInteger)
        .map_err(|e| e.to_string())?;
    let table = Table::new(headers, cells, Origin::Gold).map_err(|e| e.to_string())?;
    Ok(GoldTable { schema, table })
}

/// Parses one `.data` line of the text-to-table Rotowire release into its
/// team and player tables (either may be absent).
pub fn parse_rotowire_tables(line: &str) -> Result<Vec<GoldTable>, String> {
    let mut sections: Vec<(String, Vec<Vec<String>>)> = Vec::new();
    for segment in line.split("<NEWLINE>").map(str::trim).filter(|s| !s.is_empty()) {
        match segment.strip_suffix(':') {
            Some(label) if !segment.starts_with('|') => sections.push((label.trim().to_lowercase(), Vec::new())),
            _ => match sections.last_mut() {
                Some((_, rows)) => rows.push(split_row(segment)),
                None => return Err("row before any Team:/Player: marker".into()),
            },
        }
    }
    let mut tables = Vec::new();
    for (label, mut rows) in sections {
        if rows.is_empty() {
            continue;
        }
        let headers = rows.remove(0);
        if rows.is_empty() {
            continue;
        }
        tables.push(row_keyed_table(&label, headers, rows)?);
    }
    if tables.is_empty() {
        return Err("no tables".into());
    }
    Ok(tables)
}

pub fn convert_rotowire(data: impl BufRead, text: impl BufRead) -> Result<Converted, ConvertError> {
    let data: Vec<String> = data.lines().collect::<Result<_, _>>()?;
    let text: Vec<String> = text.lines().collect::<Result<_, _>>()?;
    if data.len() != text.len() {
        return Err(ConvertError::Format(format!(
            "{} table lines but {} text lines",
            data.len(),
            text.len()
        )));
    }
    let mut out = Converted::default();
    for (i, (d, t)) in data.iter().zip(&text).enumerate() {
        let result = parse_rotowire_tables(d).and_then(|golds| {
            ExampleRecord::new(format!("rotowire-{:05}", i + 1), t.trim(), golds).map_err(|e| e.to_string())
        });
        out.push(i + 1, result);
    }
    Ok(out)
}

fn livesum_rows(table: &Value) -> Result<Vec<Vec<String>>, String> {
    match table {
        Value::String(md) => {
            let outcome = parse_all(md);
            let t = outcome
                .tables
                .into_iter()
                .next()
                .ok_or_else(|| "table string holds no valid markdown table".to_string())?;
            let mut rows = vec![t.column_headers().to_vec()];
            rows.extend(t.rows().iter().map(|r| r.iter().map(CellValue::render).collect()));
            Ok(rows)
        }
        Value::Array(rows) => rows
            .iter()
            .map(|row| match row {
                Value::Array(cells) => Ok(cells
                    .iter()
                    .map(|c| match c {
                        Value::String(s) => s.clone(),
                        Value::Null => String::new(),
                        other => other.to_string(),
                    })
                    .collect()),
                _ => Err("table rows must be arrays".to_string()),
            })
            .collect(),
        _ => Err("table must be a markdown string or an array of rows".into()),
    }
}

fn livesum_record(line_no: usize, line: &str) -> Result<ExampleRecord, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let text = value
        .get("text")
        .and_then(Value::as_str)
        .ok_or("missing string field \"text\"")?;
    let mut rows = livesum_rows(value.get("table").ok_or("missing field \"table\"")?)?;
    if rows.len() < 2 {
        return Err("table has no data rows".into());
    }
    let headers = rows.remove(0);
    let id = match value.get("id") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) => format!("livesum-{n}"),
        _ => format!("livesum-{line_no:05}"),
    };
    let gold = row_keyed_table("team", headers, rows)?;
    ExampleRecord::new(id, text.trim(), vec![gold]).map_err(|e| e.to_string())
}

pub fn convert_livesum(source: impl BufRead) -> Result<Converted, ConvertError> {
    let mut out = Converted::default();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(i + 1, livesum_record(i + 1, &line));
    }
    Ok(out)
}
