//! Prompt templates and their instantiation for one example.
//!
//! Templates are plain-text files with a `[system]` and a `[user]` section.
//! Lines before the first section starting with `#` are comments. The user
//! section may use `{{schema_hint}}`, `{{exemplar}}` and `{{input_text}}`.

use serde::{Deserialize, Serialize};
use tabeval_core::markdown::serialize_minimal_markdown;
use tabeval_core::model::{table_shape, ExampleRecord, TableSchema};

use crate::ClientError;

const FREEFORM_V1: &str = include_str!("../templates/freeform_v1.txt");
const GUIDED_V1: &str = include_str!("../templates/guided_v1.txt");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub system: String,
    pub user: String,
}

impl PromptTemplate {
    pub fn parse(text: &str) -> Result<Self, ClientError> {
        let system_at = text
            .find("[system]\n")
            .ok_or_else(|| ClientError::Template("missing [system] section".into()))?;
        let user_at = text
            .find("[user]\n")
            .ok_or_else(|| ClientError::Template("missing [user] section".into()))?;
        if user_at < system_at {
            return Err(ClientError::Template("[system] must precede [user]".into()));
        }
        let system = text[system_at + "[system]\n".len()..user_at].trim().to_string();
        let user = text[user_at + "[user]\n".len()..].to_string();
        if !user.contains("{{input_text}}") {
            return Err(ClientError::Template("[user] section never uses {{input_text}}".into()));
        }
        Ok(PromptTemplate { system, user })
    }

    pub fn freeform_default() -> Self {
        Self::parse(FREEFORM_V1).expect("bundled template is valid")
    }

    pub fn guided_default() -> Self {
        Self::parse(GUIDED_V1).expect("bundled template is valid")
    }
}

/// A worked example shown to the model in free-form mode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exemplar {
    pub input_text: String,
    /// The example's gold tables in minimal markdown, separated by blank lines.
    pub tables_markdown: String,
}

impl Exemplar {
    pub fn from_record(record: &ExampleRecord) -> Self {
        Exemplar {
            input_text: record.input_text.clone(),
            tables_markdown: record
                .gold_tables()
                .iter()
                .map(|g| serialize_minimal_markdown(&g.table))
                .collect::<Vec<_>>()
                .join("\n\n"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_text: String,
    pub user_text: String,
    pub one_shot_example: Option<Exemplar>,
    pub schema_hint: String,
}

fn table_hint(index: usize, schema: &TableSchema, data_rows: usize) -> String {
    let headers = schema.column_headers();
    let mut hint = format!(
        "Table {} \"{}\": {} columns, {} rows (1 header row and {} data row{}).\nHeader cells: | {} |",
        index + 1,
        schema.table_id(),
        headers.len(),
        data_rows + 1,
        data_rows,
        if data_rows == 1 { "" } else { "s" },
        headers.join(" | "),
    );
    if let Some(values) = schema.row_header_values() {
        hint.push_str(&format!("\nFirst-column values, in order: {}", values.join(", ")));
    }
    hint
}

/// Describes every expected table: header cells plus row and column counts.
pub fn schema_hint(record: &ExampleRecord) -> String {
    record
        .gold_tables()
        .iter()
        .enumerate()
        .map(|(i, gold)| table_hint(i, &gold.schema, table_shape(&gold.table).0))
        .collect::<Vec<_>>()
        .join("\n\n")
}

fn render_exemplar(exemplar: Option<&Exemplar>) -> String {
    match exemplar {
        None => String::new(),
        Some(ex) => format!(
            "\nExample text:\n{}\n\nExample tables:\n{}\n",
            ex.input_text, ex.tables_markdown
        ),
    }
}

fn instantiate(template: &PromptTemplate, hint: &str, exemplar: &str, input: &str) -> String {
    // input_text last so a passage containing a placeholder is left alone.
    template
        .user
        .replace("{{schema_hint}}", hint)
        .replace("{{exemplar}}", exemplar)
        .replace("{{input_text}}", input)
}

pub fn build_freeform_prompt(
    record: &ExampleRecord,
    exemplar: Option<&Exemplar>,
    template: &PromptTemplate,
) -> PromptBundle {
    let hint = schema_hint(record);
    PromptBundle {
        system_text: template.system.clone(),
        user_text: instantiate(template, &hint, &render_exemplar(exemplar), &record.input_text),
        one_shot_example: exemplar.cloned(),
        schema_hint: hint,
    }
}

/// Prompt for guided mode; the JSON schema itself travels in the request.
pub fn build_guided_prompt(record: &ExampleRecord, template: &PromptTemplate) -> PromptBundle {
    let hint = schema_hint(record);
    PromptBundle {
        system_text: template.system.clone(),
        user_text: instantiate(template, &hint, "", &record.input_text),
        one_shot_example: None,
        schema_hint: hint,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tabeval_core::model::{CellKind, CellValue, GoldTable, Origin, Table};

    fn e2e_record(input: &str) -> ExampleRecord {
        let headers: Vec<String> = [
            "name",
            "eatType",
            "food",
            "priceRange",
            "area",
            "familyFriendly",
            "near",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let row: Vec<CellValue> = [
            "The Vaults",
            "pub",
            "Italian",
            "high",
            "riverside",
            "no",
            "Café Adriatic",
        ]
        .iter()
        .map(CellValue::text)
        .collect();
        let schema = TableSchema::new("restaurant", headers.clone(), None, CellKind::Text).unwrap();
        let table = Table::new(headers, vec![row], Origin::Gold).unwrap();
        ExampleRecord::new("e2e-1", input, vec![GoldTable { schema, table }]).unwrap()
    }

    fn rotowire_record() -> ExampleRecord {
        let team_headers = vec!["Team".to_string(), "Points".to_string()];
        let team = GoldTable {
            schema: TableSchema::new(
                "team",
                team_headers.clone(),
                Some(vec!["Heat".into(), "Hawks".into()]),
                CellKind::NullableInteger,
            )
            .unwrap(),
            table: Table::new(
                team_headers,
                vec![
                    vec![CellValue::text("Heat"), CellValue::Integer(103)],
                    vec![CellValue::text("Hawks"), CellValue::Integer(95)],
                ],
                Origin::Gold,
            )
            .unwrap(),
        };
        let player_headers = vec!["Player".to_string(), "Assists".to_string()];
        let player = GoldTable {
            schema: TableSchema::new(
                "player",
                player_headers.clone(),
                Some(vec!["Dwyane Wade".into()]),
                CellKind::NullableInteger,
            )
            .unwrap(),
            table: Table::new(
                player_headers,
                vec![vec![CellValue::text("Dwyane Wade"), CellValue::Integer(4)]],
                Origin::Gold,
            )
            .unwrap(),
        };
        ExampleRecord::new("rw-1", "The Heat beat the Hawks.", vec![team, player]).unwrap()
    }

    #[test]
    fn freeform_prompt_lists_headers_and_row_count() {
        let record = e2e_record("The Vaults is a pub.");
        let bundle = build_freeform_prompt(&record, None, &PromptTemplate::freeform_default());
        for header in [
            "name",
            "eatType",
            "food",
            "priceRange",
            "area",
            "familyFriendly",
            "near",
        ] {
            assert!(bundle.user_text.contains(header), "missing {header}");
        }
        assert!(bundle.user_text.contains("7 columns, 2 rows"));
        assert!(bundle.user_text.contains(&bundle.schema_hint));
        assert!(bundle.user_text.ends_with("The Vaults is a pub.\n\nTables:\n"));
        assert!(bundle.system_text.contains("markdown tables only"));
    }

    #[test]
    fn multi_table_prompt() {
        let bundle = build_freeform_prompt(&rotowire_record(), None, &PromptTemplate::freeform_default());
        assert!(bundle.user_text.contains("Table 1 \"team\": 2 columns, 3 rows"));
        assert!(bundle.user_text.contains("Table 2 \"player\": 2 columns, 2 rows"));
        assert!(bundle.user_text.contains("First-column values, in order: Heat, Hawks"));
    }

    #[test]
    fn exemplar_is_included() {
        let exemplar = Exemplar::from_record(&rotowire_record());
        let bundle = build_freeform_prompt(&e2e_record("x"), Some(&exemplar), &PromptTemplate::freeform_default());
        assert!(bundle
            .user_text
            .contains("|Team|Points|\n|---|---|\n|Heat|103|\n|Hawks|95|\n\n|Player|Assists|"));
        assert_eq!(bundle.one_shot_example, Some(exemplar));
    }

    #[test]
    fn empty_input_still_renders() {
        let bundle = build_freeform_prompt(&e2e_record(""), None, &PromptTemplate::freeform_default());
        assert!(bundle.user_text.contains("Text:\n\n\nTables:"));
        assert!(!bundle.user_text.contains("{{"));
    }

    #[test]
    fn guided_prompt_has_no_exemplar() {
        let bundle = build_guided_prompt(&rotowire_record(), &PromptTemplate::guided_default());
        assert!(bundle.one_shot_example.is_none());
        assert!(bundle.user_text.contains("The Heat beat the Hawks."));
        assert!(!bundle.user_text.contains("{{"));
    }

    #[test]
    fn template_parsing_errors() {
        assert!(PromptTemplate::parse("[user]\n{{input_text}}").is_err());
        assert!(PromptTemplate::parse("[system]\nx\n[user]\nno placeholder").is_err());
        let t = PromptTemplate::parse("# v9\n[system]\nsys\n[user]\n{{input_text}}!").unwrap();
        assert_eq!((t.system.as_str(), t.user.as_str()), ("sys", "{{input_text}}!"));
    }
}
