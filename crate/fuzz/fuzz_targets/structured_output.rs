#![no_main]

use std::sync::OnceLock;

use libfuzzer_sys::fuzz_target;
use tabeval_core::model::{CellKind, TableSchema};
use tabeval_core::schema::{build_schema, parse_structured_output, SchemaDocument};

fn doc() -> &'static SchemaDocument {
    static DOC: OnceLock<SchemaDocument> = OnceLock::new();
    DOC.get_or_init(|| {
        let team = TableSchema::new(
            "team",
            vec!["Team".into(), "Points".into(), "Wins".into()],
            Some(vec!["Hawks".into(), "Celtics".into()]),
            CellKind::NullableInteger,
        )
        .unwrap();
        let restaurant = TableSchema::new(
            "restaurant",
            vec!["name".into(), "eatType".into()],
            None,
            CellKind::Text,
        )
        .unwrap();
        build_schema(&[team, restaurant]).unwrap()
    })
}

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let outcome = parse_structured_output(text, doc());
    assert!(outcome.tables.len() <= doc().tables.len());
});
