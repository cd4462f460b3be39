//! Core evaluation machinery for text-to-table generation.
//!
//! The pipeline is: raw model output → [`markdown::parse_all`] (free-form mode)
//! or [`schema::parse_structured_output`] (guided mode) → [`align::assign_tables`]
//! → [`metrics::score_pair`] → [`metrics::aggregate`].

pub mod align;
pub mod markdown;
pub mod metrics;
pub mod model;
pub mod schema;

pub use model::{CellKind, CellValue, ExampleRecord, GoldTable, ModelError, Origin, Table, TableSchema};
