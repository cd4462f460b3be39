#![allow(dead_code)]

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use tabeval::dataset::ingest;
use tabeval::run::{EvalOptions, Mode, RunManifest};
use tabeval::transcript::{write_entry, GenerationMode, TranscriptEntry};
use tabeval_client::GenerationConfig;
use tabeval_core::markdown::serialize_minimal_markdown;
use tabeval_core::model::ExampleRecord;
use tabeval_core::schema::{build_schema, gold_document_instance};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn records(name: &str) -> Vec<ExampleRecord> {
    ingest(&fixture(name)).unwrap()
}

/// What a perfect free-form model would answer.
pub fn oracle_markdown(record: &ExampleRecord) -> String {
    record
        .gold_tables()
        .iter()
        .map(|g| serialize_minimal_markdown(&g.table))
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// What a perfect guided model would answer.
pub fn oracle_json(record: &ExampleRecord) -> String {
    let doc = build_schema(&record.schemas()).unwrap();
    gold_document_instance(&doc, record.gold_tables()).to_string()
}

pub fn write_transcript(path: &Path, entries: &[TranscriptEntry]) {
    let mut w = BufWriter::new(File::create(path).unwrap());
    for e in entries {
        write_entry(&mut w, e).unwrap();
    }
    w.flush().unwrap();
}

pub fn transcript_of(
    records: &[ExampleRecord],
    mode: GenerationMode,
    answer: impl Fn(usize, &ExampleRecord) -> String,
) -> Vec<TranscriptEntry> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| TranscriptEntry::replayed(&r.example_id, mode, answer(i, r)))
        .collect()
}

pub fn replay_manifest(
    dataset: &Path,
    transcript: &Path,
    mode: GenerationMode,
    out_dir: &Path,
    workers: usize,
) -> RunManifest {
    RunManifest {
        dataset: dataset.to_path_buf(),
        mode: Mode::replay_of(mode),
        generation: GenerationConfig::default(),
        eval: EvalOptions::default(),
        out_dir: out_dir.to_path_buf(),
        transcript: Some(transcript.to_path_buf()),
        exemplar: None,
        template: None,
        concurrency: workers,
    }
}
