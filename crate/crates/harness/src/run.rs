//! End-to-end runs: generate (or replay), parse, assign, score, report.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use futures::StreamExt;
use serde::Serialize;
use tabeval_client::{
    build_freeform_prompt, build_guided_prompt, ChatTransport, Exemplar, GenerationConfig, LlmClient, PromptBundle,
    PromptTemplate,
};
use tabeval_core::align::{assign_tables, AssignmentOrder, NormalizationOptions};
use tabeval_core::markdown::{classify_error, parse_all, ErrorClass};
use tabeval_core::metrics::{
    aggregate, score_pair, EvaluationReport, ExampleResult, PairScores, RmseAggregation, ScoringOptions, TableResult,
};
use tabeval_core::model::ExampleRecord;
use tabeval_core::schema::{build_schema, parse_structured_output, SchemaDocument, StructuredFailureKind};

use crate::canonical::to_canonical_json;
use crate::dataset::{ingest, DatasetError};
use crate::transcript::{read_transcript, write_entry, GenerationError, GenerationMode, TranscriptEntry};
use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Unstructured,
    Structured,
    ReplayUnstructured,
    ReplayStructured,
}

impl Mode {
    pub fn generation_mode(self) -> GenerationMode {
        match self {
            Mode::Unstructured | Mode::ReplayUnstructured => GenerationMode::Unstructured,
            Mode::Structured | Mode::ReplayStructured => GenerationMode::Structured,
        }
    }

    pub fn is_replay(self) -> bool {
        matches!(self, Mode::ReplayUnstructured | Mode::ReplayStructured)
    }

    pub fn replay_of(mode: GenerationMode) -> Mode {
        match mode {
            GenerationMode::Unstructured => Mode::ReplayUnstructured,
            GenerationMode::Structured => Mode::ReplayStructured,
        }
    }

    pub fn live(mode: GenerationMode) -> Mode {
        match mode {
            GenerationMode::Unstructured => Mode::Unstructured,
            GenerationMode::Structured => Mode::Structured,
        }
    }
}

/// Everything that changes how outputs are scored.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EvalOptions {
    pub scoring: ScoringOptions,
    pub order: AssignmentOrder,
    pub rmse: RmseAggregation,
}

pub const NORM_FLAGS: [&str; 7] = [
    "no-collapse-ws",
    "no-case-fold",
    "no-thousands",
    "no-null-synonyms",
    "exclude-row-headers",
    "candidate-first",
    "rmse-macro",
];

impl EvalOptions {
    /// Applies comma-separated flags from [`NORM_FLAGS`] to the defaults.
    pub fn from_flags(flags: &str) -> Result<Self, String> {
        let mut o = EvalOptions::default();
        let norm: &mut NormalizationOptions = &mut o.scoring.normalization;
        for flag in flags.split(',').map(str::trim).filter(|f| !f.is_empty()) {
            match flag {
                "no-collapse-ws" => norm.collapse_whitespace = false,
                "no-case-fold" => norm.case_fold = false,
                "no-thousands" => norm.thousands_separators = false,
                "no-null-synonyms" => norm.null_synonyms = false,
                "exclude-row-headers" => o.scoring.exclude_row_headers = true,
                "candidate-first" => o.order = AssignmentOrder::CandidateFirst,
                "rmse-macro" => o.rmse = RmseAggregation::Macro,
                other => {
                    return Err(format!(
                        "unknown norm flag {other:?} (expected one of {})",
                        NORM_FLAGS.join(", ")
                    ))
                }
            }
        }
        Ok(o)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub dataset: PathBuf,
    pub mode: Mode,
    pub generation: GenerationConfig,
    pub eval: EvalOptions,
    pub out_dir: PathBuf,
    /// Input transcript; required by the replay modes.
    pub transcript: Option<PathBuf>,
    /// Dataset-format file whose first record is the one-shot exemplar.
    pub exemplar: Option<PathBuf>,
    /// Prompt template file; the versioned default for the mode otherwise.
    pub template: Option<PathBuf>,
    /// Worker count for generation and scoring.
    pub concurrency: usize,
}

/// Outcome of one example beyond its scores, for errors.json.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExampleDiagnostics {
    pub example_id: String,
    pub error_classes: BTreeMap<ErrorClass, usize>,
    pub structured_failures: BTreeMap<StructuredFailureKind, usize>,
    pub generation_error: Option<GenerationError>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub results: Vec<ExampleResult>,
    pub report: EvaluationReport,
    pub entries: Vec<Option<TranscriptEntry>>,
}

fn missing(record: &ExampleRecord) -> Vec<TableResult> {
    record
        .gold_tables()
        .iter()
        .map(|g| TableResult {
            table_type: g.schema.table_id().to_string(),
            scores: None,
        })
        .collect()
}

fn score_unstructured(record: &ExampleRecord, raw: &str, opts: &EvalOptions, result: &mut ExampleResult) {
    let outcome = parse_all(raw);
    for failure in &outcome.failures {
        *result.error_classes.entry(classify_error(failure)).or_default() += 1;
    }
    let schemas = record.schemas();
    let assignment = assign_tables(&outcome.tables, &schemas, opts.order);
    result.tables = record
        .gold_tables()
        .iter()
        .zip(&assignment.assignments)
        .map(|(gold, a)| TableResult {
            table_type: gold.schema.table_id().to_string(),
            scores: a.map(|c| score_pair(&outcome.tables[c], &gold.table, &gold.schema, &opts.scoring)),
        })
        .collect();
}

fn score_structured(
    record: &ExampleRecord,
    doc: &SchemaDocument,
    raw: &str,
    opts: &EvalOptions,
    result: &mut ExampleResult,
) {
    let outcome = parse_structured_output(raw, doc);
    for failure in &outcome.failures {
        *result.structured_failures.entry(failure.kind).or_default() += 1;
    }
    result.tables = record
        .gold_tables()
        .iter()
        .map(|gold| {
            let id = gold.schema.table_id();
            let scores: Option<PairScores> = outcome
                .table(id)
                .map(|pred| score_pair(pred, &gold.table, &gold.schema, &opts.scoring));
            TableResult {
                table_type: id.to_string(),
                scores,
            }
        })
        .collect();
}

/// Scores one example given its transcript entry. A missing entry or a failed
/// generation counts every gold table as missing.
pub fn score_example(
    record: &ExampleRecord,
    entry: Option<&TranscriptEntry>,
    mode: GenerationMode,
    opts: &EvalOptions,
) -> ExampleResult {
    let mut result = ExampleResult {
        example_id: record.example_id.clone(),
        tables: missing(record),
        ..Default::default()
    };
    let Some(raw) = entry.and_then(|e| e.raw_text.as_deref()) else {
        result.generation_failed = true;
        return result;
    };
    match mode {
        GenerationMode::Unstructured => score_unstructured(record, raw, opts, &mut result),
        GenerationMode::Structured => match build_schema(&record.schemas()) {
            Ok(doc) => score_structured(record, &doc, raw, opts, &mut result),
            Err(e) => {
                tracing::warn!(example_id = %record.example_id, error = %e, "cannot build schema");
                result.generation_failed = true;
            }
        },
    }
    result
}

/// Scores every example on a pool of `workers` threads; results keep dataset order.
pub fn score_all(
    records: &[ExampleRecord],
    entries: &[Option<TranscriptEntry>],
    mode: GenerationMode,
    opts: &EvalOptions,
    workers: usize,
) -> Vec<ExampleResult> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| {
        records
            .par_iter()
            .zip(entries.par_iter())
            .map(|(record, entry)| score_example(record, entry.as_ref(), mode, opts))
            .collect()
    })
}

pub fn evaluate(
    records: &[ExampleRecord],
    entries: Vec<Option<TranscriptEntry>>,
    mode: GenerationMode,
    opts: &EvalOptions,
    workers: usize,
) -> RunOutput {
    let results = score_all(records, &entries, mode, opts, workers);
    let report = aggregate(&results, opts.rmse);
    RunOutput {
        results,
        report,
        entries,
    }
}

/// Transcript entries aligned with `records`. Entries for unknown examples
/// are ignored; examples without an entry get `None`.
pub fn align_entries(
    records: &[ExampleRecord],
    mut by_id: HashMap<String, TranscriptEntry>,
    mode: GenerationMode,
) -> Result<Vec<Option<TranscriptEntry>>, HarnessError> {
    if let Some(e) = by_id.values().find(|e| e.mode != mode) {
        return Err(HarnessError::Usage(format!(
            "transcript entry {:?} was generated in {:?} mode, replay requested {:?}",
            e.example_id, e.mode, mode
        )));
    }
    let out: Vec<Option<TranscriptEntry>> = records.iter().map(|r| by_id.remove(&r.example_id)).collect();
    let absent = out.iter().filter(|e| e.is_none()).count();
    if absent > 0 {
        tracing::warn!(
            absent,
            "examples without a transcript entry are counted as failed generations"
        );
    }
    if !by_id.is_empty() {
        tracing::warn!(extra = by_id.len(), "transcript entries for unknown examples ignored");
    }
    Ok(out)
}

pub struct Prompts {
    pub template: PromptTemplate,
    pub exemplar: Option<Exemplar>,
}

impl Prompts {
    pub fn load(manifest: &RunManifest) -> Result<Self, HarnessError> {
        let mode = manifest.mode.generation_mode();
        let template = match &manifest.template {
            Some(path) => {
                let text =
                    fs::read_to_string(path).map_err(|e| HarnessError::Usage(format!("{}: {e}", path.display())))?;
                PromptTemplate::parse(&text).map_err(|e| HarnessError::Usage(format!("{}: {e}", path.display())))?
            }
            None => match mode {
                GenerationMode::Unstructured => PromptTemplate::freeform_default(),
                GenerationMode::Structured => PromptTemplate::guided_default(),
            },
        };
        let exemplar = match (&manifest.exemplar, mode) {
            (Some(path), _) => {
                let records = ingest(path)?;
                let first = records
                    .first()
                    .ok_or_else(|| HarnessError::Dataset(format!("{}: exemplar file is empty", path.display())))?;
                Some(Exemplar::from_record(first))
            }
            (None, GenerationMode::Unstructured) => return Err(HarnessError::Usage(
                "unstructured generation needs --exemplar (a dataset file whose first record is the one-shot example)"
                    .into(),
            )),
            (None, GenerationMode::Structured) => None,
        };
        Ok(Prompts { template, exemplar })
    }

    fn bundle(&self, record: &ExampleRecord, mode: GenerationMode) -> PromptBundle {
        match mode {
            GenerationMode::Unstructured => build_freeform_prompt(record, self.exemplar.as_ref(), &self.template),
            GenerationMode::Structured => build_guided_prompt(record, &self.template),
        }
    }
}

/// Generates one completion per record with at most `concurrency` requests in
/// flight. Each finished entry is appended to `sink` immediately. An
/// unreachable endpoint aborts the run after flushing what was received.
pub async fn generate_all<T: ChatTransport>(
    client: &LlmClient<T>,
    records: &[ExampleRecord],
    mode: GenerationMode,
    prompts: &Prompts,
    sink: &mut impl Write,
    concurrency: usize,
) -> Result<Vec<Option<TranscriptEntry>>, HarnessError> {
    let jobs = records.iter().enumerate().map(|(i, record)| async move {
        let bundle = prompts.bundle(record, mode);
        let entry = match mode {
            GenerationMode::Unstructured => {
                TranscriptEntry::from_result(&record.example_id, mode, &client.generate(&bundle, None).await)
            }
            GenerationMode::Structured => match build_schema(&record.schemas()) {
                Ok(doc) => {
                    TranscriptEntry::from_result(&record.example_id, mode, &client.generate(&bundle, Some(&doc)).await)
                }
                Err(e) => TranscriptEntry {
                    example_id: record.example_id.clone(),
                    mode,
                    raw_text: None,
                    error: Some(GenerationError {
                        kind: "schema".into(),
                        message: e.to_string(),
                    }),
                    usage: Default::default(),
                    latency_s: 0.0,
                    attempts: 0,
                },
            },
        };
        (i, entry)
    });
    let mut stream = futures::stream::iter(jobs).buffer_unordered(concurrency.max(1));
    let mut entries: Vec<Option<TranscriptEntry>> = vec![None; records.len()];
    while let Some((i, entry)) = stream.next().await {
        let unreachable = entry.error.as_ref().is_some_and(|e| e.kind == "transport");
        write_entry(sink, &entry)
            .and_then(|_| sink.flush())
            .map_err(HarnessError::io("transcript"))?;
        if unreachable {
            let message = entry.error.map(|e| e.message).unwrap_or_default();
            return Err(HarnessError::Endpoint(message));
        }
        entries[i] = Some(entry);
    }
    Ok(entries)
}

fn csv_float(x: f64) -> String {
    format!("{x:.6}")
}

pub fn scores_csv(results: &[ExampleResult]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "example_id",
        "table_type",
        "present",
        "generation_failed",
        "cell_f1",
        "cell_levenshtein",
        "row_f1",
        "table_exact",
        "table_levenshtein",
        "table_rouge_l",
        "rmse",
        "rmse_pairs",
    ])?;
    for r in results {
        for t in &r.tables {
            let mut row = vec![
                r.example_id.clone(),
                t.table_type.clone(),
                u8::from(t.scores.is_some()).to_string(),
                u8::from(r.generation_failed).to_string(),
            ];
            match &t.scores {
                Some(s) => {
                    let rmse = s.rmse.as_ref();
                    row.extend([
                        csv_float(s.cell_f1),
                        csv_float(s.cell_levenshtein),
                        csv_float(s.row_f1),
                        u8::from(s.table_exact).to_string(),
                        csv_float(s.table_levenshtein),
                        csv_float(s.table_rouge_l),
                        rmse.and_then(|r| r.value()).map(csv_float).unwrap_or_default(),
                        rmse.map(|r| r.pairs.to_string()).unwrap_or_default(),
                    ]);
                }
                None => row.extend(std::iter::repeat_n(String::new(), 8)),
            }
            w.write_record(&row)?;
        }
    }
    Ok(String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8"))
}

#[derive(Serialize)]
struct ErrorsFile<'a> {
    error_distribution: &'a BTreeMap<ErrorClass, usize>,
    structured_failures: &'a BTreeMap<StructuredFailureKind, usize>,
    failed_generations: usize,
    examples: Vec<ExampleDiagnostics>,
}

pub fn errors_json(output: &RunOutput) -> serde_json::Result<String> {
    let examples = output
        .results
        .iter()
        .zip(&output.entries)
        .map(|(r, e)| ExampleDiagnostics {
            example_id: r.example_id.clone(),
            error_classes: r.error_classes.clone(),
            structured_failures: r.structured_failures.clone(),
            generation_error: match e {
                Some(e) => e.error.clone(),
                None => Some(GenerationError {
                    kind: "missing_transcript_entry".into(),
                    message: "no transcript entry for this example".into(),
                }),
            },
        })
        .filter(|d| !d.error_classes.is_empty() || !d.structured_failures.is_empty() || d.generation_error.is_some())
        .collect();
    to_canonical_json(&ErrorsFile {
        error_distribution: &output.report.error_distribution,
        structured_failures: &output.report.structured_failures,
        failed_generations: output.report.failed_generations,
        examples,
    })
}

pub const REPORT_FILE: &str = "report.json";
pub const SCORES_FILE: &str = "scores.csv";
pub const ERRORS_FILE: &str = "errors.json";
pub const TRANSCRIPT_FILE: &str = "transcript.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    fs::write(path, contents).map_err(HarnessError::io(&path.display().to_string()))
}

/// Writes report, scores, errors and the dataset-ordered transcript.
pub fn write_outputs(manifest: &RunManifest, output: &RunOutput) -> Result<(), HarnessError> {
    let dir = &manifest.out_dir;
    write_file(
        &dir.join(REPORT_FILE),
        &to_canonical_json(&output.report).expect("report serializes"),
    )?;
    write_file(
        &dir.join(SCORES_FILE),
        &scores_csv(&output.results).map_err(|e| HarnessError::Usage(e.to_string()))?,
    )?;
    write_file(&dir.join(ERRORS_FILE), &errors_json(output).expect("errors serialize"))?;
    write_file(
        &dir.join(MANIFEST_FILE),
        &to_canonical_json(manifest).expect("manifest serializes"),
    )?;
    let path = dir.join(TRANSCRIPT_FILE);
    let mut w = BufWriter::new(File::create(&path).map_err(HarnessError::io(&path.display().to_string()))?);
    for entry in output.entries.iter().flatten() {
        write_entry(&mut w, entry).map_err(HarnessError::io("transcript"))?;
    }
    w.flush().map_err(HarnessError::io("transcript"))
}

fn prepare_out_dir(manifest: &RunManifest) -> Result<(), HarnessError> {
    fs::create_dir_all(&manifest.out_dir).map_err(HarnessError::io(&manifest.out_dir.display().to_string()))
}

fn load_records(manifest: &RunManifest) -> Result<Vec<ExampleRecord>, HarnessError> {
    Ok(ingest(&manifest.dataset)?)
}

/// Replays a transcript; never touches the network.
pub fn replay(manifest: &RunManifest) -> Result<RunOutput, HarnessError> {
    let mode = manifest.mode.generation_mode();
    let path = manifest
        .transcript
        .as_ref()
        .ok_or_else(|| HarnessError::Usage("replay needs --transcript".into()))?;
    let records = load_records(manifest)?;
    let file = File::open(path).map_err(|e| HarnessError::Dataset(format!("{}: {e}", path.display())))?;
    let by_id =
        read_transcript(BufReader::new(file)).map_err(|e| HarnessError::Dataset(format!("{}: {e}", path.display())))?;
    let entries = align_entries(&records, by_id, mode)?;
    let output = evaluate(&records, entries, mode, &manifest.eval, manifest.concurrency);
    prepare_out_dir(manifest)?;
    write_outputs(manifest, &output)?;
    Ok(output)
}

/// Live run against `client`. The transcript is streamed to the output
/// directory as completions arrive and rewritten in dataset order at the end.
pub async fn run_with_client<T: ChatTransport>(
    manifest: &RunManifest,
    client: &LlmClient<T>,
) -> Result<RunOutput, HarnessError> {
    let mode = manifest.mode.generation_mode();
    let records = load_records(manifest)?;
    let prompts = Prompts::load(manifest)?;
    prepare_out_dir(manifest)?;
    let path = manifest.out_dir.join(TRANSCRIPT_FILE);
    let mut sink = BufWriter::new(File::create(&path).map_err(HarnessError::io(&path.display().to_string()))?);
    let entries = generate_all(client, &records, mode, &prompts, &mut sink, manifest.concurrency).await?;
    drop(sink);
    let output = evaluate(&records, entries, mode, &manifest.eval, manifest.concurrency);
    write_outputs(manifest, &output)?;
    Ok(output)
}

/// Runs `manifest` end to end, over HTTP for the live modes.
pub fn execute(manifest: &RunManifest) -> Result<RunOutput, HarnessError> {
    if manifest.mode.is_replay() {
        return replay(manifest);
    }
    let client = LlmClient::from_config(manifest.generation.clone()).map_err(|e| HarnessError::Usage(e.to_string()))?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(HarnessError::io("runtime"))?;
    runtime.block_on(run_with_client(manifest, &client))
}

impl From<DatasetError> for HarnessError {
    fn from(e: DatasetError) -> Self {
        HarnessError::Dataset(e.to_string())
    }
}
