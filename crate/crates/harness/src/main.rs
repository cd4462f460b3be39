use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use tabeval::convert::{convert_e2e, convert_livesum, convert_rotowire, Converted, SourceFormat};
use tabeval::dataset::{ingest, write_records};
use tabeval::describe::{describe, render_text};
use tabeval::run::{execute, EvalOptions, Mode, RunManifest, RunOutput};
use tabeval::transcript::GenerationMode;
use tabeval::HarnessError;
use tabeval_client::GenerationConfig;

#[derive(Parser)]
#[command(
    name = "tabeval",
    version,
    about = "Evaluate text-to-table generation from language models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Descriptive statistics of gold tables and input texts.
    Describe {
        /// Dataset file (repeatable); named after the file stem.
        #[arg(long, required = true)]
        dataset: Vec<PathBuf>,
        /// Emit JSON instead of a text table.
        #[arg(long)]
        json: bool,
    },
    /// Generate against a live endpoint, then score.
    Run(RunArgs),
    /// Score a previously recorded transcript without network access.
    Replay {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        transcript: PathBuf,
    },
    /// Convert a public benchmark release into the dataset format.
    Convert {
        #[arg(long, value_enum)]
        format: SourceFormat,
        /// E2E CSV, Rotowire `.data` file or LiveSum JSON lines.
        #[arg(long)]
        input: PathBuf,
        /// Rotowire `.text` file with one summary per line.
        #[arg(long)]
        text: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum)]
    mode: GenerationMode,
    #[arg(long)]
    out_dir: PathBuf,
    /// Comma-separated: no-collapse-ws, no-case-fold, no-thousands,
    /// no-null-synonyms, exclude-row-headers, candidate-first, rmse-macro.
    #[arg(long, default_value = "")]
    norm_flags: String,
    #[arg(long, default_value_t = 8)]
    concurrency: usize,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value = "http://localhost:8000/v1")]
    endpoint: String,
    #[arg(long)]
    model: String,
    #[arg(long, default_value_t = 0.0)]
    temperature: f64,
    #[arg(long, default_value_t = 4096)]
    max_new_tokens: u32,
    #[arg(long, default_value_t = 6144)]
    max_context_tokens: u32,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 600)]
    timeout: u64,
    #[arg(long, default_value_t = 3)]
    retry_limit: u32,
    /// Request-body field carrying the guided-decoding schema.
    #[arg(long, default_value = "guided_json")]
    guided_field: String,
    /// Dataset file whose first record is the one-shot exemplar.
    #[arg(long)]
    exemplar: Option<PathBuf>,
    /// Prompt template file.
    #[arg(long)]
    template: Option<PathBuf>,
}

fn manifest(common: CommonArgs, mode: Mode, generation: GenerationConfig) -> Result<RunManifest, HarnessError> {
    if common.concurrency == 0 {
        return Err(HarnessError::Usage("--concurrency must be positive".into()));
    }
    Ok(RunManifest {
        dataset: common.dataset,
        mode,
        generation,
        eval: EvalOptions::from_flags(&common.norm_flags).map_err(HarnessError::Usage)?,
        out_dir: common.out_dir,
        transcript: None,
        exemplar: None,
        template: None,
        concurrency: common.concurrency,
    })
}

fn print_summary(out: &RunOutput, out_dir: &Path) {
    let r = &out.report;
    println!(
        "examples {}  failed generations {}  with missing tables {}",
        r.examples_total, r.failed_generations, r.examples_with_missing_tables
    );
    for (table, t) in &r.tables {
        let metrics = t
            .metrics
            .as_ref()
            .map(|m| {
                let rmse = m.rmse.map(|x| format!("  rmse {x:.3}")).unwrap_or_default();
                format!(
                    "  cell_f1 {:.3}  row_f1 {:.3}  exact {:.3}  rouge_l {:.3}{rmse}",
                    m.cell_f1, m.row_f1, m.table_exact, m.table_rouge_l
                )
            })
            .unwrap_or_default();
        println!("{table}: presence {}/{}{metrics}", t.present, t.gold_total);
    }
    println!("outputs written to {}", out_dir.display());
}

fn open(path: &Path) -> Result<BufReader<File>, HarnessError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| HarnessError::Dataset(format!("{}: {e}", path.display())))
}

fn convert(format: SourceFormat, input: &Path, text: Option<&Path>, output: &Path) -> Result<(), HarnessError> {
    let dataset_err = |e: tabeval::convert::ConvertError| HarnessError::Dataset(format!("{}: {e}", input.display()));
    let converted: Converted = match format {
        SourceFormat::E2e => convert_e2e(open(input)?).map_err(dataset_err)?,
        SourceFormat::Livesum => convert_livesum(open(input)?).map_err(dataset_err)?,
        SourceFormat::Rotowire => {
            let text = text.ok_or_else(|| HarnessError::Usage("rotowire conversion needs --text".into()))?;
            convert_rotowire(open(input)?, open(text)?).map_err(dataset_err)?
        }
    };
    for s in &converted.skipped {
        eprintln!("warning: {}:{}: skipped: {}", input.display(), s.line, s.reason);
    }
    let file = File::create(output).map_err(HarnessError::io(&output.display().to_string()))?;
    let mut w = BufWriter::new(file);
    write_records(&converted.records, &mut w)
        .and_then(|_| w.flush())
        .map_err(HarnessError::io(&output.display().to_string()))?;
    println!(
        "converted {} records, skipped {}",
        converted.records.len(),
        converted.skipped.len()
    );
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Describe { dataset, json } => {
            let mut named = Vec::new();
            for path in &dataset {
                let name = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                named.push((name, describe(&ingest(path)?)));
            }
            if json {
                let map: std::collections::BTreeMap<_, _> = named.into_iter().collect();
                print!("{}", tabeval::canonical::to_canonical_json(&map).expect("serializable"));
            } else {
                print!("{}", render_text(&named));
            }
            Ok(())
        }
        Command::Run(args) => {
            let generation = GenerationConfig {
                endpoint_url: args.endpoint,
                model_name: args.model,
                temperature: args.temperature,
                max_new_tokens: args.max_new_tokens,
                max_context_tokens: args.max_context_tokens,
                request_timeout: Duration::from_secs(args.timeout),
                max_concurrent_requests: args.common.concurrency.max(1),
                retry_limit: args.retry_limit,
                guided_field: args.guided_field,
                ..GenerationConfig::default()
            };
            generation.validate().map_err(|e| HarnessError::Usage(e.to_string()))?;
            let mode = Mode::live(args.common.mode);
            let mut m = manifest(args.common, mode, generation)?;
            m.exemplar = args.exemplar;
            m.template = args.template;
            let out = execute(&m)?;
            print_summary(&out, &m.out_dir);
            Ok(())
        }
        Command::Replay { common, transcript } => {
            let mode = Mode::replay_of(common.mode);
            let mut m = manifest(common, mode, GenerationConfig::default())?;
            m.transcript = Some(transcript);
            let out = execute(&m)?;
            print_summary(&out, &m.out_dir);
            Ok(())
        }
        Command::Convert {
            format,
            input,
            text,
            output,
        } => convert(format, &input, text.as_deref(), &output),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()))
        .with_writer(std::io::stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
