//! Raw generation transcripts, one JSON object per line, replayable offline.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use tabeval_client::{ClientError, Generation, Usage};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum GenerationMode {
    Unstructured,
    Structured,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationError {
    /// `context_length`, `http`, `transport`, `invalid_response` or `config`.
    pub kind: String,
    pub message: String,
}

impl From<&ClientError> for GenerationError {
    fn from(e: &ClientError) -> Self {
        let kind = match e {
            ClientError::ContextLengthExceeded(_) => "context_length",
            ClientError::Http { .. } => "http",
            ClientError::Transport { .. } => "transport",
            ClientError::InvalidResponse(_) => "invalid_response",
            ClientError::InvalidConfig(_) | ClientError::Template(_) => "config",
        };
        GenerationError {
            kind: kind.into(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub example_id: String,
    pub mode: GenerationMode,
    /// Completion text exactly as received; absent when generation failed.
    pub raw_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<GenerationError>,
    #[serde(default)]
    pub usage: Usage,
    #[serde(default)]
    pub latency_s: f64,
    #[serde(default)]
    pub attempts: u32,
}

impl TranscriptEntry {
    pub fn from_result(example_id: &str, mode: GenerationMode, result: &Result<Generation, ClientError>) -> Self {
        match result {
            Ok(g) => TranscriptEntry {
                example_id: example_id.into(),
                mode,
                raw_text: Some(g.raw_text.clone()),
                error: None,
                usage: g.usage,
                latency_s: g.latency.as_secs_f64(),
                attempts: g.attempts,
            },
            Err(e) => TranscriptEntry {
                example_id: example_id.into(),
                mode,
                raw_text: None,
                error: Some(e.into()),
                usage: Usage::default(),
                latency_s: 0.0,
                attempts: match e {
                    ClientError::Transport { attempts, .. } | ClientError::Http { attempts, .. } => *attempts,
                    _ => 1,
                },
            },
        }
    }

    /// A successful entry with the given text and no timing information.
    pub fn replayed(example_id: &str, mode: GenerationMode, raw_text: impl Into<String>) -> Self {
        TranscriptEntry {
            example_id: example_id.into(),
            mode,
            raw_text: Some(raw_text.into()),
            error: None,
            usage: Usage::default(),
            latency_s: 0.0,
            attempts: 1,
        }
    }
}

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("transcript read error: {0}")]
    Io(#[from] std::io::Error),
    #[error("transcript line {line}: {message}")]
    InvalidLine { line: usize, message: String },
    #[error("transcript line {line}: duplicate entry for example {example_id:?}")]
    Duplicate { line: usize, example_id: String },
}

pub fn parse_entry(text: &str, line: usize) -> Result<TranscriptEntry, TranscriptError> {
    let entry: TranscriptEntry = serde_json::from_str(text).map_err(|e| TranscriptError::InvalidLine {
        line,
        message: e.to_string(),
    })?;
    if entry.raw_text.is_none() && entry.error.is_none() {
        return Err(TranscriptError::InvalidLine {
            line,
            message: "entry has neither raw_text nor error".into(),
        });
    }
    Ok(entry)
}

/// Reads a transcript keyed by example id.
pub fn read_transcript(reader: impl BufRead) -> Result<HashMap<String, TranscriptEntry>, TranscriptError> {
    let mut out = HashMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let text = line?;
        if text.trim().is_empty() {
            continue;
        }
        let entry = parse_entry(&text, idx + 1)?;
        let id = entry.example_id.clone();
        if out.insert(id.clone(), entry).is_some() {
            return Err(TranscriptError::Duplicate {
                line: idx + 1,
                example_id: id,
            });
        }
    }
    Ok(out)
}

pub fn write_entry(out: &mut impl Write, entry: &TranscriptEntry) -> std::io::Result<()> {
    serde_json::to_writer(&mut *out, entry)?;
    out.write_all(b"\n")
}
