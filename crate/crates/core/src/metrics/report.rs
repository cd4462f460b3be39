use std::collections::BTreeMap;

use serde::{Deserialize, Serialize, Serializer};

use super::{PairScores, RmseStats};
use crate::markdown::ErrorClass;
use crate::schema::StructuredFailureKind;

/// How per-table RMSE values are combined across a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RmseAggregation {
    /// Pool squared errors over all pairs, then take the root.
    #[default]
    Micro,
    /// Mean of per-table RMSE values.
    Macro,
}

/// One expected gold table of one example. `scores` is `None` when no
/// prediction was assigned to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableResult {
    pub table_type: String,
    pub scores: Option<PairScores>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExampleResult {
    pub example_id: String,
    pub tables: Vec<TableResult>,
    pub error_classes: BTreeMap<ErrorClass, usize>,
    pub structured_failures: BTreeMap<StructuredFailureKind, usize>,
    /// The model call itself failed; every gold table counts as missing.
    pub generation_failed: bool,
}

/// Metric means over the pairs whose prediction was present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricMeans {
    pub pairs: usize,
    pub cell_f1: f64,
    pub cell_levenshtein: f64,
    pub row_f1: f64,
    pub table_exact: f64,
    pub table_levenshtein: f64,
    pub table_rouge_l: f64,
    /// Absent for text layouts or when no numeric pair was comparable.
    pub rmse: Option<f64>,
    pub rmse_pairs: usize,
    pub rmse_excluded: usize,
}

fn empty_when_none<S: Serializer>(m: &Option<MetricMeans>, s: S) -> Result<S::Ok, S::Error> {
    match m {
        Some(m) => m.serialize(s),
        None => BTreeMap::<String, f64>::new().serialize(s),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableTypeReport {
    pub gold_total: usize,
    pub present: usize,
    pub missing: usize,
    pub presence_rate: f64,
    #[serde(serialize_with = "empty_when_none")]
    pub metrics: Option<MetricMeans>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub examples_total: usize,
    pub examples_with_missing_tables: usize,
    pub failed_generations: usize,
    pub error_distribution: BTreeMap<ErrorClass, usize>,
    pub structured_failures: BTreeMap<StructuredFailureKind, usize>,
    pub tables: BTreeMap<String, TableTypeReport>,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    sum / n as f64
}

fn means(scores: &[&PairScores], rmse_mode: RmseAggregation) -> MetricMeans {
    let rmse_stats: Vec<&RmseStats> = scores.iter().filter_map(|s| s.rmse.as_ref()).collect();
    let rmse_pairs = rmse_stats.iter().map(|r| r.pairs).sum();
    let rmse = match rmse_mode {
        RmseAggregation::Micro => RmseStats {
            sum_squared_error: rmse_stats.iter().map(|r| r.sum_squared_error).sum(),
            pairs: rmse_pairs,
            excluded: 0,
        }
        .value(),
        RmseAggregation::Macro => {
            let values: Vec<f64> = rmse_stats.iter().filter_map(|r| r.value()).collect();
            (!values.is_empty()).then(|| mean(values.into_iter()))
        }
    };
    MetricMeans {
        pairs: scores.len(),
        cell_f1: mean(scores.iter().map(|s| s.cell_f1)),
        cell_levenshtein: mean(scores.iter().map(|s| s.cell_levenshtein)),
        row_f1: mean(scores.iter().map(|s| s.row_f1)),
        table_exact: mean(scores.iter().map(|s| if s.table_exact { 1.0 } else { 0.0 })),
        table_levenshtein: mean(scores.iter().map(|s| s.table_levenshtein)),
        table_rouge_l: mean(scores.iter().map(|s| s.table_rouge_l)),
        rmse,
        rmse_pairs,
        rmse_excluded: rmse_stats.iter().map(|r| r.excluded).sum(),
    }
}

/// Folds per-example results into a run report. Presence counts gold tables;
/// metric means use only present pairs.
pub fn aggregate(results: &[ExampleResult], rmse_mode: RmseAggregation) -> EvaluationReport {
    let mut error_distribution: BTreeMap<ErrorClass, usize> = ErrorClass::ALL.iter().map(|c| (*c, 0)).collect();
    let mut structured_failures = BTreeMap::new();
    let mut by_type: BTreeMap<&str, (usize, Vec<&PairScores>)> = BTreeMap::new();
    let mut examples_with_missing_tables = 0;
    let mut failed_generations = 0;

    for example in results {
        for (class, n) in &example.error_classes {
            *error_distribution.entry(*class).or_default() += n;
        }
        for (kind, n) in &example.structured_failures {
            *structured_failures.entry(*kind).or_default() += n;
        }
        if example.generation_failed {
            failed_generations += 1;
        }
        if example.tables.iter().any(|t| t.scores.is_none()) {
            examples_with_missing_tables += 1;
        }
        for table in &example.tables {
            let entry = by_type.entry(&table.table_type).or_default();
            entry.0 += 1;
            if let Some(scores) = &table.scores {
                entry.1.push(scores);
            }
        }
    }

    let tables = by_type
        .into_iter()
        .map(|(table_type, (gold_total, scores))| {
            let present = scores.len();
            let report = TableTypeReport {
                gold_total,
                present,
                missing: gold_total - present,
                presence_rate: present as f64 / gold_total as f64,
                metrics: (present > 0).then(|| means(&scores, rmse_mode)),
            };
            (table_type.to_string(), report)
        })
        .collect();

    EvaluationReport {
        examples_total: results.len(),
        examples_with_missing_tables,
        failed_generations,
        error_distribution,
        structured_failures,
        tables,
    }
}
