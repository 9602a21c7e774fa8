//! Batch scoring. Per-utterance rows are
//! `condition,utterance_id,metric_id,raw,normalized`; the summary has one row
//! per condition and metric. Both are sorted by condition, then utterance,
//! then metric in the fixed metric order.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use nele_core::metrics::{align, estoi_score, MetricId, MetricScore};
use nele_core::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::io;

/// Condition name used when no conditions file is given.
pub const DEFAULT_CONDITION: &str = "all";

#[derive(Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    clean: PathBuf,
    /// Processed audio: `<dir>/<condition>/<utterance_id>.wav` with a
    /// conditions file, `<dir>/<utterance_id>.wav` without.
    #[arg(long)]
    processed: PathBuf,
    /// CSV with columns `utterance_id,condition`.
    #[arg(long)]
    conditions: Option<PathBuf>,
    /// External scores in the per-utterance CSV shape; `condition` and
    /// `normalized` columns are optional.
    #[arg(long)]
    import: Vec<PathBuf>,
    /// Time-align each processed file to its reference before scoring.
    #[arg(long)]
    align: bool,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
struct ConditionRow {
    utterance_id: String,
    condition: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    #[serde(default)]
    pub condition: Option<String>,
    pub utterance_id: String,
    pub metric_id: String,
    pub raw: f64,
    #[serde(default)]
    pub normalized: Option<f64>,
}

#[derive(Debug, Serialize)]
struct SummaryRow<'a> {
    condition: &'a str,
    metric_id: &'a str,
    n: usize,
    mean_raw: f64,
    mean_normalized: f64,
}

struct Pair {
    condition: String,
    utterance_id: String,
    clean: PathBuf,
    processed: PathBuf,
}

fn pairs(a: &EvaluateArgs) -> Result<Vec<Pair>> {
    let listed: Vec<(String, String)> = match &a.conditions {
        Some(path) => {
            let mut rdr = csv::Reader::from_path(path).map_err(|e| io::csv_err(path, e))?;
            rdr.deserialize::<ConditionRow>()
                .map(|r| r.map(|r| (r.utterance_id, r.condition)).map_err(|e| io::csv_err(path, e)))
                .collect::<Result<_>>()?
        }
        None => io::wav_files(&a.processed)?
            .into_iter()
            .map(|(stem, _)| (stem, DEFAULT_CONDITION.to_string()))
            .collect(),
    };
    if listed.is_empty() {
        return Err(Error::MissingPair(format!("no utterances under {}", a.processed.display())));
    }
    listed
        .into_iter()
        .map(|(id, condition)| {
            let processed = if a.conditions.is_some() {
                a.processed.join(&condition).join(format!("{id}.wav"))
            } else {
                a.processed.join(format!("{id}.wav"))
            };
            let clean = a.clean.join(format!("{id}.wav"));
            for p in [&clean, &processed] {
                if !p.is_file() {
                    return Err(Error::MissingPair(p.display().to_string()));
                }
            }
            Ok(Pair {
                condition,
                utterance_id: id,
                clean,
                processed,
            })
        })
        .collect()
}

fn score(p: &Pair, do_align: bool) -> Result<ScoreRow> {
    let clean = io::read(&p.clean)?;
    let processed = io::read(&p.processed)?;
    let s: MetricScore = if do_align {
        let (c, d) = align(&clean, &processed)?;
        estoi_score(&c, &d)?
    } else {
        estoi_score(&clean, &processed)?
    };
    Ok(ScoreRow {
        condition: Some(p.condition.clone()),
        utterance_id: p.utterance_id.clone(),
        metric_id: s.metric.as_str().to_string(),
        raw: s.raw,
        normalized: Some(s.normalized),
    })
}

fn import(path: &Path) -> Result<Vec<ScoreRow>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| io::csv_err(path, e))?;
    rdr.deserialize::<ScoreRow>()
        .map(|r| {
            let mut r = r.map_err(|e| io::csv_err(path, e))?;
            let metric: MetricId = r.metric_id.parse()?;
            r.metric_id = metric.as_str().to_string();
            r.condition.get_or_insert_with(|| DEFAULT_CONDITION.to_string());
            r.normalized = Some(MetricScore::from_raw(metric, r.raw).normalized);
            Ok(r)
        })
        .collect()
}

fn metric_rank(id: &str) -> usize {
    MetricId::ALL.iter().position(|m| m.as_str() == id).unwrap_or(usize::MAX)
}

/// Scores every pair, merges imports, and returns the sorted rows.
pub fn evaluate(a: &EvaluateArgs) -> Result<Vec<ScoreRow>> {
    let pairs = pairs(a)?;
    let mut rows = pairs.par_iter().map(|p| score(p, a.align)).collect::<Result<Vec<_>>>()?;
    for path in &a.import {
        rows.extend(import(path)?);
    }
    rows.sort_by(|x, y| {
        (&x.condition, &x.utterance_id, metric_rank(&x.metric_id))
            .cmp(&(&y.condition, &y.utterance_id, metric_rank(&y.metric_id)))
    });
    Ok(rows)
}

pub fn run(a: EvaluateArgs) -> Result<()> {
    let rows = evaluate(&a)?;
    let mut w = csv::Writer::from_path(&a.out).map_err(|e| io::csv_err(&a.out, e))?;
    for r in &rows {
        w.serialize(r).map_err(|e| io::csv_err(&a.out, e))?;
    }
    w.flush().map_err(|e| io::csv_err(&a.out, e.into()))?;

    let mut groups: BTreeMap<(String, usize, String), (usize, f64, f64)> = BTreeMap::new();
    for r in &rows {
        let key = (
            r.condition.clone().unwrap_or_default(),
            metric_rank(&r.metric_id),
            r.metric_id.clone(),
        );
        let g = groups.entry(key).or_default();
        g.0 += 1;
        g.1 += r.raw;
        g.2 += r.normalized.unwrap_or(f64::NAN);
    }
    let summary: Vec<SummaryRow> = groups
        .iter()
        .map(|((c, _, m), (n, raw, norm))| SummaryRow {
            condition: c,
            metric_id: m,
            n: *n,
            mean_raw: raw / *n as f64,
            mean_normalized: norm / *n as f64,
        })
        .collect();
    match &a.summary {
        Some(path) => {
            let mut w = csv::Writer::from_path(path).map_err(|e| io::csv_err(path, e))?;
            for s in &summary {
                w.serialize(s).map_err(|e| io::csv_err(path, e))?;
            }
            w.flush().map_err(|e| io::csv_err(path, e.into()))?;
        }
        None => {
            for s in &summary {
                println!(
                    "{} {} n={} mean_raw={:.6} mean_normalized={:.6}",
                    s.condition, s.metric_id, s.n, s.mean_raw, s.mean_normalized
                );
            }
        }
    }
    Ok(())
}
