//! Evaluation and timing reports.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Duration;

use patchvpr_core::{auc, is_correct, pr_curve, MatchResult, PrPoint, PrRecord};
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryRecord {
    pub index: usize,
    pub prediction: usize,
    pub truth: usize,
    pub confidence: f64,
    pub correct: bool,
    pub micros: f64,
}

/// Summary of per-query wall times, in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimingStats {
    pub count: usize,
    pub mean_us: f64,
    pub median_us: f64,
    pub min_us: f64,
    pub max_us: f64,
}

impl TimingStats {
    pub fn from_durations(durations: &[Duration]) -> Self {
        let mut us: Vec<f64> = durations.iter().map(|d| d.as_secs_f64() * 1e6).collect();
        us.sort_by(f64::total_cmp);
        let count = us.len();
        if count == 0 {
            return Self { count, mean_us: 0.0, median_us: 0.0, min_us: 0.0, max_us: 0.0 };
        }
        let median_us =
            if count % 2 == 1 { us[count / 2] } else { (us[count / 2 - 1] + us[count / 2]) / 2.0 };
        Self {
            count,
            mean_us: us.iter().sum::<f64>() / count as f64,
            median_us,
            min_us: us[0],
            max_us: us[count - 1],
        }
    }
}

/// Configuration echo stored alongside results.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunInfo {
    pub grid: String,
    pub units_per_patch: usize,
    pub total_units: usize,
    pub calls_per_query: usize,
    pub voting: String,
    pub tolerance: usize,
    pub n_places: usize,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub info: RunInfo,
    pub records: Vec<QueryRecord>,
    pub pr_points: Vec<PrPoint>,
    pub auc: f64,
    pub accuracy: f64,
    pub timing: TimingStats,
}

#[derive(Serialize)]
struct Summary<'a> {
    #[serde(flatten)]
    info: &'a RunInfo,
    queries: usize,
    accuracy: f64,
    auc: f64,
    /// `[recall, precision]` pairs.
    pr_points: Vec<[f64; 2]>,
    timing: &'a TimingStats,
}

impl EvalReport {
    pub fn build(
        info: RunInfo,
        results: &[MatchResult],
        durations: &[Duration],
        truth: &[usize],
    ) -> Result<Self> {
        if results.is_empty() {
            return Err(Error::Usage("no queries to evaluate".into()));
        }
        let tolerance = info.tolerance;
        let records: Vec<QueryRecord> = results
            .iter()
            .zip(truth)
            .zip(durations)
            .enumerate()
            .map(|(index, ((m, &truth), d))| QueryRecord {
                index,
                prediction: m.predicted_place,
                truth,
                confidence: m.confidence,
                correct: is_correct(m.predicted_place, truth, tolerance),
                micros: d.as_secs_f64() * 1e6,
            })
            .collect();
        let pr: Vec<PrRecord> = records.iter().map(|r| PrRecord::new(r.confidence, r.correct)).collect();
        let pr_points = pr_curve(&pr)?;
        let accuracy = records.iter().filter(|r| r.correct).count() as f64 / records.len() as f64;
        Ok(Self {
            info,
            auc: auc(&pr_points),
            pr_points,
            accuracy,
            timing: TimingStats::from_durations(durations),
            records,
        })
    }

    /// `index,prediction,truth,confidence,correct,micros`, one row per query.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,prediction,truth,confidence,correct,micros\n");
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{:.3}",
                r.index, r.prediction, r.truth, r.confidence, r.correct as u8, r.micros
            );
        }
        s
    }

    /// The timing-free columns of [`Self::to_csv`]; identical across reruns with the same seeds.
    pub fn predictions_csv(&self) -> String {
        let mut s = String::from("index,prediction,truth,confidence,correct\n");
        for r in &self.records {
            let _ =
                writeln!(s, "{},{},{},{},{}", r.index, r.prediction, r.truth, r.confidence, r.correct as u8);
        }
        s
    }

    pub fn summary_json(&self) -> String {
        let summary = Summary {
            info: &self.info,
            queries: self.records.len(),
            accuracy: self.accuracy,
            auc: self.auc,
            pr_points: self.pr_points.iter().map(|p| [p.recall, p.precision]).collect(),
            timing: &self.timing,
        };
        serde_json::to_string_pretty(&summary).expect("summary is serialisable")
    }
}

/// Per-query timing rows for `bench`: `index,prediction,confidence,micros`.
pub fn timing_csv(results: &[MatchResult], durations: &[Duration]) -> String {
    let mut s = String::from("index,prediction,confidence,micros\n");
    for (i, (m, d)) in results.iter().zip(durations).enumerate() {
        let _ = writeln!(s, "{i},{},{},{:.3}", m.predicted_place, m.confidence, d.as_secs_f64() * 1e6);
    }
    s
}

#[derive(Serialize)]
struct BenchSummary<'a> {
    #[serde(flatten)]
    info: &'a RunInfo,
    #[serde(flatten)]
    timing: &'a TimingStats,
}

pub fn bench_summary_json(info: &RunInfo, timing: &TimingStats) -> String {
    serde_json::to_string_pretty(&BenchSummary { info, timing }).expect("summary is serialisable")
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
