//! Frame-tolerance correctness, precision-recall curves and their area.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A prediction counts as correct if it lies within `tolerance` frames of the truth.
pub fn is_correct(predicted: usize, truth: usize, tolerance: usize) -> bool {
    predicted.abs_diff(truth) <= tolerance
}

/// One query outcome for the PR sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrRecord {
    pub confidence: f64,
    pub correct: bool,
}

impl PrRecord {
    pub fn new(confidence: f64, correct: bool) -> Self {
        Self { confidence, correct }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
}

/// Sweeps a threshold over the distinct confidences, highest first. At
/// threshold `t` every record with `confidence >= t` is retrieved; recall is
/// relative to the total number of records, since every query has a true
/// match.
pub fn pr_curve(records: &[PrRecord]) -> Result<Vec<PrPoint>> {
    if records.is_empty() {
        return Err(Error::TooFew { what: "records", min: 1, actual: 0 });
    }
    let mut sorted = records.to_vec();
    sorted.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
    let total = sorted.len() as f64;
    let mut points = Vec::new();
    let (mut retrieved, mut hits) = (0usize, 0usize);
    for (i, r) in sorted.iter().enumerate() {
        retrieved += 1;
        hits += r.correct as usize;
        let last_at_threshold =
            sorted.get(i + 1).is_none_or(|next| next.confidence.total_cmp(&r.confidence).is_ne());
        if last_at_threshold {
            points.push(PrPoint { recall: hits as f64 / total, precision: hits as f64 / retrieved as f64 });
        }
    }
    Ok(points)
}

/// Trapezoidal area under the curve over recall, starting from
/// `(0, first precision)`. An empty curve has zero area.
pub fn auc(points: &[PrPoint]) -> f64 {
    let Some(first) = points.first() else {
        return 0.0;
    };
    let mut prev = PrPoint { recall: 0.0, precision: first.precision };
    let mut area = 0.0;
    for &p in points {
        area += (p.recall - prev.recall) * (p.precision + prev.precision) / 2.0;
        prev = p;
    }
    area
}
