//! Oracles shared by the integration tests. Deliberately written without
//! reusing the library code paths they check.
#![allow(dead_code, clippy::needless_range_loop)]

use patchvpr_core::{DrosoNetModel, ImageTensor, PrPoint, PrRecord};

/// Brute-force PR curve: for every distinct confidence, count directly.
pub fn brute_force_pr(records: &[PrRecord]) -> Vec<PrPoint> {
    let mut thresholds: Vec<f64> = Vec::new();
    for r in records {
        if !thresholds.contains(&r.confidence) {
            thresholds.push(r.confidence);
        }
    }
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds
        .iter()
        .map(|&t| {
            let retrieved = records.iter().filter(|r| r.confidence >= t).count();
            let hits = records.iter().filter(|r| r.confidence >= t && r.correct).count();
            PrPoint { recall: hits as f64 / records.len() as f64, precision: hits as f64 / retrieved as f64 }
        })
        .collect()
}

/// Trapezoid area of the recall/precision polyline starting at `(0, p_first)`.
pub fn brute_force_auc(points: &[PrPoint]) -> f64 {
    let mut xs = vec![0.0];
    let mut ys = vec![points[0].precision];
    for p in points {
        xs.push(p.recall);
        ys.push(p.precision);
    }
    (1..xs.len()).map(|i| 0.5 * (xs[i] - xs[i - 1]) * (ys[i] + ys[i - 1])).sum()
}

/// Cross-entropy of one sample recomputed from the model's public parameters.
pub fn sample_loss(model: &DrosoNetModel, patch: &ImageTensor, label: usize) -> f64 {
    let code = model.encode(patch).unwrap().to_dense();
    let hidden = model.config().hidden_units;
    let logits: Vec<f64> = (0..model.n_places())
        .map(|c| {
            let w = &model.out_weights()[c * hidden..(c + 1) * hidden];
            model.out_bias()[c] + w.iter().zip(&code).map(|(a, b)| a * b).sum::<f64>()
        })
        .collect();
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_z = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    log_z - logits[label]
}

/// Largest relative difference between analytic and central-difference gradients.
pub fn gradient_check(model: &DrosoNetModel, patch: &ImageTensor, label: usize, step: f64) -> f64 {
    let (dw, db) = model.gradients(patch, label).unwrap();
    let rel = |a: f64, n: f64| {
        let scale = a.abs().max(n.abs());
        if scale < 1e-10 {
            0.0
        } else {
            (a - n).abs() / scale
        }
    };
    let mut worst: f64 = 0.0;
    for i in 0..dw.len() {
        let (mut plus, mut minus) = (model.clone(), model.clone());
        plus.out_weights_mut()[i] += step;
        minus.out_weights_mut()[i] -= step;
        let numeric = (sample_loss(&plus, patch, label) - sample_loss(&minus, patch, label)) / (2.0 * step);
        worst = worst.max(rel(dw[i], numeric));
    }
    for i in 0..db.len() {
        let (mut plus, mut minus) = (model.clone(), model.clone());
        plus.out_bias_mut()[i] += step;
        minus.out_bias_mut()[i] -= step;
        let numeric = (sample_loss(&plus, patch, label) - sample_loss(&minus, patch, label)) / (2.0 * step);
        worst = worst.max(rel(db[i], numeric));
    }
    worst
}
