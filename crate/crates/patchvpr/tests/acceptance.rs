//! Acceptance suite. Runs every criterion in sequence (so the timing
//! measurement has the machine to itself), prints one PASS/FAIL line per
//! criterion and exits nonzero if any fail.

#[path = "../../core/tests/common/mod.rs"]
mod oracle;

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use patchvpr::Runner;
use patchvpr_core::{
    auc, ensemble_size, generate, is_correct, pr_curve, split_grid, CorruptMode, Corruption, DrosoNetModel,
    EnsembleConfig, GridShape, ImageTensor, PatchEnsemble, PrRecord, SynthDataset, SynthSpec, UnitConfig,
    PATCH_COLS, PATCH_ROWS,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn grid(r: usize, c: usize) -> GridShape {
    GridShape::new(r, c).unwrap()
}

fn config(g: GridShape, z: usize, seed: u64) -> EnsembleConfig {
    EnsembleConfig { master_seed: seed, ..EnsembleConfig::new(g, z) }
}

/// Returns (top-1 accuracy, AUC) at the given tolerance.
fn evaluate(e: &PatchEnsemble, data: &SynthDataset, tolerance: usize) -> (f64, f64) {
    let records: Vec<PrRecord> = data
        .queries
        .iter()
        .zip(&data.ground_truth)
        .map(|(q, &t)| {
            let m = e.match_query(q);
            PrRecord::new(m.confidence, is_correct(m.predicted_place, t, tolerance))
        })
        .collect();
    let acc = records.iter().filter(|r| r.correct).count() as f64 / records.len() as f64;
    (acc, auc(&pr_curve(&records).unwrap()))
}

fn call_count_law() -> Outcome {
    const TABLE: [((usize, usize), usize, usize); 4] =
        [((3, 1), 16, 144), ((3, 1), 4, 36), ((1, 3), 8, 72), ((4, 2), 8, 512)];
    let data = generate(&SynthSpec { n_places: 4, base_seed: 1, noise_sigma: 0.05, ..SynthSpec::default() })
        .unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for ((r, c), z, expected) in TABLE {
        let mut cfg = config(grid(r, c), z, 0);
        cfg.unit_config.epochs = 1;
        let e = PatchEnsemble::build_and_train(cfg, &data.references).unwrap();
        let mut calls = 0usize;
        e.for_each_score(&split_grid(&data.queries[0], cfg.grid), |_, _, _, _| calls += 1);
        let reported = e.match_query(&data.queries[0]).calls_made;
        let law = ensemble_size(cfg.grid, z).calls_per_query;
        pass &= calls == expected && reported == expected && law == expected;
        detail.push(format!("{r}x{c},z={z}: {calls}/{expected}"));
    }
    Outcome { pass, detail: detail.join("; ") }
}

fn patch_specialisation_advantage() -> Outcome {
    let corruption = Corruption { grid: grid(3, 1), cell: 0, mode: CorruptMode::Blackout };
    let (mut patch, mut legacy) = (Vec::new(), Vec::new());
    for seed in 0..5u64 {
        let spec = SynthSpec {
            n_places: 50,
            base_seed: seed,
            noise_sigma: 0.08,
            corruption: Some(corruption),
            ..SynthSpec::default()
        };
        let data = generate(&spec).unwrap();
        let p = PatchEnsemble::build_and_train(config(grid(3, 1), 4, seed), &data.references).unwrap();
        let l =
            PatchEnsemble::build_and_train(config(GridShape::whole(), 12, seed), &data.references).unwrap();
        assert_eq!(p.size().total_units, 12);
        assert_eq!(l.size().total_units, 12);
        patch.push(evaluate(&p, &data, 0).1);
        legacy.push(evaluate(&l, &data, 0).1);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mp, ml) = (mean(&patch), mean(&legacy));
    Outcome { pass: mp > ml, detail: format!("mean AUC patch {mp:.4} vs legacy {ml:.4} (5 seeds)") }
}

fn identity_recall() -> Outcome {
    let mut accs = Vec::new();
    for seed in 0..3u64 {
        let data = generate(&SynthSpec { n_places: 50, base_seed: seed, ..SynthSpec::default() }).unwrap();
        assert_eq!(data.queries, data.references);
        let e = PatchEnsemble::build_and_train(config(grid(3, 1), 4, seed), &data.references).unwrap();
        accs.push(evaluate(&e, &data, 0).0);
    }
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    Outcome { pass: mean >= 0.98, detail: format!("mean top-1 accuracy {mean:.4} over {accs:?}") }
}

fn pr_auc_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let len = rng.random_range(1..=12);
        // Coarse confidences so that ties occur.
        let records: Vec<PrRecord> = (0..len)
            .map(|_| PrRecord::new(rng.random_range(0..8) as f64 / 7.0, rng.random_bool(0.5)))
            .collect();
        let points = pr_curve(&records).unwrap();
        if points != oracle::brute_force_pr(&records) {
            failures += 1;
            continue;
        }
        worst = worst.max((auc(&points) - oracle::brute_force_auc(&points)).abs());
    }
    Outcome {
        pass: failures == 0 && worst <= 1e-12,
        detail: format!("200 sets, {failures} curve mismatches, max AUC error {worst:e}"),
    }
}

fn gradient_check() -> Outcome {
    let cfg = UnitConfig { hidden_units: 8, seed: 2024, ..UnitConfig::default() };
    let model = DrosoNetModel::new(4, cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst: f64 = 0.0;
    for label in 0..4 {
        let patch = ImageTensor::from_fn(PATCH_ROWS, PATCH_COLS, |_, _| rng.random_range(0.0..0.05));
        worst = worst.max(oracle::gradient_check(&model, &patch, label, 1e-4));
    }
    Outcome { pass: worst <= 1e-3, detail: format!("max relative error {worst:.3e} (4 classes, 8 hidden)") }
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_patchvpr")).args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr).trim()))
    }
}

fn pipeline(root: &Path, threads: &str) -> Result<(Vec<u8>, Vec<u8>), String> {
    let data = root.join("data");
    let out = root.join("out");
    let (d, o) = (data.to_str().unwrap(), out.to_str().unwrap());
    run_cli(&[
        "gen",
        "--places",
        "30",
        "--seed",
        "5",
        "--noise",
        "0.08",
        "--corrupt-cell",
        "0",
        "--grid",
        "3x1",
        "--out",
        d,
    ])?;
    run_cli(&[
        "train",
        "--data",
        d,
        "--grid",
        "3x1",
        "--z",
        "4",
        "--seed",
        "9",
        "--threads",
        threads,
        "--out",
        o,
    ])?;
    run_cli(&["eval", "--data", d, "--threads", threads, "--out", o])?;
    let read = |p: &Path| std::fs::read(p).map_err(|e| format!("{}: {e}", p.display()));
    Ok((read(&out.join("predictions.csv"))?, read(&out.join("ensemble.bin"))?))
}

fn end_to_end_determinism() -> Outcome {
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let runs: Result<Vec<_>, String> =
        dirs.iter().zip(["1", "1", "4"]).map(|(d, t)| pipeline(d.path(), t)).collect();
    match runs {
        Err(e) => Outcome { pass: false, detail: e },
        Ok(runs) => {
            let same = runs.windows(2).all(|w| w[0] == w[1]);
            let rows = runs[0].0.iter().filter(|&&b| b == b'\n').count() - 1;
            Outcome {
                pass: same && rows == 30,
                detail: format!("threads 1/1/4, {rows} prediction rows, identical={same}"),
            }
        }
    }
}

fn timing_scaling() -> Outcome {
    let data = generate(&SynthSpec { n_places: 50, base_seed: 3, noise_sigma: 0.05, ..SynthSpec::default() })
        .unwrap();
    let runner = Runner::new(Some(1)).unwrap();
    let build = |g: GridShape, z: usize| {
        let mut cfg = config(g, z, 1);
        cfg.unit_config.epochs = 5;
        runner.train(cfg, &data.references).unwrap()
    };
    let large = build(grid(4, 2), 8);
    let small = build(grid(3, 1), 16);
    assert_eq!(large.size().calls_per_query, 512);
    assert_eq!(small.size().calls_per_query, 144);
    let queries = &data.queries[..20];
    // Warm up, then interleave rounds so drift affects both equally.
    runner.time_queries(&large, &queries[..2]);
    runner.time_queries(&small, &queries[..2]);
    let (mut t_large, mut t_small) = (0.0, 0.0);
    let mut predictions_stable = true;
    let reference: Vec<usize> =
        runner.time_queries(&small, queries).results.iter().map(|m| m.predicted_place).collect();
    for _ in 0..3 {
        let start = Instant::now();
        runner.time_queries(&large, queries);
        t_large += start.elapsed().as_secs_f64();
        let start = Instant::now();
        let run = runner.time_queries(&small, queries);
        t_small += start.elapsed().as_secs_f64();
        predictions_stable &= run.results.iter().map(|m| m.predicted_place).eq(reference.iter().copied());
    }
    let ratio = t_large / t_small;
    Outcome {
        pass: (2.4..=4.8).contains(&ratio) && predictions_stable,
        detail: format!("mean time C=512 / C=144 = {ratio:.3} (ideal 3.556)"),
    }
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 7] = [
        ("1 call-count law", call_count_law),
        ("2 patch specialisation advantage", patch_specialisation_advantage),
        ("3 identity recall", identity_recall),
        ("4 PR/AUC oracle", pr_auc_oracle),
        ("5 gradient check", gradient_check),
        ("6 end-to-end determinism", end_to_end_determinism),
        ("7 timing scaling", timing_scaling),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        failed += !outcome.pass as usize;
        println!("[{verdict}] {name}: {} ({:.1}s)", outcome.detail, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
