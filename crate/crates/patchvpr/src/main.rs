use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use patchvpr::config::RunConfig;
use patchvpr::dataset::{self, GroundTruth, GROUND_TRUTH_FILE, QUERIES_DIR, REFERENCES_DIR};
use patchvpr::model_io::{load_ensemble, save_ensemble};
use patchvpr::report::{bench_summary_json, timing_csv, write_text, EvalReport, RunInfo, TimingStats};
use patchvpr::svg::pr_curve_svg;
use patchvpr::Runner;
use patchvpr_core::{
    generate, CorruptMode, Corruption, EnsembleConfig, GridShape, ImageTensor, PatchEnsemble, SynthSpec,
    UnitConfig, VotingMode,
};

#[derive(Parser)]
#[command(name = "patchvpr", version, about = "Patch-specialised DrosoNet place recognition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic reference/query traverse pair.
    Gen(GenArgs),
    /// Train an ensemble on a reference directory.
    Train(RunArgs),
    /// Match queries, score them against ground truth and plot the PR curve.
    Eval(RunArgs),
    /// Time per-query matching.
    Bench(RunArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 50)]
    places: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 96)]
    rows: usize,
    #[arg(long, default_value_t = 192)]
    cols: usize,
    /// Standard deviation of additive Gaussian noise on queries.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Grid cell (row-major index under --grid) to corrupt in every query.
    #[arg(long)]
    corrupt_cell: Option<usize>,
    #[arg(long, default_value = "3x1")]
    grid: String,
    /// blackout, noise-burst or brightness-shift.
    #[arg(long, default_value = "blackout")]
    corrupt_mode: String,
    /// Lateral shift of query content in pixels.
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    shift: i32,
    /// Tolerance recorded in the ground-truth header.
    #[arg(long, default_value_t = 0)]
    tolerance: usize,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value = "dataset")]
    out: PathBuf,
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// TOML file with defaults for any of the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset root containing references/, queries/ and ground_truth.txt.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    refs: Option<PathBuf>,
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Model file; defaults to <out>/ensemble.bin.
    #[arg(long)]
    ensemble: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid shape RxC.
    #[arg(long)]
    grid: Option<String>,
    /// Units per patch.
    #[arg(long = "z")]
    z: Option<usize>,
    /// soft or hard.
    #[arg(long)]
    voting: Option<String>,
    #[arg(long)]
    tolerance: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    density: Option<f64>,
    #[arg(long)]
    wta: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
}

impl RunArgs {
    fn resolve(self) -> Result<Settings> {
        let flags = RunConfig {
            data: self.data,
            refs: self.refs,
            queries: self.queries,
            truth: self.truth,
            ensemble: self.ensemble,
            out: self.out,
            grid: self.grid,
            z: self.z,
            voting: self.voting,
            tolerance: self.tolerance,
            seed: self.seed,
            threads: self.threads,
            hidden: self.hidden,
            density: self.density,
            wta: self.wta,
            lr: self.lr,
            epochs: self.epochs,
        };
        let cfg = match &self.config {
            Some(path) => flags.or(RunConfig::load(path)?),
            None => flags,
        };
        Settings::from_config(cfg)
    }
}

/// Fully resolved run settings.
struct Settings {
    cfg: RunConfig,
    grid: GridShape,
    z: usize,
    voting: Option<VotingMode>,
    out: PathBuf,
}

const DEFAULT_GRID: &str = "3x1";
const DEFAULT_Z: usize = 4;

impl Settings {
    fn from_config(cfg: RunConfig) -> Result<Self> {
        let grid: GridShape = cfg.grid.as_deref().unwrap_or(DEFAULT_GRID).parse()?;
        let z = cfg.z.unwrap_or(DEFAULT_Z);
        if z == 0 {
            bail!("--z must be at least 1");
        }
        let voting = cfg.voting.as_deref().map(str::parse).transpose()?;
        let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
        Ok(Self { cfg, grid, z, voting, out })
    }

    fn data_path(&self, explicit: &Option<PathBuf>, child: &str, flag: &str) -> Result<PathBuf> {
        match (explicit, &self.cfg.data) {
            (Some(p), _) => Ok(p.clone()),
            (None, Some(root)) => Ok(root.join(child)),
            (None, None) => bail!("pass --data or --{flag}"),
        }
    }

    fn refs(&self) -> Result<PathBuf> {
        self.data_path(&self.cfg.refs, REFERENCES_DIR, "refs")
    }

    fn queries(&self) -> Result<PathBuf> {
        self.data_path(&self.cfg.queries, QUERIES_DIR, "queries")
    }

    fn truth(&self) -> Result<PathBuf> {
        self.data_path(&self.cfg.truth, GROUND_TRUTH_FILE, "truth")
    }

    fn ensemble_path(&self) -> PathBuf {
        self.cfg.ensemble.clone().unwrap_or_else(|| self.out.join("ensemble.bin"))
    }

    fn runner(&self) -> Result<Runner> {
        Ok(Runner::new(self.cfg.threads)?)
    }

    fn ensemble_config(&self) -> Result<EnsembleConfig> {
        let d = UnitConfig::default();
        let unit_config = UnitConfig {
            hidden_units: self.cfg.hidden.unwrap_or(d.hidden_units),
            projection_density: self.cfg.density.unwrap_or(d.projection_density),
            wta_keep_fraction: self.cfg.wta.unwrap_or(d.wta_keep_fraction),
            learning_rate: self.cfg.lr.unwrap_or(d.learning_rate),
            epochs: self.cfg.epochs.unwrap_or(d.epochs),
            seed: 0,
        };
        let config = EnsembleConfig {
            grid: self.grid,
            units_per_patch: self.z,
            unit_config,
            voting: self.voting.unwrap_or_default(),
            master_seed: self.cfg.seed.unwrap_or(0),
        };
        config.validate()?;
        Ok(config)
    }
}

fn load_dir(runner: &Runner, dir: &Path, what: &str) -> Result<Vec<ImageTensor>> {
    if !dir.is_dir() {
        bail!("{what} directory {} does not exist", dir.display());
    }
    let images = runner.install(|| dataset::load_images(dir))?;
    if images.is_empty() {
        bail!("{what} directory {} contains no PNG or JPEG images", dir.display());
    }
    Ok(images)
}

fn create_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let corruption = match args.corrupt_cell {
        Some(cell) => Some(Corruption {
            grid: args.grid.parse()?,
            cell,
            mode: args.corrupt_mode.parse::<CorruptMode>()?,
        }),
        None => None,
    };
    let spec = SynthSpec {
        n_places: args.places,
        image_rows: args.rows,
        image_cols: args.cols,
        base_seed: args.seed,
        noise_sigma: args.noise,
        corruption,
        shift_cols: args.shift,
    };
    let data = generate(&spec)?;
    let runner = Runner::new(Some(args.threads))?;
    create_out(&args.out)?;
    runner.install(|| dataset::write_dataset(&args.out, &data, args.tolerance))?;
    println!("wrote {} places to {}", spec.n_places, args.out.display());
    Ok(())
}

fn cmd_train(args: RunArgs) -> Result<()> {
    let s = args.resolve()?;
    let config = s.ensemble_config()?;
    let runner = s.runner()?;
    let refs_dir = s.refs()?;
    let refs = load_dir(&runner, &refs_dir, "reference")?;
    if refs.len() < 2 {
        bail!("need at least 2 reference images in {}, found {}", refs_dir.display(), refs.len());
    }
    let size = config.size();
    println!("T={} C={}", size.total_units, size.calls_per_query);
    let ensemble = runner.train(config, &refs)?;
    create_out(&s.out)?;
    let path = s.ensemble_path();
    save_ensemble(&path, &ensemble)?;
    println!(
        "trained {} units on {} places (grid {}, z={}) -> {}",
        size.total_units,
        refs.len(),
        config.grid,
        config.units_per_patch,
        path.display()
    );
    Ok(())
}

fn load_for_matching(s: &Settings, runner: &Runner) -> Result<(PatchEnsemble, Vec<ImageTensor>)> {
    let path = s.ensemble_path();
    let mut ensemble = load_ensemble(&path)?;
    if let Some(mode) = s.voting {
        ensemble.set_voting(mode);
    }
    let queries = load_dir(runner, &s.queries()?, "query")?;
    Ok((ensemble, queries))
}

fn run_info(ensemble: &PatchEnsemble, tolerance: usize, threads: usize) -> RunInfo {
    let c = ensemble.config();
    let size = ensemble.size();
    RunInfo {
        grid: c.grid.to_string(),
        units_per_patch: c.units_per_patch,
        total_units: size.total_units,
        calls_per_query: size.calls_per_query,
        voting: c.voting.to_string(),
        tolerance,
        n_places: ensemble.n_places(),
        threads,
    }
}

fn cmd_eval(args: RunArgs) -> Result<()> {
    let s = args.resolve()?;
    let runner = s.runner()?;
    let (ensemble, queries) = load_for_matching(&s, &runner)?;
    let truth = GroundTruth::load(&s.truth()?)?;
    if truth.references.len() != queries.len() {
        bail!(
            "ground truth lists {} queries but the query directory holds {}",
            truth.references.len(),
            queries.len()
        );
    }
    if let Some(&bad) = truth.references.iter().find(|&&r| r >= ensemble.n_places()) {
        bail!("ground truth references place {bad} but the ensemble knows {} places", ensemble.n_places());
    }
    let tolerance = s.cfg.tolerance.unwrap_or(truth.tolerance);
    let run = runner.time_queries(&ensemble, &queries);
    let report = EvalReport::build(
        run_info(&ensemble, tolerance, runner.threads()),
        &run.results,
        &run.durations,
        &truth.references,
    )?;
    create_out(&s.out)?;
    write_text(&s.out.join("eval.csv"), &report.to_csv())?;
    write_text(&s.out.join("predictions.csv"), &report.predictions_csv())?;
    write_text(&s.out.join("summary.json"), &report.summary_json())?;
    let title = format!(
        "grid {}, z={}, {} voting",
        report.info.grid, report.info.units_per_patch, report.info.voting
    );
    write_text(&s.out.join("pr_curve.svg"), &pr_curve_svg(&report.pr_points, report.auc, &title))?;
    println!(
        "queries={} accuracy={:.4} auc={:.4} mean_us={:.1} -> {}",
        report.records.len(),
        report.accuracy,
        report.auc,
        report.timing.mean_us,
        s.out.display()
    );
    Ok(())
}

fn cmd_bench(args: RunArgs) -> Result<()> {
    let s = args.resolve()?;
    let runner = s.runner()?;
    let (ensemble, queries) = load_for_matching(&s, &runner)?;
    let run = runner.time_queries(&ensemble, &queries);
    let stats = TimingStats::from_durations(&run.durations);
    let info = run_info(&ensemble, s.cfg.tolerance.unwrap_or(0), runner.threads());
    create_out(&s.out)?;
    write_text(&s.out.join("timing.csv"), &timing_csv(&run.results, &run.durations))?;
    write_text(&s.out.join("timing_summary.json"), &bench_summary_json(&info, &stats))?;
    println!(
        "C={} queries={} mean_us={:.1} median_us={:.1} min_us={:.1} max_us={:.1}",
        info.calls_per_query, stats.count, stats.mean_us, stats.median_us, stats.min_us, stats.max_us
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
