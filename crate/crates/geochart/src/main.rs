use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use geochart::config::ExperimentConfig;
use geochart::error::{Error, Result};
use geochart::{io, pipeline, presets, report};
use geochart_core::features::{FeatureParams, FeatureSet};
use geochart_core::gradcheck;
use geochart_core::metrics::{aggregate, neighbor_count};
use geochart_core::sim::Domain;
use geochart_core::train::Variant;

/// Channel charting in real-world coordinates.
#[derive(Parser)]
#[command(name = "geochart", version, about)]
struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write the noisy, split dataset.
    Simulate {
        #[command(flatten)]
        source: ConfigSource,
        /// Delay taps kept when adding noise (defaults to the config's C).
        #[arg(long)]
        taps: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Import an external CSI recording described by a JSON layout descriptor.
    Ingest {
        #[arg(long)]
        descriptor: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract features, receive powers and LoS structure from a dataset.
    Features {
        #[arg(long)]
        dataset: PathBuf,
        /// Delay taps C (defaults to all stored delay-domain columns, or 13
        /// for frequency-domain recordings).
        #[arg(long)]
        taps: Option<usize>,
        /// LoS power threshold in dB; `-inf` marks every AP as LoS.
        #[arg(long, allow_hyphen_values = true, default_value_t = f64::NEG_INFINITY)]
        p_thr: f64,
        /// Minimum power gap in dB between the APs of a pair.
        #[arg(long, allow_hyphen_values = true, default_value_t = 3.0)]
        m_p: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export receive power per AP over time as CSV, for choosing the LoS threshold.
    PowerTrace {
        #[arg(long)]
        features: PathBuf,
        /// Restrict to these APs (repeatable); all APs by default.
        #[arg(long)]
        ap: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one variant for several seeds.
    Train {
        #[arg(long)]
        variant: VariantArg,
        #[command(flatten)]
        source: ConfigSource,
        /// Train seeds 1..=k instead of the config's seed list.
        #[arg(long)]
        seeds: Option<u64>,
        /// Use a saved dataset instead of simulating the config's scenario.
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a checkpoint on the test split of a dataset.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Evaluate even if the checkpoint was trained on a different dataset.
        #[arg(long)]
        force: bool,
        /// Also write the report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a checkpoint's chart coordinates as CSV.
    Export {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum, default_value_t = SplitArg::Test)]
        split: SplitArg,
        #[arg(long)]
        force: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a scenario through every variant and print the comparison table.
    Reproduce {
        #[command(flatten)]
        source: ConfigSource,
        /// Train seeds 1..=k instead of the config's seed list.
        #[arg(long)]
        seeds: Option<u64>,
        /// Comma-separated subset of variants.
        #[arg(long, value_delimiter = ',')]
        variants: Vec<VariantArg>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check every analytic loss gradient against finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 50)]
        instances: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print a preset as a config file.
    Preset { name: String },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ConfigSource {
    /// Experiment config file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in scenario: indoor-lite or outdoor-lite.
    #[arg(long)]
    preset: Option<String>,
}

impl ConfigSource {
    fn load(&self) -> Result<ExperimentConfig> {
        match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentConfig::load(path),
            (None, Some(name)) => preset(name),
            (None, None) => Err(Error::Usage("either --config or --preset is required".into())),
        }
    }
}

fn preset(name: &str) -> Result<ExperimentConfig> {
    presets::preset(name)
        .ok_or_else(|| Error::Usage(format!("unknown preset '{name}' (available: {})", presets::PRESETS.join(", "))))
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "UPPER")]
enum VariantArg {
    P1,
    P2,
    B1,
    B2,
    B3,
    B4,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::P1 => Variant::P1,
            VariantArg::P2 => Variant::P2,
            VariantArg::B1 => Variant::B1,
            VariantArg::B2 => Variant::B2,
            VariantArg::B3 => Variant::B3,
            VariantArg::B4 => Variant::B4,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum SplitArg {
    Train,
    Test,
    All,
}

fn with_seeds(mut cfg: ExperimentConfig, seeds: Option<u64>) -> Result<ExperimentConfig> {
    if let Some(k) = seeds {
        if k == 0 {
            return Err(Error::Usage("--seeds must be at least 1".into()));
        }
        cfg.train.seeds = (1..=k).collect();
    }
    Ok(cfg)
}

fn simulate(source: &ConfigSource, taps: Option<usize>, out: &Path) -> Result<()> {
    let mut cfg = source.load()?;
    if let Some(c) = taps {
        cfg.features.taps = c;
    }
    cfg.validate()?;
    let ds = pipeline::simulate(&cfg)?;
    io::save_dataset(out, &ds, &pipeline::dataset_info(&cfg))?;
    println!("{} samples ({} train, {} test) written to {}", ds.len(), ds.train_indices().len(), ds.test_indices().len(), out.display());
    Ok(())
}

fn ingest(descriptor: &Path, out: &Path) -> Result<()> {
    let ds = io::ingest_external(descriptor)?;
    let info = io::DatasetInfo { subcarriers: None, seed: None, config_hash: None, ingested: true };
    io::save_dataset(out, &ds, &info)?;
    println!("{} samples ({} train, {} test) written to {}", ds.len(), ds.train_indices().len(), ds.test_indices().len(), out.display());
    Ok(())
}

/// Default delay taps for recorded (frequency-domain) channels, which have
/// longer delay spreads than the simulated ones.
const INGESTED_TAPS: usize = 13;

fn features(dataset: &Path, taps: Option<usize>, p_thr: f64, m_p: f64, out: &Path) -> Result<()> {
    let (ds, manifest) = io::load_dataset(dataset)?;
    let taps = match (taps, ds.domain) {
        (Some(c), _) => c,
        (None, Domain::Delay) => ds.cols,
        (None, Domain::Frequency) => INGESTED_TAPS.min(ds.cols),
    };
    let fs = FeatureSet::build(&ds, &FeatureParams { taps, p_thr_db: p_thr, m_p_db: m_p })?;
    io::save_features(out, &fs, &manifest)?;
    let los = fs.los_sets.iter().map(Vec::len).sum::<usize>() as f64 / fs.len() as f64;
    println!("{} feature vectors of dimension {}; {los:.2} LoS APs per sample", fs.len(), fs.dim);
    Ok(())
}

fn power_trace(features: &Path, aps: &[usize], out: &Path) -> Result<()> {
    let (fs, _) = io::load_features(features)?;
    let aps: Vec<usize> = if aps.is_empty() { (0..fs.ap_count).collect() } else { aps.to_vec() };
    if let Some(a) = aps.iter().find(|a| **a >= fs.ap_count) {
        return Err(Error::Usage(format!("AP {a} out of range (A = {})", fs.ap_count)));
    }
    io::export_power_trace(out, &fs, &aps)
}

fn train(variant: Variant, source: &ConfigSource, seeds: Option<u64>, dataset: Option<&Path>, out: &Path) -> Result<()> {
    let cfg = with_seeds(source.load()?, seeds)?;
    cfg.validate()?;
    let (ds, identity) = match dataset {
        Some(dir) => {
            let (ds, m) = io::load_dataset(dir)?;
            (ds, m.identity())
        }
        None => {
            let ds = pipeline::simulate(&cfg)?;
            let m = io::save_dataset(&out.join("dataset"), &ds, &pipeline::dataset_info(&cfg))?;
            (ds, m.identity())
        }
    };
    let fs = FeatureSet::build(&ds, &cfg.features)?;
    let mut per_seed = Vec::new();
    for &seed in &cfg.train.seeds {
        log::info!("training {variant} seed {seed}");
        let run = pipeline::run_variant(&cfg, variant, seed, &fs, &ds)?;
        pipeline::write_run(&out.join(format!("seed-{seed}")), &cfg, &identity, &run)?;
        per_seed.push(run.metrics);
    }
    let j = neighbor_count(ds.test_indices().len(), cfg.metrics.neighbor_fraction);
    let rep = aggregate(&per_seed, j, cfg.metrics.bins)?;
    io::write_json_file(&out.join("metrics.json"), &rep)?;
    print!("{}", report::metrics_table(variant.name(), &rep));
    Ok(())
}

/// Checkpoint, dataset and the checkpoint's features of it.
fn load_pair(model: &Path, dataset: &Path, force: bool) -> Result<(io::Checkpoint, geochart_core::sim::CsiDataset, FeatureSet)> {
    let ck = io::load_checkpoint(model)?;
    let (ds, m) = io::load_dataset(dataset)?;
    let found = m.identity();
    if found != ck.manifest.dataset_hash {
        if !force {
            return Err(Error::HashMismatch { expected: ck.manifest.dataset_hash.clone(), found });
        }
        log::warn!("checkpoint and dataset hashes differ; continuing because of --force");
    }
    let fs = FeatureSet::build(&ds, &ck.manifest.features.into())?;
    if fs.dim != ck.model.input_dim() {
        return Err(Error::Core(geochart_core::Error::Shape { what: "feature dimension", expected: ck.model.input_dim(), found: fs.dim }));
    }
    Ok((ck, ds, fs))
}

fn eval(model: &Path, dataset: &Path, force: bool, out: Option<&Path>) -> Result<()> {
    let (ck, ds, fs) = load_pair(model, dataset, force)?;
    let test = ds.test_indices();
    if test.len() < 2 {
        return Err(Error::Usage("the dataset's test split has fewer than two samples".into()));
    }
    let pts = pipeline::chart_points(&ck.model, ck.manifest.affine.as_ref(), &fs, &test)?;
    let metrics = geochart_core::metrics::MetricsConfig::default();
    let m = pipeline::evaluate_points(&ds, &test, &pts, ck.manifest.seed, ck.manifest.variant, &metrics)?;
    let rep = aggregate(&[m], neighbor_count(test.len(), metrics.neighbor_fraction), metrics.bins)?;
    print!("{}", report::metrics_table(ck.manifest.variant.name(), &rep));
    if let Some(path) = out {
        io::write_json_file(path, &rep)?;
    }
    Ok(())
}

fn export(model: &Path, dataset: &Path, split: SplitArg, force: bool, out: &Path) -> Result<()> {
    let (ck, ds, fs) = load_pair(model, dataset, force)?;
    let idx = match split {
        SplitArg::Train => ds.train_indices(),
        SplitArg::Test => ds.test_indices(),
        SplitArg::All => (0..ds.len()).collect(),
    };
    let pts = pipeline::chart_points(&ck.model, ck.manifest.affine.as_ref(), &fs, &idx)?;
    io::export_chart(out, &idx, &pts)
}

fn reproduce(source: &ConfigSource, seeds: Option<u64>, variants: &[VariantArg], out: &Path) -> Result<()> {
    let cfg = with_seeds(source.load()?, seeds)?;
    let variants: Vec<Variant> = if variants.is_empty() { Variant::ALL.to_vec() } else { variants.iter().map(|v| (*v).into()).collect() };
    let cmp = pipeline::reproduce(&cfg, &variants, out)?;
    print!("{}", report::comparison_table(&cmp));
    Ok(())
}

fn gradcheck(instances: usize, seed: u64) -> Result<bool> {
    let mut ok = true;
    for r in gradcheck::check_all(seed, instances)? {
        println!(
            "{:<13} instances {:>3}  checked {:>6}  skipped {:>5}  max rel. error {:.2e}  {}",
            r.loss,
            r.instances,
            r.checked,
            r.skipped,
            r.max_rel_error,
            if r.passed() { "ok" } else { "FAILED" }
        );
        ok &= r.passed();
    }
    Ok(ok)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate { source, taps, out } => simulate(&source, taps, &out)?,
        Command::Ingest { descriptor, out } => ingest(&descriptor, &out)?,
        Command::Features { dataset, taps, p_thr, m_p, out } => features(&dataset, taps, p_thr, m_p, &out)?,
        Command::PowerTrace { features, ap, out } => power_trace(&features, &ap, &out)?,
        Command::Train { variant, source, seeds, dataset, out } => train(variant.into(), &source, seeds, dataset.as_deref(), &out)?,
        Command::Eval { model, dataset, force, out } => eval(&model, &dataset, force, out.as_deref())?,
        Command::Export { model, dataset, split, force, out } => export(&model, &dataset, split, force, &out)?,
        Command::Reproduce { source, seeds, variants, out } => reproduce(&source, seeds, &variants, &out)?,
        Command::Gradcheck { instances, seed } => {
            if !gradcheck(instances, seed)? {
                return Ok(ExitCode::from(3));
            }
        }
        Command::Preset { name } => print!("{}", preset(&name)?.to_toml()),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
