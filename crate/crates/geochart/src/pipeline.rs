//! End-to-end pipeline: simulate, extract features, train every variant for
//! every seed, evaluate on the test split and write all artifacts.

use std::collections::BTreeMap;
use std::path::Path;

use geochart_core::features::FeatureSet;
use geochart_core::metrics::{aggregate, evaluate, neighbor_count, MetricsConfig, MetricsReport, SeedMetrics};
use geochart_core::net::ChartModel;
use geochart_core::sim::{add_noise, split_train_test, synthesize_csi, CsiDataset};
use geochart_core::train::{apply_affine, attach_affine, train_variant, AffineMap, TrainedChart, Variant};
use geochart_core::{horizontal, Point2};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::io::{self, CheckpointManifest, DatasetInfo, Payload};
use crate::report;

/// Simulated, noisy, delay-domain dataset with its train/test split.
pub fn simulate(cfg: &ExperimentConfig) -> Result<CsiDataset> {
    let clean = synthesize_csi(&cfg.scenario)?;
    let noisy = add_noise(&clean, cfg.scenario.max_snr_db, cfg.features.taps, cfg.scenario.seed)?;
    Ok(split_train_test(&noisy, cfg.split.ratio, cfg.scenario.seed)?)
}

pub fn dataset_info(cfg: &ExperimentConfig) -> DatasetInfo {
    DatasetInfo {
        subcarriers: Some(cfg.scenario.subcarrier_count),
        seed: Some(cfg.scenario.seed),
        config_hash: Some(cfg.dataset_hash()),
        ingested: false,
    }
}

/// Chart coordinates of the given rows, with the affine map applied if any.
pub fn chart_points(model: &ChartModel, affine: Option<&AffineMap>, fs: &FeatureSet, idx: &[usize]) -> Result<Vec<Point2>> {
    let pts = model.predict(&fs.gather(idx))?;
    Ok(match affine {
        Some(m) => apply_affine(m, &pts),
        None => pts,
    })
}

/// Ground-truth horizontal positions of the given rows.
pub fn truth(ds: &CsiDataset, idx: &[usize]) -> Result<Vec<Point2>> {
    let p = ds.positions.as_ref().ok_or(geochart_core::Error::MissingPositions)?;
    Ok(idx.iter().map(|&i| horizontal(&p[i])).collect())
}

pub fn evaluate_points(
    ds: &CsiDataset,
    idx: &[usize],
    points: &[Point2],
    seed: u64,
    variant: Variant,
    cfg: &MetricsConfig,
) -> Result<SeedMetrics> {
    Ok(evaluate(seed, &truth(ds, idx)?, points, variant.real_coordinates(), cfg)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantReport {
    pub variant: Variant,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub name: String,
    pub config_hash: String,
    pub dataset_hash: String,
    pub samples: usize,
    pub test_samples: usize,
    /// Diagonal of the trajectory area in meters.
    pub area_diagonal_m: f64,
    pub variants: Vec<VariantReport>,
}

impl Comparison {
    pub fn get(&self, v: Variant) -> Option<&MetricsReport> {
        self.variants.iter().find(|r| r.variant == v).map(|r| &r.report)
    }
}

/// One trained model with its test-split chart.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub chart: TrainedChart,
    pub test_indices: Vec<usize>,
    pub points: Vec<Point2>,
    pub metrics: SeedMetrics,
}

/// Writes checkpoint, training log and test chart of one run into `dir`.
pub fn write_run(dir: &Path, cfg: &ExperimentConfig, dataset_hash: &str, run: &RunOutput) -> Result<()> {
    let manifest = CheckpointManifest {
        schema_version: io::SCHEMA_VERSION,
        variant: run.chart.variant,
        seed: run.chart.seed,
        widths: run.chart.model.widths(),
        features: cfg.features.into(),
        affine: run.chart.affine,
        labels: run.chart.labels.clone(),
        config_hash: cfg.config_hash(),
        dataset_hash: dataset_hash.to_string(),
        params: Payload { file: String::new(), bytes: 0, sha256: String::new() },
    };
    io::save_checkpoint(dir, manifest, &run.chart.model)?;
    io::export_training_log(&dir.join("log.csv"), &run.chart.log)?;
    io::export_chart(&dir.join("chart.csv"), &run.test_indices, &run.points)
}

fn finish(chart: TrainedChart, fs: &FeatureSet, ds: &CsiDataset, cfg: &ExperimentConfig) -> Result<RunOutput> {
    let test = ds.test_indices();
    if test.len() < 2 {
        return Err(Error::Usage("evaluation needs at least two test samples".into()));
    }
    let points = chart_points(&chart.model, chart.affine.as_ref(), fs, &test)?;
    let metrics = evaluate_points(ds, &test, &points, chart.seed, chart.variant, &cfg.metrics)?;
    Ok(RunOutput { chart, test_indices: test, points, metrics })
}

/// Trains one variant for one seed and evaluates it on the test split.
pub fn run_variant(cfg: &ExperimentConfig, variant: Variant, seed: u64, fs: &FeatureSet, ds: &CsiDataset) -> Result<RunOutput> {
    let chart = train_variant(&cfg.run_config(variant, seed), fs, ds, &cfg.site())?;
    finish(chart, fs, ds, cfg)
}

/// Runs the given variants for every seed and writes everything below `out`:
///
/// ```text
/// out/dataset/                 simulated dataset
/// out/features/                features and receive powers
/// out/runs/<variant>/seed-<s>/ model.json, model.bin, log.csv, chart.csv
/// out/metrics.json             per-variant reports
/// out/table.txt                the same as a table
/// ```
///
/// B2 reuses the B1 model of the same seed and only fits the affine map.
pub fn reproduce(cfg: &ExperimentConfig, variants: &[Variant], out: &Path) -> Result<Comparison> {
    cfg.validate()?;
    log::info!("simulating {}", cfg.name);
    let ds = simulate(cfg)?;
    let dm = io::save_dataset(&out.join("dataset"), &ds, &dataset_info(cfg))?;
    let fs = FeatureSet::build(&ds, &cfg.features)?;
    io::save_features(&out.join("features"), &fs, &dm)?;
    let mut order: Vec<Variant> = variants.to_vec();
    order.sort();
    order.dedup();
    let mut b1: BTreeMap<u64, TrainedChart> = BTreeMap::new();
    let mut reports = Vec::new();
    for &variant in &order {
        let mut per_seed = Vec::new();
        for &seed in &cfg.train.seeds {
            log::info!("training {variant} seed {seed}");
            let run = if variant == Variant::B2 {
                let mut chart = match b1.get(&seed) {
                    Some(c) => c.clone(),
                    None => train_variant(&cfg.run_config(Variant::B1, seed), &fs, &ds, &cfg.site())?,
                };
                attach_affine(&mut chart, &fs, &ds, cfg.train.affine_labels)?;
                finish(chart, &fs, &ds, cfg)?
            } else {
                run_variant(cfg, variant, seed, &fs, &ds)?
            };
            write_run(&out.join("runs").join(variant.name()).join(format!("seed-{seed}")), cfg, &dm.identity(), &run)?;
            per_seed.push(run.metrics);
            if variant == Variant::B1 {
                b1.insert(seed, run.chart);
            }
        }
        let j = neighbor_count(ds.test_indices().len(), cfg.metrics.neighbor_fraction);
        reports.push(VariantReport { variant, report: aggregate(&per_seed, j, cfg.metrics.bins)? });
    }
    let area = cfg.scenario.trajectory.area;
    let cmp = Comparison {
        name: cfg.name.clone(),
        config_hash: cfg.config_hash(),
        dataset_hash: cfg.dataset_hash(),
        samples: ds.len(),
        test_samples: ds.test_indices().len(),
        area_diagonal_m: area.diagonal(),
        variants: reports,
    };
    io::write_json_file(&out.join("metrics.json"), &cmp)?;
    io::write_text(&out.join("table.txt"), &report::comparison_table(&cmp))?;
    Ok(cmp)
}
