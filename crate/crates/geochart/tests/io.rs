use std::fs;
use std::path::Path;

use geochart::config::ExperimentConfig;
use geochart::error::Error;
use geochart::{io, pipeline, presets};
use geochart_core::features::FeatureSet;
use geochart_core::metrics::MetricsConfig;
use geochart_core::sim::CsiDataset;
use geochart_core::train::Variant;
use serde_json::Value;

/// Outdoor preset on a coarse grid: about 70 samples, quick to train.
fn small() -> ExperimentConfig {
    let mut cfg = presets::outdoor_lite();
    cfg.scenario.trajectory.step_m = 5.0;
    cfg.train.epochs = 2;
    cfg.train.batch_size = 16;
    cfg.train.affine_labels = 5;
    cfg.train.semi_labels = 10;
    cfg.train.seeds = vec![1];
    cfg
}

fn saved(dir: &Path) -> (ExperimentConfig, CsiDataset) {
    let cfg = small();
    let ds = pipeline::simulate(&cfg).unwrap();
    io::save_dataset(dir, &ds, &pipeline::dataset_info(&cfg)).unwrap();
    (cfg, ds)
}

fn edit_json(path: &Path, f: impl FnOnce(&mut Value)) {
    let mut v: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    f(&mut v);
    fs::write(path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
}

#[test]
fn dataset_round_trip_is_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, ds) = saved(tmp.path());
    let (back, m) = io::load_dataset(tmp.path()).unwrap();
    assert_eq!(io::csi_bytes(&back.csi), io::csi_bytes(&ds.csi));
    assert_eq!(io::f64_bytes(&back.timestamps), io::f64_bytes(&ds.timestamps));
    assert_eq!(back, ds);
    assert_eq!(m.samples, ds.len());
    assert_eq!(m.schema_version, io::SCHEMA_VERSION);
}

#[test]
fn corrupted_payload_fails_checksum() {
    let tmp = tempfile::tempdir().unwrap();
    saved(tmp.path());
    let path = tmp.path().join("csi.bin");
    let mut bytes = fs::read(&path).unwrap();
    bytes[100] ^= 0x01;
    fs::write(&path, bytes).unwrap();
    let err = io::load_dataset(tmp.path()).unwrap_err();
    assert!(matches!(err, Error::Checksum { .. }), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn unknown_schema_version_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    saved(tmp.path());
    edit_json(&tmp.path().join(io::DATASET_MANIFEST), |v| v["schema_version"] = 2.into());
    let err = io::load_dataset(tmp.path()).unwrap_err();
    assert!(matches!(err, Error::Version { found: 2, .. }), "{err}");
}

#[test]
fn truncated_payload_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    saved(tmp.path());
    let path = tmp.path().join("timestamps.bin");
    let bytes = fs::read(&path).unwrap();
    fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    let err = io::load_dataset(tmp.path()).unwrap_err();
    assert!(matches!(err, Error::Truncated { .. }), "{err}");
}

#[test]
fn features_round_trip_keeps_negative_infinite_threshold() {
    let tmp = tempfile::tempdir().unwrap();
    let (cfg, ds) = saved(&tmp.path().join("ds"));
    assert_eq!(cfg.features.p_thr_db, f64::NEG_INFINITY);
    let (_, m) = io::load_dataset(&tmp.path().join("ds")).unwrap();
    let fs_ = FeatureSet::build(&ds, &cfg.features).unwrap();
    io::save_features(&tmp.path().join("fs"), &fs_, &m).unwrap();
    let (back, _) = io::load_features(&tmp.path().join("fs")).unwrap();
    assert_eq!(back.params.p_thr_db, f64::NEG_INFINITY);
    assert_eq!(io::f64_bytes(&back.features), io::f64_bytes(&fs_.features));
    assert_eq!(back.los_sets, fs_.los_sets);
    assert_eq!(back.ap_pairs, fs_.ap_pairs);
}

#[test]
fn checkpoint_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let (cfg, ds) = saved(&tmp.path().join("ds"));
    let fs_ = FeatureSet::build(&ds, &cfg.features).unwrap();
    let run = pipeline::run_variant(&cfg, Variant::B4, 1, &fs_, &ds).unwrap();
    pipeline::write_run(&tmp.path().join("run"), &cfg, "abc", &run).unwrap();
    let ck = io::load_checkpoint(&tmp.path().join("run")).unwrap();
    assert_eq!(io::f64_bytes(ck.model.params()), io::f64_bytes(run.chart.model.params()));
    assert_eq!(ck.manifest.variant, Variant::B4);
    assert_eq!(ck.manifest.dataset_hash, "abc");
    let by_file = io::load_checkpoint(&tmp.path().join("run").join(io::CHECKPOINT_MANIFEST)).unwrap();
    assert_eq!(by_file.model.params(), ck.model.params());
}

#[test]
fn exported_dataset_ingests_to_the_same_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small();
    let ds = pipeline::simulate(&cfg).unwrap();
    let descriptor = io::export_external(tmp.path(), &ds, cfg.split.ratio, cfg.scenario.seed).unwrap();
    let back = io::ingest_external(&descriptor).unwrap();
    assert_eq!(back, CsiDataset { los: None, ..ds });
}

#[test]
fn ingest_rotates_positions() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = pipeline::simulate(&small()).unwrap();
    let descriptor = io::export_external(tmp.path(), &ds, 0.8, 0).unwrap();
    edit_json(&descriptor, |v| {
        v["rotation_deg"] = 90.0.into();
        v["rotation_origin"] = serde_json::json!([1.0, 2.0]);
    });
    let back = io::ingest_external(&descriptor).unwrap();
    let (p, q) = (&ds.positions.unwrap()[5], &back.positions.unwrap()[5]);
    // A quarter turn about (1, 2): (x, y) -> (1 - (y - 2), 2 + (x - 1)).
    assert!((q[0] - (3.0 - p[1])).abs() < 1e-9);
    assert!((q[1] - (1.0 + p[0])).abs() < 1e-9);
    assert_eq!(q[2], p[2]);
}

#[test]
fn ingest_with_wrong_subcarrier_count_is_a_dimension_error() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = pipeline::simulate(&small()).unwrap();
    let descriptor = io::export_external(tmp.path(), &ds, 0.8, 0).unwrap();
    edit_json(&descriptor, |v| v["subcarriers"] = (ds.cols + 1).into());
    let err = io::ingest_external(&descriptor).unwrap_err();
    assert!(matches!(err, Error::Core(geochart_core::Error::Shape { .. })), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn label_variants_refuse_data_without_positions() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small();
    let ds = pipeline::simulate(&cfg).unwrap();
    let descriptor = io::export_external(tmp.path(), &CsiDataset { positions: None, ..ds }, 0.8, 0).unwrap();
    let ds = io::ingest_external(&descriptor).unwrap();
    let fs_ = FeatureSet::build(&ds, &cfg.features).unwrap();
    for v in [Variant::B3, Variant::B4] {
        let err = pipeline::run_variant(&cfg, v, 1, &fs_, &ds).unwrap_err();
        assert!(matches!(err, Error::Core(geochart_core::Error::MissingPositions)), "{v}: {err}");
    }
}

#[test]
fn chart_csv_reimports_to_the_same_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small();
    let ds = pipeline::simulate(&cfg).unwrap();
    let fs_ = FeatureSet::build(&ds, &cfg.features).unwrap();
    let run = pipeline::run_variant(&cfg, Variant::P2, 1, &fs_, &ds).unwrap();
    let path = tmp.path().join("chart.csv");
    io::export_chart(&path, &run.test_indices, &run.points).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), ds.test_indices().len() + 1);
    let (idx, pts) = io::read_chart(&path).unwrap();
    assert_eq!(idx, run.test_indices);
    let m = pipeline::evaluate_points(&ds, &idx, &pts, 1, Variant::P2, &MetricsConfig::default()).unwrap();
    let r = &run.metrics;
    for (a, b) in [(m.tw, r.tw), (m.ct, r.ct), (m.ks, r.ks), (m.rd, r.rd), (m.mde.unwrap(), r.mde.unwrap())] {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn power_trace_has_one_column_per_ap_plus_time() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small();
    let ds = pipeline::simulate(&cfg).unwrap();
    let fs_ = FeatureSet::build(&ds, &cfg.features).unwrap();
    let path = tmp.path().join("trace.csv");
    io::export_power_trace(&path, &fs_, &(0..fs_.ap_count).collect::<Vec<_>>()).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,ap0,ap1,ap2,ap3,ap4,ap5");
    assert_eq!(lines.clone().count(), ds.len());
    assert!(lines.all(|l| l.split(',').count() == ds.ap_count + 1));
}

#[test]
fn sig9_rounds_to_nine_significant_digits() {
    assert_eq!(io::sig9(1.0), "1");
    assert_eq!(io::sig9(0.1 + 0.2), "0.3");
    assert_eq!(io::sig9(123456789.4), "123456789");
    assert_eq!(io::sig9(-1.234567891e-7), "-0.000000123456789");
    assert_eq!(io::sig9(f64::NEG_INFINITY), "-inf");
}

#[test]
fn config_toml_round_trips() {
    for name in presets::PRESETS {
        let cfg = presets::preset(name).unwrap();
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.config_hash(), cfg.config_hash());
    }
    assert!(presets::outdoor_lite().to_toml().contains("-inf"));
}

#[test]
fn config_rejects_unknown_keys() {
    let mut text = presets::indoor_lite().to_toml();
    text.push_str("\n[extra]\nvalue = 1\n");
    assert!(ExperimentConfig::from_toml(&text).is_err());
}

#[test]
fn config_hash_tracks_contents() {
    let a = presets::indoor_lite();
    let mut b = a.clone();
    b.train.epochs += 1;
    assert_ne!(a.config_hash(), b.config_hash());
    // Training settings do not change the dataset.
    assert_eq!(a.dataset_hash(), b.dataset_hash());
    b.scenario.seed += 1;
    assert_ne!(a.dataset_hash(), b.dataset_hash());
}

#[test]
fn annotated_example_config_matches_the_preset() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/indoor-lite.toml");
    let cfg = ExperimentConfig::load(&path).unwrap();
    assert_eq!(cfg, presets::indoor_lite());
    assert_eq!(cfg.config_hash(), presets::indoor_lite().config_hash());
}
