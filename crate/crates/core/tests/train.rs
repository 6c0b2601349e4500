use geochart_core::features::{FeatureParams, FeatureSet};
use geochart_core::losses::{BoxPolicy, LossConfig};
use geochart_core::net::AdamConfig;
use geochart_core::sim::{
    add_noise, split_train_test, synthesize_csi, ApConfig, ChannelParams, CsiDataset, Meander, Rect, ScenarioConfig, TrajectorySpec,
};
use geochart_core::train::{train_variant, RunConfig, SiteGeometry, TrainConfig, Variant};

/// 200 samples on a 20 x 10 m grid with four APs at the corners.
fn toy() -> (CsiDataset, FeatureSet, SiteGeometry) {
    let area = Rect::new(0.0, 19.0, 0.0, 9.0).unwrap();
    let ap = |x: f64, y: f64| ApConfig { position: [x, y, 3.0], antenna_count: 2, los_box: area, array_orientation: [1.0, 0.0] };
    let cfg = ScenarioConfig {
        aps: vec![ap(-1.0, -1.0), ap(20.0, -1.0), ap(20.0, 10.0), ap(-1.0, 10.0)],
        subcarrier_count: 32,
        carrier_hz: 2.4e9,
        bandwidth_hz: 20e6,
        ue_height_m: 1.5,
        trajectory: TrajectorySpec { area, step_m: 1.0, pattern: Meander::NorthSouth, sample_period_s: 0.1 },
        walls: Vec::new(),
        max_snr_db: 25.0,
        seed: 11,
        channel: ChannelParams::default(),
    };
    let ds = synthesize_csi(&cfg).unwrap();
    assert_eq!(ds.len(), 200);
    let ds = add_noise(&ds, cfg.max_snr_db, 8, 11).unwrap();
    let ds = split_train_test(&ds, 0.8, 11).unwrap();
    let fs = FeatureSet::build(&ds, &FeatureParams { taps: 8, p_thr_db: f64::NEG_INFINITY, m_p_db: 3.0 }).unwrap();
    let site = SiteGeometry { ap_xy: cfg.ap_xy(), boxes: cfg.los_boxes() };
    (ds, fs, site)
}

fn run(variant: Variant, epochs: usize, batch: usize, lr: f64) -> RunConfig {
    RunConfig {
        variant,
        loss: LossConfig {
            coherence_time_s: 1.0,
            triplet_margin: 1.0,
            bilateration_margin: 1.0,
            weights: variant.default_weights(),
            box_policy: BoxPolicy::StrongestAp,
        },
        label_count: 20,
        train: TrainConfig { epochs, batch_size: batch, adam: AdamConfig { learning_rate: lr, ..AdamConfig::default() } },
        seed: 5,
    }
}

#[test]
fn b4_training_mse_decreases_over_first_epochs() {
    let (ds, fs, site) = toy();
    let chart = train_variant(&run(Variant::B4, 10, 256, 1e-3), &fs, &ds, &site).unwrap();
    assert_eq!(chart.log.columns, ["mse"]);
    let mse: Vec<f64> = chart.log.epochs.iter().map(|e| e.components[0]).collect();
    assert_eq!(mse.len(), 10);
    for w in mse.windows(2) {
        assert!(w[1] < w[0], "{mse:?}");
    }
}

#[test]
fn log_columns_follow_the_variant() {
    let (ds, fs, site) = toy();
    let expect: [(Variant, &[&str]); 6] = [
        (Variant::P1, &["bilateration", "bbox"]),
        (Variant::P2, &["triplet", "bilateration", "bbox"]),
        (Variant::B1, &["triplet"]),
        (Variant::B2, &["triplet"]),
        (Variant::B3, &["triplet", "mse"]),
        (Variant::B4, &["mse"]),
    ];
    for (v, cols) in expect {
        let chart = train_variant(&run(v, 2, 64, 1e-3), &fs, &ds, &site).unwrap();
        assert_eq!(chart.log.columns, cols, "{v}");
        assert!(chart.log.epochs.iter().all(|e| e.components.len() == cols.len()));
        assert_eq!(chart.affine.is_some(), v == Variant::B2);
    }
}

#[test]
fn test_split_is_never_touched() {
    let (ds, fs, site) = toy();
    let test = ds.test_indices();
    assert_eq!(test.len(), 40);
    for v in Variant::ALL {
        let chart = train_variant(&run(v, 3, 64, 1e-3), &fs, &ds, &site).unwrap();
        let touched: Vec<usize> = chart.audit.touched().collect();
        assert!(!touched.is_empty());
        assert!(touched.iter().all(|i| !test.contains(i)), "{v} touched a test index");
        assert!(chart.labels.iter().all(|i| !test.contains(i)));
    }
}

#[test]
fn training_is_deterministic_per_seed() {
    let (ds, fs, site) = toy();
    let cfg = run(Variant::P2, 3, 64, 1e-3);
    let a = train_variant(&cfg, &fs, &ds, &site).unwrap();
    let b = train_variant(&cfg, &fs, &ds, &site).unwrap();
    assert_eq!(a.model.params(), b.model.params());
    assert_eq!(a.log, b.log);
    let other = train_variant(&RunConfig { seed: 6, ..cfg }, &fs, &ds, &site).unwrap();
    assert_ne!(a.model.params(), other.model.params());
}

#[test]
fn inconsistent_weights_are_rejected() {
    let (ds, fs, site) = toy();
    let mut cfg = run(Variant::B1, 1, 64, 1e-3);
    cfg.loss.weights.bbox = 1.0;
    assert!(train_variant(&cfg, &fs, &ds, &site).is_err());
    let mut cfg = run(Variant::B3, 1, 64, 1e-3);
    cfg.label_count = 0;
    assert!(train_variant(&cfg, &fs, &ds, &site).is_err());
    let mut cfg = run(Variant::B3, 1, 64, 1e-3);
    cfg.label_count = 1000;
    assert!(train_variant(&cfg, &fs, &ds, &site).is_err());
}
