//! Built-in desk-scale scenarios.

use geochart_core::features::FeatureParams;
use geochart_core::losses::BoxPolicy;
use geochart_core::metrics::MetricsConfig;
use geochart_core::net::AdamConfig;
use geochart_core::sim::{ApConfig, ChannelParams, Meander, Rect, ScenarioConfig, TrajectorySpec, Wall};

use crate::config::{ExperimentConfig, LossSection, SplitConfig, TrainSection};

pub const PRESETS: [&str; 2] = ["indoor-lite", "outdoor-lite"];

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    match name {
        "indoor-lite" => Some(indoor_lite()),
        "outdoor-lite" => Some(outdoor_lite()),
        _ => None,
    }
}

fn rect(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Rect {
    Rect { x_min, x_max, y_min, y_max }
}

fn ap(x: f64, y: f64, z: f64, los_box: Rect) -> ApConfig {
    ApConfig { position: [x, y, z], antenna_count: 4, los_box, array_orientation: [1.0, 0.0] }
}

fn wall(x0: f64, y0: f64, x1: f64, y1: f64) -> Wall {
    Wall { start: [x0, y0], end: [x1, y1] }
}

/// 12 m x 18 m floor: four closed rooms on either side of a 2 m hallway.
/// The APs are wall-mounted: two on the walls between rooms, each seeing both
/// rooms on its side, and four on the hallway walls, each seeing one room and
/// the hallway. Every position is in LoS of at least two APs.
pub fn indoor_lite() -> ExperimentConfig {
    let west = rect(0.0, 5.0, 0.0, 18.0);
    let east = rect(7.0, 12.0, 0.0, 18.0);
    let west_hall = rect(0.0, 7.0, 0.0, 18.0);
    let east_hall = rect(5.0, 12.0, 0.0, 18.0);
    let scenario = ScenarioConfig {
        aps: vec![
            ap(2.5, 9.0, 2.5, west),
            ap(9.5, 9.0, 2.5, east),
            ap(5.0, 4.5, 2.5, west_hall),
            ap(5.0, 13.5, 2.5, west_hall),
            ap(7.0, 4.5, 2.5, east_hall),
            ap(7.0, 13.5, 2.5, east_hall),
        ],
        subcarrier_count: 52,
        carrier_hz: 2.4e9,
        bandwidth_hz: 20e6,
        ue_height_m: 1.0,
        trajectory: TrajectorySpec {
            area: rect(0.0, 12.0, 0.0, 18.0),
            step_m: 0.27,
            pattern: Meander::NorthSouth,
            sample_period_s: 0.1,
        },
        walls: vec![
            wall(5.0, 0.0, 5.0, 18.0),
            wall(7.0, 0.0, 7.0, 18.0),
            wall(0.0, 9.0, 5.0, 9.0),
            wall(7.0, 9.0, 12.0, 9.0),
        ],
        max_snr_db: 25.0,
        seed: 1,
        channel: ChannelParams::default(),
    };
    ExperimentConfig {
        name: "indoor-lite".into(),
        scenario,
        split: SplitConfig::default(),
        features: FeatureParams { taps: 8, p_thr_db: -1.0, m_p_db: 3.0 },
        loss: LossSection {
            coherence_time_s: 0.5,
            triplet_margin: 2.0,
            bilateration_margin: 1.0,
            box_policy: BoxPolicy::StrongestAp,
            weights: geochart_core::losses::LossWeights::new(1.0, 1.0, 1.0, 1.0),
        },
        train: TrainSection {
            epochs: 40,
            batch_size: 64,
            adam: AdamConfig { learning_rate: 2e-3, ..AdamConfig::default() },
            affine_labels: 10,
            semi_labels: 100,
            seeds: vec![1, 2, 3],
        },
        metrics: MetricsConfig::default(),
    }
}

/// 30 m x 45 m open square with six APs on the perimeter, all in LoS.
pub fn outdoor_lite() -> ExperimentConfig {
    let area = rect(0.0, 30.0, 0.0, 45.0);
    let scenario = ScenarioConfig {
        aps: vec![
            ap(-2.0, 0.0, 6.0, area),
            ap(-2.0, 45.0, 6.0, area),
            ap(32.0, 0.0, 6.0, area),
            ap(32.0, 45.0, 6.0, area),
            ap(15.0, -3.0, 6.0, area),
            ap(15.0, 48.0, 6.0, area),
        ],
        subcarrier_count: 64,
        carrier_hz: 1.9e9,
        bandwidth_hz: 20e6,
        ue_height_m: 1.5,
        trajectory: TrajectorySpec { area, step_m: 0.75, pattern: Meander::NorthSouth, sample_period_s: 0.1 },
        walls: Vec::new(),
        max_snr_db: 25.0,
        seed: 1,
        channel: ChannelParams::default(),
    };
    ExperimentConfig {
        name: "outdoor-lite".into(),
        scenario,
        split: SplitConfig::default(),
        features: FeatureParams { taps: 8, p_thr_db: f64::NEG_INFINITY, m_p_db: 3.0 },
        loss: LossSection {
            coherence_time_s: 2.0,
            triplet_margin: 10.0,
            bilateration_margin: 10.0,
            box_policy: BoxPolicy::StrongestAp,
            weights: geochart_core::losses::LossWeights::new(1.0, 1.0, 1.0, 1.0),
        },
        train: TrainSection {
            epochs: 20,
            batch_size: 64,
            adam: AdamConfig { learning_rate: 2e-3, ..AdamConfig::default() },
            affine_labels: 10,
            semi_labels: 100,
            seeds: vec![1, 2, 3],
        },
        metrics: MetricsConfig::default(),
    }
}
