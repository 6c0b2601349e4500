use std::f64::consts::PI;

use geochart_core::features::truncate_dataset;
use geochart_core::sim::{
    add_noise, los_visible, split_train_test, synthesize_csi, ApConfig, ChannelModel, ChannelParams, CsiDataset, Meander,
    Rect, ScenarioConfig, Split, TrajectorySpec, Wall, SPEED_OF_LIGHT,
};
use geochart_core::Error;
use num_complex::Complex64;

fn ap(x: f64, y: f64, area: Rect) -> ApConfig {
    ApConfig { position: [x, y, 3.0], antenna_count: 4, los_box: area, array_orientation: [1.0, 0.0] }
}

fn scenario(seed: u64) -> ScenarioConfig {
    let area = Rect::new(0.0, 20.0, 0.0, 20.0).unwrap();
    ScenarioConfig {
        aps: vec![ap(-2.0, -2.0, area), ap(22.0, 10.0, area), ap(10.0, 23.0, area)],
        subcarrier_count: 32,
        carrier_hz: 2.4e9,
        bandwidth_hz: 20e6,
        ue_height_m: 1.5,
        trajectory: TrajectorySpec { area, step_m: 1.0, pattern: Meander::NorthSouth, sample_period_s: 0.1 },
        walls: Vec::new(),
        max_snr_db: 25.0,
        seed,
        channel: ChannelParams::default(),
    }
}

fn frobenius2(h: &[Complex64]) -> f64 {
    h.iter().map(|z| z.norm_sqr()).sum()
}

#[test]
fn single_ray_is_a_linear_phase_ramp() {
    let mut cfg = scenario(1);
    cfg.channel.scatterers_per_ap = 0;
    let model = ChannelModel::new(&cfg).unwrap();
    let ue = [7.0, 4.0, 1.5];
    let w = cfg.subcarrier_count;
    let mut h = vec![Complex64::new(0.0, 0.0); 4 * w];
    assert!(model.ap_block(0, &ue, &mut h).unwrap());
    let p = cfg.aps[0].position;
    let d = ((p[0] - ue[0]).powi(2) + (p[1] - ue[1]).powi(2) + (p[2] - ue[2]).powi(2)).sqrt();
    let tau = d / SPEED_OF_LIGHT;
    let expected_step = -2.0 * PI * tau * cfg.subcarrier_spacing_hz();
    for row in h.chunks_exact(w) {
        for z in row {
            assert!((z.norm() - 1.0 / d).abs() < 1e-12 / d);
        }
        for pair in row.windows(2) {
            let step = (pair[1] / pair[0]).arg();
            let diff = (step - expected_step).rem_euclid(2.0 * PI);
            assert!(diff < 1e-9 || 2.0 * PI - diff < 1e-9, "step {step} expected {expected_step}");
        }
    }
}

#[test]
fn los_amplitude_follows_inverse_distance() {
    let mut cfg = scenario(1);
    cfg.channel.scatterers_per_ap = 0;
    let model = ChannelModel::new(&cfg).unwrap();
    let p = cfg.aps[0].position;
    let dir = [0.6, 0.8, -0.1];
    let at = |s: f64| [p[0] + s * dir[0], p[1] + s * dir[1], p[2] + s * dir[2]];
    let mut h1 = vec![Complex64::new(0.0, 0.0); 4 * 32];
    let mut h2 = h1.clone();
    model.ap_block(0, &at(5.0), &mut h1).unwrap();
    model.ap_block(0, &at(10.0), &mut h2).unwrap();
    let ratio = (frobenius2(&h2) / frobenius2(&h1)).sqrt();
    assert!((ratio - 0.5).abs() < 1e-12);
}

#[test]
fn blocked_link_is_at_least_15_db_weaker() {
    for seed in 0..20 {
        let mut cfg = scenario(seed);
        // Wall crossing the AP-0 line of sight towards (10, 2) but not (2, 10).
        cfg.walls = vec![Wall { start: [5.0, -5.0], end: [5.0, 1.0] }];
        let model = ChannelModel::new(&cfg).unwrap();
        let los_ue = [-2.0 + 4.0, -2.0 + 12.0, 1.5];
        let nlos_ue = [-2.0 + 12.0, -2.0 + 4.0, 1.5];
        let mut hl = vec![Complex64::new(0.0, 0.0); 4 * 32];
        let mut hn = hl.clone();
        assert!(model.ap_block(0, &los_ue, &mut hl).unwrap());
        assert!(!model.ap_block(0, &nlos_ue, &mut hn).unwrap());
        let gap_db = 10.0 * (frobenius2(&hl) / frobenius2(&hn)).log10();
        assert!(gap_db >= 15.0, "seed {seed}: gap {gap_db} dB");
    }
}

#[test]
fn coincident_ue_and_ap_is_singular() {
    let cfg = scenario(1);
    let model = ChannelModel::new(&cfg).unwrap();
    let mut h = vec![Complex64::new(0.0, 0.0); 4 * 32];
    assert!(matches!(model.ap_block(0, &cfg.aps[0].position, &mut h), Err(Error::SingularGeometry)));
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    for (k, &i) in idx.iter().enumerate() {
        r[i] = k as f64;
    }
    r
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn receive_power_decreases_with_distance() {
    let cfg = scenario(5);
    let ds = synthesize_csi(&cfg).unwrap();
    let pos = ds.positions.as_ref().unwrap();
    for (a, apc) in cfg.aps.iter().enumerate() {
        let mut dist = Vec::new();
        let mut power = Vec::new();
        for n in 0..ds.len() {
            if ds.los_flag(n, a) != Some(true) {
                continue;
            }
            let p = pos[n];
            let q = apc.position;
            dist.push(((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt());
            power.push(ds.ap_block(n, a).iter().map(|z| z.norm_sqr() as f64).sum::<f64>());
        }
        let rho = spearman(&dist, &power);
        assert!(rho <= -0.9, "AP {a}: Spearman {rho}");
    }
}

#[test]
fn muting_an_ap_zeroes_exactly_its_rows() {
    let cfg = scenario(2);
    let full = ChannelModel::new(&cfg).unwrap();
    let mut muted = full.clone();
    muted.mute_ap(1);
    let ue = [3.0, 8.0, 1.5];
    let (a, _) = full.sample(&ue).unwrap();
    let (b, _) = muted.sample(&ue).unwrap();
    let block = 4 * 32;
    for (k, (x, y)) in a.iter().zip(&b).enumerate() {
        if k / block == 1 {
            assert_eq!(*y, Complex64::new(0.0, 0.0));
            assert_ne!(*x, Complex64::new(0.0, 0.0));
        } else {
            assert_eq!(x, y);
        }
    }
}

#[test]
fn synthesis_is_deterministic() {
    let a = synthesize_csi(&scenario(9)).unwrap();
    let b = synthesize_csi(&scenario(9)).unwrap();
    assert_eq!(a, b);
    let c = synthesize_csi(&scenario(10)).unwrap();
    assert_ne!(a.csi, c.csi);
    assert_eq!(a.len(), 21 * 21);
    assert!(a.timestamps.iter().enumerate().all(|(n, t)| *t == 0.1 * n as f64));
    let area = scenario(9).trajectory.area;
    assert!(a.positions.unwrap().iter().all(|p| area.contains(&[p[0], p[1]]) && p[2] == 1.5));
}

#[test]
fn walls_make_los_flags() {
    let mut cfg = scenario(3);
    cfg.walls = vec![Wall { start: [10.0, -5.0], end: [10.0, 25.0] }];
    let ds = synthesize_csi(&cfg).unwrap();
    let pos = ds.positions.as_ref().unwrap();
    for n in 0..ds.len() {
        for (a, apc) in cfg.aps.iter().enumerate() {
            assert_eq!(ds.los_flag(n, a), Some(los_visible(apc, &pos[n], &cfg.walls)));
        }
    }
    // AP 0 sits west of the wall: everything east of it is blocked.
    assert!((0..ds.len()).any(|n| ds.los_flag(n, 0) == Some(false)));
}

fn small_dataset() -> CsiDataset {
    let mut cfg = scenario(4);
    cfg.trajectory.area = Rect::new(0.0, 4.0, 0.0, 2.0).unwrap();
    synthesize_csi(&cfg).unwrap()
}

#[test]
fn infinite_snr_only_truncates() {
    let ds = small_dataset();
    let out = add_noise(&ds, f64::INFINITY, 8, 1).unwrap();
    assert_eq!(out, truncate_dataset(&ds, 8).unwrap());
}

#[test]
fn strongest_sample_snr_matches_target() {
    let ds = small_dataset();
    let clean = truncate_dataset(&ds, 8).unwrap();
    let block = clean.antennas_per_ap * clean.cols;
    let draws = 10_000;
    for a in 0..clean.ap_count {
        let energy = |n: usize| clean.ap_block(n, a).iter().map(|z| z.norm_sqr() as f64).sum::<f64>();
        let strongest = (0..clean.len()).max_by(|&x, &y| energy(x).total_cmp(&energy(y))).unwrap();
        let signal = energy(strongest);
        let mut noise = 0.0;
        for seed in 0..draws {
            let noisy = add_noise(&ds, 25.0, 8, seed).unwrap();
            noise += noisy
                .ap_block(strongest, a)
                .iter()
                .zip(clean.ap_block(strongest, a))
                .map(|(x, y)| ((x.re - y.re) as f64).powi(2) + ((x.im - y.im) as f64).powi(2))
                .sum::<f64>();
        }
        let snr_db = 10.0 * (signal / (noise / draws as f64)).log10();
        assert!((snr_db - 25.0).abs() <= 0.5, "AP {a}: {snr_db} dB");
        let _ = block;
    }
}

#[test]
fn all_zero_ap_is_flagged() {
    let mut ds = small_dataset();
    let block = ds.antennas_per_ap * ds.cols;
    for n in 0..ds.len() {
        ds.sample_mut(n)[block..2 * block].iter_mut().for_each(|z| *z = Default::default());
    }
    assert!(matches!(add_noise(&ds, 25.0, 8, 0), Err(Error::ZeroChannel)));
}

#[test]
fn split_counts_and_determinism() {
    let mut cfg = scenario(4);
    cfg.trajectory.area = Rect::new(0.0, 4.0, 0.0, 1.0).unwrap();
    let ds = synthesize_csi(&cfg).unwrap();
    assert_eq!(ds.len(), 10);
    let s = split_train_test(&ds, 0.8, 3).unwrap();
    assert_eq!(s.train_indices().len(), 8);
    assert_eq!(s.test_indices().len(), 2);
    assert_eq!(s, split_train_test(&ds, 0.8, 3).unwrap());
    let all = split_train_test(&ds, 1.0, 3).unwrap();
    assert!(all.split.iter().all(|s| *s == Split::Train));
    let big = split_train_test(&small_dataset(), 0.8, 1).unwrap();
    assert_eq!(big.train_indices().len(), (0.8 * big.len() as f64).floor() as usize);
    assert!(split_train_test(&ds, 1.5, 3).is_err());
}
