//! Delay-domain CSI features, per-AP receive powers, LoS-AP sets and AP pairs.
//!
//! The inverse DFT is unitary (`1/sqrt(W)` scaling), so Parseval holds and
//! receive powers are quoted in that convention.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::{Complex32, Complex64};
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::math::{dist2, log10, sin_cos, sqrt};
use crate::sim::{CsiDataset, Domain};
use crate::{horizontal, Point3};

/// Feature extraction and LoS classification parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FeatureParams {
    /// Number of leading delay taps kept (`C`).
    pub taps: usize,
    /// Power threshold in dB above which an AP is considered LoS; may be `-inf`.
    pub p_thr_db: f64,
    /// Minimum power gap in dB between the two APs of a pair.
    pub m_p_db: f64,
}

impl Default for FeatureParams {
    fn default() -> Self {
        FeatureParams { taps: 8, p_thr_db: f64::NEG_INFINITY, m_p_db: 3.0 }
    }
}

/// Precomputed leading columns of the unitary inverse DFT.
#[derive(Debug, Clone)]
pub struct DelayTransform {
    cols: usize,
    taps: usize,
    // twiddles[c * cols + w] = exp(j 2 pi w c / W) / sqrt(W)
    twiddles: Vec<Complex64>,
}

impl DelayTransform {
    pub fn new(cols: usize, taps: usize) -> Result<Self> {
        if taps == 0 || taps > cols {
            return Err(invalid("delay taps must satisfy 1 <= C <= W"));
        }
        let scale = 1.0 / sqrt(cols as f64);
        let mut twiddles = Vec::with_capacity(taps * cols);
        for c in 0..taps {
            for w in 0..cols {
                let k = (w * c) % cols;
                let (s, co) = sin_cos(2.0 * PI * k as f64 / cols as f64);
                twiddles.push(Complex64::new(co * scale, s * scale));
            }
        }
        Ok(DelayTransform { cols, taps, twiddles })
    }

    pub fn taps(&self) -> usize {
        self.taps
    }

    /// Transforms one subcarrier row into its first `C` delay taps.
    pub fn row(&self, row: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(row.len(), self.cols);
        for (c, o) in out.iter_mut().enumerate().take(self.taps) {
            let tw = &self.twiddles[c * self.cols..(c + 1) * self.cols];
            let mut acc = Complex64::new(0.0, 0.0);
            for (h, t) in row.iter().zip(tw) {
                acc += h * t;
            }
            *o = acc;
        }
    }

    /// Transforms a row-major `rows x W` matrix into `rows x C`.
    pub fn matrix(&self, h: &[Complex64]) -> Vec<Complex64> {
        let rows = h.len() / self.cols;
        let mut out = vec![Complex64::new(0.0, 0.0); rows * self.taps];
        for (r, o) in h.chunks_exact(self.cols).zip(out.chunks_exact_mut(self.taps)) {
            self.row(r, o);
        }
        out
    }
}

/// Inverse DFT along subcarriers of a row-major `rows x W` matrix, keeping
/// the first `taps` columns.
pub fn delay_truncate(h: &[Complex64], cols: usize, taps: usize) -> Result<Vec<Complex64>> {
    if cols == 0 || !h.len().is_multiple_of(cols) {
        return Err(Error::Shape { what: "CSI matrix", expected: cols, found: h.len() });
    }
    Ok(DelayTransform::new(cols, taps)?.matrix(h))
}

/// Delay-domain copy of `ds` with `taps` columns.
pub fn truncate_dataset(ds: &CsiDataset, taps: usize) -> Result<CsiDataset> {
    if taps == 0 || taps > ds.cols {
        return Err(invalid("delay taps must satisfy 1 <= C <= W"));
    }
    let rows = ds.rows();
    let mut csi = Vec::with_capacity(ds.len() * rows * taps);
    match ds.domain {
        Domain::Frequency => {
            let tf = DelayTransform::new(ds.cols, taps)?;
            let mut buf = Vec::with_capacity(rows * ds.cols);
            for n in 0..ds.len() {
                buf.clear();
                buf.extend(ds.sample(n).iter().map(widen));
                csi.extend(tf.matrix(&buf).iter().map(|z| Complex32::new(z.re as f32, z.im as f32)));
            }
        }
        Domain::Delay => {
            for n in 0..ds.len() {
                for row in ds.sample(n).chunks_exact(ds.cols) {
                    csi.extend_from_slice(&row[..taps]);
                }
            }
        }
    }
    Ok(CsiDataset { cols: taps, domain: Domain::Delay, csi, ..ds.clone_without_csi() })
}

impl CsiDataset {
    fn clone_without_csi(&self) -> CsiDataset {
        CsiDataset {
            ap_count: self.ap_count,
            antennas_per_ap: self.antennas_per_ap,
            cols: self.cols,
            domain: self.domain,
            csi: Vec::new(),
            timestamps: self.timestamps.clone(),
            positions: self.positions.clone(),
            los: self.los.clone(),
            split: self.split.clone(),
        }
    }
}

#[inline]
pub(crate) fn widen(z: &Complex32) -> Complex64 {
    Complex64::new(z.re as f64, z.im as f64)
}

/// Unit-norm magnitude feature of a truncated `B x C` matrix.
///
/// The matrix is vectorized column by column, so entry `c * B + b` holds tap
/// `c` of antenna `b`.
pub fn extract_feature(h_trunc: &[Complex64], taps: usize) -> Result<Vec<f64>> {
    if taps == 0 || !h_trunc.len().is_multiple_of(taps) {
        return Err(Error::Shape { what: "truncated CSI", expected: taps, found: h_trunc.len() });
    }
    let rows = h_trunc.len() / taps;
    let mut f = vec![0.0; h_trunc.len()];
    let mut energy = 0.0;
    for r in 0..rows {
        for c in 0..taps {
            let z = h_trunc[r * taps + c];
            let e = z.re * z.re + z.im * z.im;
            energy += e;
            f[c * rows + r] = sqrt(e);
        }
    }
    if energy == 0.0 {
        return Err(Error::ZeroChannel);
    }
    let norm = sqrt(energy);
    for v in &mut f {
        *v /= norm;
    }
    Ok(f)
}

/// `20 log10 ||H||_F` of one AP block; `-inf` for the zero matrix.
pub fn receive_power(block: &[Complex64]) -> f64 {
    let e: f64 = block.iter().map(|z| z.re * z.re + z.im * z.im).sum();
    20.0 * log10(sqrt(e))
}

/// APs whose power strictly exceeds the threshold.
pub fn los_ap_set(powers: &[f64], p_thr_db: f64) -> Vec<usize> {
    powers.iter().enumerate().filter(|(_, p)| **p > p_thr_db).map(|(a, _)| a).collect()
}

/// Ordered pairs `(close, far)` of LoS APs whose power gap exceeds `m_p_db`.
pub fn ap_pairs(powers: &[f64], los_set: &[usize], m_p_db: f64) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for &c in los_set {
        for &f in los_set {
            if powers[c] > powers[f] + m_p_db {
                pairs.push((c, f));
            }
        }
    }
    pairs
}

/// Fraction of AP pairs whose "close" AP is geometrically farther (in the
/// horizontal plane) than the "far" AP. NaN when there are no pairs.
pub fn false_pair_ratio(pairs: &[Vec<(usize, usize)>], positions: &[Point3], ap_positions: &[Point3]) -> f64 {
    let mut total = 0usize;
    let mut wrong = 0usize;
    for (p, x) in pairs.iter().zip(positions) {
        let x = horizontal(x);
        for &(c, f) in p {
            total += 1;
            let dc = dist2(&x, &horizontal(&ap_positions[c]));
            let df = dist2(&x, &horizontal(&ap_positions[f]));
            if dc > df {
                wrong += 1;
            }
        }
    }
    if total == 0 {
        f64::NAN
    } else {
        wrong as f64 / total as f64
    }
}

/// Mean number of AP pairs per sample.
pub fn mean_pair_count(pairs: &[Vec<(usize, usize)>]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    pairs.iter().map(Vec::len).sum::<usize>() as f64 / pairs.len() as f64
}

/// Features, powers and LoS structure of a whole dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub params: FeatureParams,
    pub ap_count: usize,
    /// Feature dimension `D' = B * C`.
    pub dim: usize,
    /// Row-major `N x D'`.
    pub features: Vec<f64>,
    /// Row-major `N x A`, in dB.
    pub powers: Vec<f64>,
    pub los_sets: Vec<Vec<usize>>,
    pub ap_pairs: Vec<Vec<(usize, usize)>>,
    pub timestamps: Vec<f64>,
}

impl FeatureSet {
    pub fn build(ds: &CsiDataset, params: &FeatureParams) -> Result<Self> {
        let taps = params.taps;
        if taps == 0 || taps > ds.cols {
            return Err(invalid("delay taps must satisfy 1 <= C <= W"));
        }
        let rows = ds.rows();
        let m_r = ds.antennas_per_ap;
        let dim = rows * taps;
        let tf = match ds.domain {
            Domain::Frequency => Some(DelayTransform::new(ds.cols, taps)?),
            Domain::Delay => None,
        };
        let mut features = Vec::with_capacity(ds.len() * dim);
        let mut powers = Vec::with_capacity(ds.len() * ds.ap_count);
        let mut buf: Vec<Complex64> = Vec::with_capacity(rows * ds.cols);
        let mut zero_rows = 0usize;
        for n in 0..ds.len() {
            let trunc = match &tf {
                Some(tf) => {
                    buf.clear();
                    buf.extend(ds.sample(n).iter().map(widen));
                    tf.matrix(&buf)
                }
                None => ds.sample(n).chunks_exact(ds.cols).flat_map(|r| r[..taps].iter().map(widen)).collect(),
            };
            for block in trunc.chunks_exact(m_r * taps) {
                powers.push(receive_power(block));
            }
            match extract_feature(&trunc, taps) {
                Ok(f) => features.extend(f),
                Err(Error::ZeroChannel) => {
                    zero_rows += 1;
                    features.extend(core::iter::repeat_n(0.0, dim));
                }
                Err(e) => return Err(e),
            }
        }
        if zero_rows > 0 {
            log::warn!("{zero_rows} samples have an all-zero channel; their features are zero");
        }
        Self::from_parts(*params, ds.ap_count, dim, features, powers, ds.timestamps.clone())
    }

    /// Assembles a feature set from stored arrays, deriving LoS sets and pairs.
    pub fn from_parts(
        params: FeatureParams,
        ap_count: usize,
        dim: usize,
        features: Vec<f64>,
        powers: Vec<f64>,
        timestamps: Vec<f64>,
    ) -> Result<Self> {
        let n = timestamps.len();
        if features.len() != n * dim {
            return Err(Error::Shape { what: "features", expected: n * dim, found: features.len() });
        }
        if powers.len() != n * ap_count {
            return Err(Error::Shape { what: "powers", expected: n * ap_count, found: powers.len() });
        }
        let mut set = FeatureSet {
            params,
            ap_count,
            dim,
            features,
            powers,
            los_sets: Vec::new(),
            ap_pairs: Vec::new(),
            timestamps,
        };
        set.reclassify(params.p_thr_db, params.m_p_db);
        Ok(set)
    }

    /// Recomputes LoS sets and AP pairs for new thresholds.
    pub fn reclassify(&mut self, p_thr_db: f64, m_p_db: f64) {
        self.params.p_thr_db = p_thr_db;
        self.params.m_p_db = m_p_db;
        let a = self.ap_count;
        self.los_sets = self.powers.chunks_exact(a).map(|p| los_ap_set(p, p_thr_db)).collect();
        self.ap_pairs = self
            .powers
            .chunks_exact(a)
            .zip(&self.los_sets)
            .map(|(p, s)| ap_pairs(p, s, m_p_db))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn feature(&self, n: usize) -> &[f64] {
        &self.features[n * self.dim..(n + 1) * self.dim]
    }

    pub fn power_row(&self, n: usize) -> &[f64] {
        &self.powers[n * self.ap_count..(n + 1) * self.ap_count]
    }

    /// The AP with the largest power among the LoS set of sample `n`.
    pub fn strongest_los_ap(&self, n: usize) -> Option<usize> {
        let p = self.power_row(n);
        self.los_sets[n].iter().copied().fold(None, |best: Option<usize>, a| match best {
            Some(b) if p[b] >= p[a] => Some(b),
            _ => Some(a),
        })
    }

    /// Gathers the feature rows `idx` into a row-major matrix.
    pub fn gather(&self, idx: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            out.extend_from_slice(self.feature(i));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, len: usize) -> Vec<Complex64> {
        (0..len).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()
    }

    #[test]
    fn constant_row_lands_in_tap_zero() {
        let h = vec![Complex64::new(1.0, 0.5); 16];
        let t = delay_truncate(&h, 16, 4).unwrap();
        assert!((t[0] - Complex64::new(4.0, 2.0)).norm() < 1e-12);
        for z in &t[1..] {
            assert!(z.norm() < 1e-12);
        }
    }

    #[test]
    fn shifted_phase_lands_in_tap_k() {
        let w = 32;
        for k in 0..6 {
            let h: Vec<Complex64> = (0..w)
                .map(|i| {
                    let (s, c) = sin_cos(-2.0 * PI * (k * i) as f64 / w as f64);
                    Complex64::new(c, s)
                })
                .collect();
            let t = delay_truncate(&h, w, 6).unwrap();
            for (c, z) in t.iter().enumerate() {
                let expect = if c == k { sqrt(w as f64) } else { 0.0 };
                assert!((z.norm() - expect).abs() < 1e-10, "k={k} c={c}");
            }
        }
    }

    #[test]
    fn parseval_holds_for_full_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_matrix(&mut rng, 40);
        let t = delay_truncate(&h, 40, 40).unwrap();
        let e_in: f64 = h.iter().map(|z| z.norm_sqr()).sum();
        let e_out: f64 = t.iter().map(|z| z.norm_sqr()).sum();
        assert!(((e_in - e_out) / e_in).abs() < 1e-9);
    }

    #[test]
    fn too_many_taps_is_an_error() {
        let h = vec![Complex64::new(1.0, 0.0); 8];
        assert!(delay_truncate(&h, 8, 9).is_err());
    }

    #[test]
    fn feature_has_unit_norm_and_column_major_layout() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = random_matrix(&mut rng, 6 * 3);
        let f = extract_feature(&h, 3).unwrap();
        let n: f64 = f.iter().map(|v| v * v).sum();
        assert!((sqrt(n) - 1.0).abs() < 1e-9);
        // entry (row 1, tap 2) sits at 2 * rows + 1
        let energy: f64 = h.iter().map(|z| z.norm_sqr()).sum();
        assert!((f[2 * 6 + 1] - h[3 + 2].norm() / sqrt(energy)).abs() < 1e-15);
    }

    #[test]
    fn feature_ignores_complex_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_matrix(&mut rng, 24);
        let (s, c) = sin_cos(PI / 3.0);
        let g = Complex64::new(7.0 * c, 7.0 * s);
        let scaled: Vec<Complex64> = h.iter().map(|z| z * g).collect();
        let a = extract_feature(&h, 4).unwrap();
        let b = extract_feature(&scaled, 4).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_channel_is_rejected() {
        assert_eq!(extract_feature(&[Complex64::new(0.0, 0.0); 8], 4), Err(Error::ZeroChannel));
    }

    #[test]
    fn receive_power_cases() {
        let ten = vec![Complex64::new(5.0, 0.0); 4]; // ||.||_F = 10
        assert!((receive_power(&ten) - 20.0).abs() < 1e-12);
        let hundred: Vec<Complex64> = ten.iter().map(|z| z * 10.0).collect();
        assert!((receive_power(&hundred) - 40.0).abs() < 1e-12);
        assert_eq!(receive_power(&[Complex64::new(0.0, 0.0); 3]), f64::NEG_INFINITY);
    }

    #[test]
    fn los_set_thresholding() {
        assert_eq!(los_ap_set(&[-25.0, -35.0], f64::NEG_INFINITY), vec![0, 1]);
        assert_eq!(los_ap_set(&[-25.0, -35.0], -30.0), vec![0]);
        assert_eq!(los_ap_set(&[-30.0, -35.0], -30.0), Vec::<usize>::new());
    }

    #[test]
    fn pairs_respect_margin() {
        let p = [0.0, -10.0, -20.0];
        assert_eq!(ap_pairs(&p, &[0, 1, 2], 3.0), vec![(0, 1), (0, 2), (1, 2)]);
        assert_eq!(ap_pairs(&p, &[0, 1, 2], 15.0), vec![(0, 2)]);
        assert_eq!(ap_pairs(&p, &[1, 2], 3.0), vec![(1, 2)]);
    }

    #[test]
    fn false_pair_ratio_cases() {
        let aps = [[0.0, 0.0, 2.0], [10.0, 0.0, 2.0]];
        let positions = vec![[1.0, 0.0, 1.5]; 10];
        let mut pairs = vec![vec![(0, 1)]; 10];
        assert_eq!(false_pair_ratio(&pairs, &positions, &aps), 0.0);
        pairs[3] = vec![(1, 0)];
        assert!((false_pair_ratio(&pairs, &positions, &aps) - 0.1).abs() < 1e-15);
        assert!(false_pair_ratio(&[vec![]], &positions[..1], &aps).is_nan());
    }

    #[test]
    fn strongest_los_ap_picks_max_power() {
        let set = FeatureSet::from_parts(
            FeatureParams { taps: 1, p_thr_db: -30.0, m_p_db: 0.0 },
            3,
            1,
            vec![1.0, 1.0],
            vec![-10.0, -5.0, -40.0, -50.0, -60.0, -70.0],
            vec![0.0, 1.0],
        )
        .unwrap();
        assert_eq!(set.strongest_los_ap(0), Some(1));
        assert_eq!(set.strongest_los_ap(1), None);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn raising_threshold_never_adds_aps(
                powers in prop::collection::vec(-80.0f64..10.0, 1..8),
                t1 in -90.0f64..20.0,
                dt in 0.0f64..30.0,
            ) {
                let lo = los_ap_set(&powers, t1);
                let hi = los_ap_set(&powers, t1 + dt);
                prop_assert!(hi.iter().all(|a| lo.contains(a)));
            }

            #[test]
            fn pairs_are_antisymmetric_and_bounded(
                powers in prop::collection::vec(-80.0f64..10.0, 1..8),
                m_p in 0.0f64..10.0,
            ) {
                let set = los_ap_set(&powers, -50.0);
                let pairs = ap_pairs(&powers, &set, m_p);
                for &(c, f) in &pairs {
                    prop_assert!(!pairs.contains(&(f, c)));
                    prop_assert!(powers[c] > powers[f] + m_p);
                }
                let k = set.len();
                prop_assert!(pairs.len() <= k * k.saturating_sub(1) / 2);
            }
        }
    }
}
