//! Training of the six experiment variants and the affine post-processing
//! used by the affine baseline.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::features::FeatureSet;
use crate::losses::{box_targets, multi_loss, Anchors, BatchTerms, LossConfig, LossWeights, TripletSampler, COMPONENTS};
use crate::net::{AdamConfig, AdamState, ChartModel};
use crate::rng::{stream, stream_rng};
use crate::sim::{CsiDataset, Rect};
use crate::{horizontal, Point2};

/// Experiment variants: the two proposed position-anchored methods and four
/// baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum Variant {
    /// Bilateration + box losses.
    P1,
    /// Triplet + bilateration + box losses.
    P2,
    /// Triplet loss only (arbitrary chart coordinates).
    B1,
    /// B1 followed by an affine fit on a labeled subset.
    B2,
    /// Triplet + MSE on a labeled subset.
    B3,
    /// MSE on every training sample.
    B4,
}

impl Variant {
    pub const ALL: [Variant; 6] = [Variant::P1, Variant::P2, Variant::B1, Variant::B2, Variant::B3, Variant::B4];

    pub fn name(self) -> &'static str {
        match self {
            Variant::P1 => "P1",
            Variant::P2 => "P2",
            Variant::B1 => "B1",
            Variant::B2 => "B2",
            Variant::B3 => "B3",
            Variant::B4 => "B4",
        }
    }

    pub fn parse(s: &str) -> Option<Variant> {
        Variant::ALL.into_iter().find(|v| v.name().eq_ignore_ascii_case(s))
    }

    /// Unit weights on the variant's active losses.
    pub fn default_weights(self) -> LossWeights {
        match self {
            Variant::P1 => LossWeights::new(0.0, 1.0, 1.0, 0.0),
            Variant::P2 => LossWeights::new(1.0, 1.0, 1.0, 0.0),
            Variant::B1 | Variant::B2 => LossWeights::new(1.0, 0.0, 0.0, 0.0),
            Variant::B3 => LossWeights::new(1.0, 0.0, 0.0, 1.0),
            Variant::B4 => LossWeights::new(0.0, 0.0, 0.0, 1.0),
        }
    }

    /// Which of (triplet, bilateration, bbox, mse) must be active.
    fn active(self) -> [bool; 4] {
        let w = self.default_weights();
        [w.triplet > 0.0, w.bilateration > 0.0, w.bbox > 0.0, w.mse > 0.0]
    }

    /// Whether the variant's chart is in real-world coordinates.
    pub fn real_coordinates(self) -> bool {
        self != Variant::B1
    }

    /// Whether the variant consumes ground-truth positions.
    pub fn needs_labels(self) -> bool {
        matches!(self, Variant::B2 | Variant::B3 | Variant::B4)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct TrainConfig {
    pub epochs: usize,
    /// Anchors per step; at least the training-set size means full batch.
    pub batch_size: usize,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 200, batch_size: 256, adam: AdamConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub variant: Variant,
    pub loss: LossConfig,
    /// |S| for B2 and B3; ignored otherwise.
    pub label_count: usize,
    pub train: TrainConfig,
    pub seed: u64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.loss.validate()?;
        let w = self.loss.weights;
        let have = [w.triplet > 0.0, w.bilateration > 0.0, w.bbox > 0.0, w.mse > 0.0];
        if have != self.variant.active() {
            return Err(invalid("loss weights are inconsistent with the variant"));
        }
        if self.train.epochs == 0 || self.train.batch_size == 0 {
            return Err(invalid("epochs and batch size must be positive"));
        }
        let a = self.train.adam;
        if !(a.learning_rate > 0.0) || !(0.0..1.0).contains(&a.beta1) || !(0.0..1.0).contains(&a.beta2) || !(a.epsilon > 0.0) {
            return Err(invalid("invalid Adam hyperparameters"));
        }
        if matches!(self.variant, Variant::B2 | Variant::B3) && self.label_count == 0 {
            return Err(invalid("B2 and B3 need at least one labeled sample"));
        }
        Ok(())
    }
}

/// Affine map `x -> A x + b`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct AffineMap {
    pub a: [[f64; 2]; 2],
    pub b: [f64; 2],
}

impl AffineMap {
    pub const IDENTITY: AffineMap = AffineMap { a: [[1.0, 0.0], [0.0, 1.0]], b: [0.0, 0.0] };

    pub fn apply(&self, p: &Point2) -> Point2 {
        [
            self.a[0][0] * p[0] + self.a[0][1] * p[1] + self.b[0],
            self.a[1][0] * p[0] + self.a[1][1] * p[1] + self.b[1],
        ]
    }

    /// `self ∘ inner`: applies `inner` first.
    pub fn compose(&self, inner: &AffineMap) -> AffineMap {
        let m = |i: usize, j: usize| self.a[i][0] * inner.a[0][j] + self.a[i][1] * inner.a[1][j];
        let b = self.apply(&inner.b);
        AffineMap { a: [[m(0, 0), m(0, 1)], [m(1, 0), m(1, 1)]], b }
    }

    pub fn is_finite(&self) -> bool {
        self.a.iter().flatten().chain(&self.b).all(|v| v.is_finite())
    }
}

pub fn apply_affine(map: &AffineMap, points: &[Point2]) -> Vec<Point2> {
    points.iter().map(|p| map.apply(p)).collect()
}

/// Least-squares affine map from chart points to labels.
pub fn fit_affine(chart: &[Point2], labels: &[Point2]) -> Result<AffineMap> {
    if chart.len() != labels.len() {
        return Err(Error::Shape { what: "labels", expected: chart.len(), found: labels.len() });
    }
    if chart.len() < 3 {
        return Err(Error::DegenerateLabels);
    }
    let n = chart.len() as f64;
    let mean = |pts: &[Point2]| {
        let s = pts.iter().fold([0.0, 0.0], |s, p| [s[0] + p[0], s[1] + p[1]]);
        [s[0] / n, s[1] / n]
    };
    let (pm, ym) = (mean(chart), mean(labels));
    // Centered scatter of the chart points and cross-covariance with labels.
    let mut spp = [[0.0; 2]; 2];
    let mut syp = [[0.0; 2]; 2];
    for (p, y) in chart.iter().zip(labels) {
        let dp = [p[0] - pm[0], p[1] - pm[1]];
        let dy = [y[0] - ym[0], y[1] - ym[1]];
        for i in 0..2 {
            for j in 0..2 {
                spp[i][j] += dp[i] * dp[j];
                syp[i][j] += dy[i] * dp[j];
            }
        }
    }
    let det = spp[0][0] * spp[1][1] - spp[0][1] * spp[1][0];
    let trace = spp[0][0] + spp[1][1];
    if !(det > 1e-12 * trace * trace) {
        return Err(Error::DegenerateLabels);
    }
    let inv = [[spp[1][1] / det, -spp[0][1] / det], [-spp[1][0] / det, spp[0][0] / det]];
    let mut a = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            a[i][j] = syp[i][0] * inv[0][j] + syp[i][1] * inv[1][j];
        }
    }
    let map = AffineMap { a, b: [0.0, 0.0] };
    let ap = map.apply(&pm);
    let map = AffineMap { a, b: [ym[0] - ap[0], ym[1] - ap[1]] };
    if !map.is_finite() {
        return Err(Error::Numerical("non-finite affine fit"));
    }
    Ok(map)
}

/// Uniform random subset of `train` of size `count`, sorted.
pub fn select_labels(train: &[usize], count: usize, seed: u64) -> Result<Vec<usize>> {
    if count == 0 {
        return Err(invalid("label count must be positive"));
    }
    if count > train.len() {
        return Err(invalid("label count exceeds the training set"));
    }
    let mut pool = train.to_vec();
    let mut rng = stream_rng(seed, stream::LABELS);
    let (chosen, _) = pool.partial_shuffle(&mut rng, count);
    let mut s = chosen.to_vec();
    s.sort_unstable();
    Ok(s)
}

/// AP positions and LoS boxes of the deployment.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SiteGeometry {
    pub ap_xy: Vec<Point2>,
    pub boxes: Vec<Rect>,
}

/// Per-epoch mean of each active loss component over the steps.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingLog {
    /// Names of the active components, in column order.
    pub columns: Vec<&'static str>,
    pub epochs: Vec<EpochRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub total: f64,
    pub components: Vec<f64>,
}

/// Every dataset index that entered a loss term or the label subset.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexAudit {
    pub visited: Vec<bool>,
}

impl IndexAudit {
    fn new(n: usize) -> Self {
        IndexAudit { visited: vec![false; n] }
    }

    fn mark(&mut self, idx: impl IntoIterator<Item = usize>) {
        for i in idx {
            self.visited[i] = true;
        }
    }

    pub fn touched(&self) -> impl Iterator<Item = usize> + '_ {
        self.visited.iter().enumerate().filter(|(_, v)| **v).map(|(i, _)| i)
    }
}

#[derive(Debug, Clone)]
pub struct TrainedChart {
    pub variant: Variant,
    pub seed: u64,
    pub model: ChartModel,
    /// Present for B2.
    pub affine: Option<AffineMap>,
    pub labels: Vec<usize>,
    pub log: TrainingLog,
    pub audit: IndexAudit,
}

impl TrainedChart {
    /// Chart positions of the given feature rows (affine map applied if any).
    pub fn predict(&self, features: &FeatureSet, idx: &[usize]) -> Result<Vec<Point2>> {
        let out = self.model.predict(&features.gather(idx))?;
        Ok(match &self.affine {
            Some(m) => apply_affine(m, &out),
            None => out,
        })
    }
}

fn ground_truth(ds: &CsiDataset) -> Result<Vec<Point2>> {
    let p = ds.positions.as_ref().ok_or(Error::MissingPositions)?;
    Ok(p.iter().map(horizontal).collect())
}

fn check_inputs(features: &FeatureSet, ds: &CsiDataset, site: &SiteGeometry) -> Result<()> {
    if features.len() != ds.len() {
        return Err(Error::Shape { what: "feature rows", expected: ds.len(), found: features.len() });
    }
    if features.ap_count != ds.ap_count || site.ap_xy.len() != ds.ap_count || site.boxes.len() != ds.ap_count {
        return Err(Error::Shape { what: "AP count", expected: ds.ap_count, found: site.ap_xy.len() });
    }
    Ok(())
}

/// Trains one variant on the training split.
pub fn train_variant(cfg: &RunConfig, features: &FeatureSet, ds: &CsiDataset, site: &SiteGeometry) -> Result<TrainedChart> {
    cfg.validate()?;
    check_inputs(features, ds, site)?;
    let train = ds.train_indices();
    if train.len() < 3 {
        return Err(invalid("training split is too small"));
    }
    let truth = if cfg.variant.needs_labels() { Some(ground_truth(ds)?) } else { None };
    let labels = match cfg.variant {
        Variant::B3 => select_labels(&train, cfg.label_count, cfg.seed)?,
        Variant::B4 => train.clone(),
        _ => Vec::new(),
    };
    let mut run = Trainer::new(cfg, features, site, &train)?;
    run.audit.mark(labels.iter().copied());
    run.fit(&labels, truth.as_deref())?;
    let Trainer { model, log, audit, .. } = run;
    let mut chart = TrainedChart { variant: cfg.variant, seed: cfg.seed, model, affine: None, labels, log, audit };
    if cfg.variant == Variant::B2 {
        attach_affine(&mut chart, features, ds, cfg.label_count)?;
    }
    Ok(chart)
}

/// Turns a triplet-only chart into B2 by fitting an affine map on a labeled
/// subset drawn with the chart's seed.
pub fn attach_affine(chart: &mut TrainedChart, features: &FeatureSet, ds: &CsiDataset, label_count: usize) -> Result<()> {
    let truth = ground_truth(ds)?;
    let labels = select_labels(&ds.train_indices(), label_count, chart.seed)?;
    let pts = chart.model.predict(&features.gather(&labels))?;
    let targets: Vec<Point2> = labels.iter().map(|&i| truth[i]).collect();
    chart.affine = Some(fit_affine(&pts, &targets)?);
    chart.audit.mark(labels.iter().copied());
    chart.labels = labels;
    chart.variant = Variant::B2;
    Ok(())
}

struct Trainer<'a> {
    cfg: &'a RunConfig,
    features: &'a FeatureSet,
    site: &'a SiteGeometry,
    train: &'a [usize],
    sampler: Option<TripletSampler>,
    model: ChartModel,
    adam: AdamState,
    log: TrainingLog,
    audit: IndexAudit,
}

impl<'a> Trainer<'a> {
    fn new(cfg: &'a RunConfig, features: &'a FeatureSet, site: &'a SiteGeometry, train: &'a [usize]) -> Result<Self> {
        let model = ChartModel::init(features.dim, cfg.seed)?;
        let adam = AdamState::new(&model, cfg.train.adam);
        let w = cfg.loss.weights;
        let sampler = if w.triplet > 0.0 {
            let s = TripletSampler::new(&features.timestamps, train, cfg.loss.coherence_time_s)?;
            if !(0..s.len()).any(|p| s.is_valid_anchor(p)) {
                return Err(Error::NoValidTriplet);
            }
            Some(s)
        } else {
            None
        };
        let ws = [w.triplet, w.bilateration, w.bbox, w.mse];
        let columns = COMPONENTS.iter().zip(ws).filter(|(_, w)| *w > 0.0).map(|(c, _)| *c).collect();
        Ok(Trainer {
            cfg,
            features,
            site,
            train,
            sampler,
            model,
            adam,
            log: TrainingLog { columns, epochs: Vec::new() },
            audit: IndexAudit::new(features.len()),
        })
    }

    fn fit(&mut self, labels: &[usize], truth: Option<&[Point2]>) -> Result<()> {
        let mut rng = stream_rng(self.cfg.seed, stream::BATCHES);
        // Anchors visit time-order positions when the triplet loss is active,
        // dataset indices otherwise.
        let mut anchors: Vec<usize> = match &self.sampler {
            Some(s) => (0..s.len()).collect(),
            None => self.train.to_vec(),
        };
        let mut label_pool = labels.to_vec();
        let batch = self.cfg.train.batch_size.min(anchors.len());
        for epoch in 0..self.cfg.train.epochs {
            anchors.shuffle(&mut rng);
            let mut sums = vec![0.0; self.log.columns.len()];
            let mut total = 0.0;
            let mut steps = 0usize;
            for chunk in anchors.chunks(batch) {
                let Some((value, parts)) = self.step(chunk, &mut label_pool, truth, &mut rng)? else {
                    continue;
                };
                total += value;
                for (s, p) in sums.iter_mut().zip(parts) {
                    *s += p;
                }
                steps += 1;
            }
            if steps == 0 {
                return Err(Error::NoValidTriplet);
            }
            let k = steps as f64;
            sums.iter_mut().for_each(|s| *s /= k);
            log::debug!("epoch {epoch}: loss {}", total / k);
            self.log.epochs.push(EpochRecord { epoch, total: total / k, components: sums });
        }
        Ok(())
    }

    /// One Adam step; returns the weighted loss and the active components,
    /// or `None` when the chunk produced no usable rows.
    fn step(
        &mut self,
        chunk: &[usize],
        label_pool: &mut [usize],
        truth: Option<&[Point2]>,
        rng: &mut crate::rng::Rng,
    ) -> Result<Option<(f64, Vec<f64>)>> {
        let w = self.cfg.loss.weights;
        let fs = self.features;
        let mut rows: Vec<usize> = Vec::with_capacity(3 * chunk.len());
        let mut triples = Vec::new();
        match &self.sampler {
            Some(s) => {
                let drawn: Vec<[usize; 3]> = chunk.iter().filter_map(|&pos| s.draw(pos, rng)).collect();
                if drawn.is_empty() {
                    return Ok(None);
                }
                let b = drawn.len();
                rows.extend(drawn.iter().map(|t| t[0]));
                rows.extend(drawn.iter().map(|t| t[1]));
                rows.extend(drawn.iter().map(|t| t[2]));
                triples = (0..b).map(|i| [i, b + i, 2 * b + i]).collect();
            }
            None => rows.extend_from_slice(chunk),
        }
        let anchors = if triples.is_empty() { rows.len() } else { triples.len() };

        let mut pairs = Vec::new();
        let mut targets = Vec::new();
        if w.bilateration > 0.0 {
            pairs = rows.iter().enumerate().map(|(r, &i)| if r < anchors { fs.ap_pairs[i].clone() } else { Vec::new() }).collect();
        }
        if w.bbox > 0.0 {
            targets = rows
                .iter()
                .enumerate()
                .map(|(r, &i)| if r < anchors { box_targets(&fs.los_sets[i], fs.power_row(i), self.cfg.loss.box_policy) } else { Vec::new() })
                .collect();
        }
        let mut label_rows = Vec::new();
        if w.mse > 0.0 {
            let truth = truth.ok_or(Error::MissingPositions)?;
            if self.cfg.variant == Variant::B4 {
                label_rows = (0..anchors).map(|r| (r, truth[rows[r]])).collect();
            } else {
                // Labeled rows appended to the batch, at most one batch worth.
                let take = label_pool.len().min(self.cfg.train.batch_size);
                let (picked, _) = label_pool.partial_shuffle(rng, take);
                for &i in picked.iter() {
                    label_rows.push((rows.len(), truth[i]));
                    rows.push(i);
                }
                if !pairs.is_empty() {
                    pairs.resize(rows.len(), Vec::new());
                }
                if !targets.is_empty() {
                    targets.resize(rows.len(), Vec::new());
                }
            }
        }
        self.audit.mark(rows.iter().copied());

        let input = fs.gather(&rows);
        let (emb, cache) = self.model.forward(&input)?;
        let terms = BatchTerms { triples: &triples, pairs: &pairs, box_targets: &targets, labels: &label_rows };
        let anchors_geo = Anchors { ap_xy: &self.site.ap_xy, boxes: &self.site.boxes };
        let loss = multi_loss(&self.cfg.loss, &emb, &terms, &anchors_geo)?;
        if !loss.total.is_finite() {
            return Err(Error::Numerical("non-finite training loss"));
        }
        let grads = self.model.backward(&cache, &loss.grads)?;
        self.adam.step(&mut self.model, &grads)?;
        Ok(Some((loss.total, loss.components.iter().flatten().copied().collect())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn variant_weights_are_checked() {
        let loss = |w| LossConfig { coherence_time_s: 1.0, triplet_margin: 1.0, bilateration_margin: 1.0, weights: w, box_policy: Default::default() };
        for v in Variant::ALL {
            let cfg = RunConfig { variant: v, loss: loss(v.default_weights()), label_count: 5, train: TrainConfig::default(), seed: 0 };
            assert!(cfg.validate().is_ok(), "{v}");
        }
        let bad = RunConfig { variant: Variant::P1, loss: loss(LossWeights::new(1.0, 1.0, 1.0, 0.0)), label_count: 0, train: TrainConfig::default(), seed: 0 };
        assert!(bad.validate().is_err());
        let bad = RunConfig { variant: Variant::B1, loss: loss(LossWeights::new(1.0, 1.0, 0.0, 0.0)), ..bad };
        assert!(bad.validate().is_err());
        let bad = RunConfig { variant: Variant::B4, loss: loss(LossWeights::new(1.0, 0.0, 0.0, 1.0)), ..bad };
        assert!(bad.validate().is_err());
        let b3 = RunConfig { variant: Variant::B3, loss: loss(Variant::B3.default_weights()), ..bad };
        assert!(b3.validate().is_err(), "B3 with zero labels");
        assert_eq!(Variant::parse("p2"), Some(Variant::P2));
    }

    #[test]
    fn label_selection() {
        let train: Vec<usize> = (0..50).map(|i| 2 * i).collect();
        let s = select_labels(&train, 10, 3).unwrap();
        assert_eq!(s, select_labels(&train, 10, 3).unwrap());
        assert_ne!(s, select_labels(&train, 10, 4).unwrap());
        assert_eq!(s.len(), 10);
        assert!(s.iter().all(|i| train.contains(i)));
        assert_eq!(select_labels(&train, 50, 1).unwrap(), train);
        assert!(select_labels(&train, 0, 1).is_err());
        assert!(select_labels(&train, 51, 1).is_err());
    }

    fn pts(n: usize, seed: u64) -> Vec<Point2> {
        let mut rng = stream_rng(seed, 5);
        (0..n).map(|_| [rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)]).collect()
    }

    #[test]
    fn affine_fit_examples() {
        let p = pts(12, 1);
        let id = fit_affine(&p, &p).unwrap();
        for (x, y) in id.a.iter().flatten().zip(AffineMap::IDENTITY.a.iter().flatten()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(id.b.iter().all(|v| v.abs() < 1e-12));
        let y: Vec<Point2> = p.iter().map(|q| [2.0 * q[0] + 1.0, 2.0 * q[1] + 1.0]).collect();
        let m = fit_affine(&p, &y).unwrap();
        assert!((m.a[0][0] - 2.0).abs() < 1e-12 && m.a[0][1].abs() < 1e-12 && (m.b[1] - 1.0).abs() < 1e-12);
        for (q, t) in apply_affine(&m, &p).iter().zip(&y) {
            assert!((q[0] - t[0]).abs() < 1e-11 && (q[1] - t[1]).abs() < 1e-11);
        }
    }

    #[test]
    fn affine_fit_recovers_noisy_map() {
        let truth = AffineMap { a: [[0.8, -1.3], [0.4, 2.1]], b: [5.0, -3.0] };
        let p = pts(400, 2);
        let mut rng = stream_rng(9, 9);
        let sigma = 0.01;
        let y: Vec<Point2> = p
            .iter()
            .map(|q| {
                let t = truth.apply(q);
                [t[0] + sigma * (rng.random::<f64>() - 0.5), t[1] + sigma * (rng.random::<f64>() - 0.5)]
            })
            .collect();
        let m = fit_affine(&p, &y).unwrap();
        for (x, t) in m.a.iter().flatten().zip(truth.a.iter().flatten()) {
            assert!((x - t).abs() < sigma);
        }
        for (x, t) in m.b.iter().zip(&truth.b) {
            assert!((x - t).abs() < sigma);
        }
    }

    #[test]
    fn degenerate_labels() {
        let line: Vec<Point2> = (0..5).map(|i| [i as f64, 2.0 * i as f64]).collect();
        assert!(matches!(fit_affine(&line, &line), Err(Error::DegenerateLabels)));
        let two = [[0.0, 0.0], [1.0, 1.0]];
        assert!(matches!(fit_affine(&two, &two), Err(Error::DegenerateLabels)));
    }

    #[test]
    fn affine_application() {
        assert_eq!(apply_affine(&AffineMap::IDENTITY, &[[1.5, -2.0]]), [[1.5, -2.0]]);
        let rot = AffineMap { a: [[0.0, -1.0], [1.0, 0.0]], b: [0.0, 0.0] };
        assert_eq!(rot.apply(&[1.0, 0.0]), [0.0, 1.0]);
        let m1 = AffineMap { a: [[1.0, 2.0], [3.0, 4.0]], b: [0.5, -1.0] };
        let m2 = AffineMap { a: [[-2.0, 0.5], [1.0, 1.0]], b: [3.0, 0.25] };
        let c = m2.compose(&m1);
        for p in pts(10, 4) {
            let a = m2.apply(&m1.apply(&p));
            let b = c.apply(&p);
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
        }
    }
}
