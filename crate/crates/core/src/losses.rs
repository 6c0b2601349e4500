//! Chart losses. Every loss takes the embedded batch (one 2-D point per row)
//! and returns its value together with the exact gradient per row.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::math::sqrt;
use crate::rng::{stream, stream_rng, Rng};
use crate::sim::Rect;
use crate::Point2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum BoxPolicy {
    /// Only the box of the strongest LoS AP constrains a sample.
    #[default]
    StrongestAp,
    AllLosAps,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct LossWeights {
    #[cfg_attr(feature = "serde", serde(default))]
    pub triplet: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub bilateration: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub bbox: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub mse: f64,
}

impl LossWeights {
    pub const fn new(triplet: f64, bilateration: f64, bbox: f64, mse: f64) -> Self {
        LossWeights { triplet, bilateration, bbox, mse }
    }

    pub fn validate(&self) -> Result<()> {
        let w = [self.triplet, self.bilateration, self.bbox, self.mse];
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("loss weights must be finite and nonnegative"));
        }
        if w.iter().all(|v| *v == 0.0) {
            return Err(invalid("all loss weights are zero"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct LossConfig {
    /// Samples closer in time than this are "close" for the triplet loss.
    pub coherence_time_s: f64,
    pub triplet_margin: f64,
    pub bilateration_margin: f64,
    pub weights: LossWeights,
    #[cfg_attr(feature = "serde", serde(default))]
    pub box_policy: BoxPolicy,
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.coherence_time_s > 0.0) || !self.coherence_time_s.is_finite() {
            return Err(invalid("coherence time must be positive"));
        }
        if !(self.triplet_margin >= 0.0) || !(self.bilateration_margin >= 0.0) {
            return Err(invalid("margins must be nonnegative"));
        }
        self.weights.validate()
    }
}

/// Loss value with one gradient entry per embedded row.
#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    pub value: f64,
    pub grads: Vec<Point2>,
}

impl LossOutput {
    fn zero(rows: usize) -> Self {
        LossOutput { value: 0.0, grads: vec![[0.0; 2]; rows] }
    }

    fn scale(&mut self, s: f64) {
        self.value *= s;
        for g in &mut self.grads {
            g[0] *= s;
            g[1] *= s;
        }
    }
}

/// Unit vector from `b` to `a` and the distance; zero direction when the
/// points coincide.
#[inline]
fn dir(a: &Point2, b: &Point2) -> (f64, Point2) {
    let d = [a[0] - b[0], a[1] - b[1]];
    let r = sqrt(d[0] * d[0] + d[1] * d[1]);
    if r > 0.0 {
        (r, [d[0] / r, d[1] / r])
    } else {
        (0.0, [0.0, 0.0])
    }
}

#[inline]
fn add(g: &mut Point2, s: f64, v: Point2) {
    g[0] += s * v[0];
    g[1] += s * v[1];
}

/// (anchor, close, far) index triples.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TripletBatch {
    pub triples: Vec<[usize; 3]>,
}

/// Draws triplets from a pool of samples using their timestamps. Candidate
/// sets are contiguous ranges in time order, so a draw is O(log N).
#[derive(Debug, Clone)]
pub struct TripletSampler {
    coherence_time_s: f64,
    /// Pool indices sorted by timestamp.
    order: Vec<usize>,
    times: Vec<f64>,
    /// Per sorted position: [far_left_end, equal_start, equal_end, far_right_start].
    bounds: Vec<[usize; 4]>,
}

impl TripletSampler {
    /// `pool` holds the sample indices eligible for any role; `timestamps`
    /// is indexed by sample index.
    pub fn new(timestamps: &[f64], pool: &[usize], coherence_time_s: f64) -> Result<Self> {
        if !(coherence_time_s > 0.0) {
            return Err(invalid("coherence time must be positive"));
        }
        let mut order = pool.to_vec();
        if order.iter().any(|&i| i >= timestamps.len() || !timestamps[i].is_finite()) {
            return Err(invalid("triplet pool refers to a missing or non-finite timestamp"));
        }
        order.sort_by(|&a, &b| timestamps[a].total_cmp(&timestamps[b]).then(a.cmp(&b)));
        let times: Vec<f64> = order.iter().map(|&i| timestamps[i]).collect();
        let tc = coherence_time_s;
        let bounds = times
            .iter()
            .map(|&t| {
                [
                    times.partition_point(|&s| t - s > tc),
                    times.partition_point(|&s| s < t),
                    times.partition_point(|&s| s <= t),
                    times.partition_point(|&s| !(s - t > tc)),
                ]
            })
            .collect();
        Ok(TripletSampler { coherence_time_s, order, times, bounds })
    }

    pub fn coherence_time_s(&self) -> f64 {
        self.coherence_time_s
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Position of a pool sample in time order.
    pub fn position_of(&self, sample: usize) -> Option<usize> {
        self.order.iter().position(|&i| i == sample)
    }

    /// Sample index at a time-order position.
    pub fn sample_at(&self, pos: usize) -> usize {
        self.order[pos]
    }

    fn counts(&self, pos: usize) -> (usize, usize) {
        let [fl, eq0, eq1, fr] = self.bounds[pos];
        ((eq0 - fl) + (fr - eq1), fl + (self.order.len() - fr))
    }

    /// Whether the sample at `pos` has both a close and a far candidate.
    pub fn is_valid_anchor(&self, pos: usize) -> bool {
        let (c, f) = self.counts(pos);
        c > 0 && f > 0
    }

    /// Close and far candidates (sample indices) for the anchor at `pos`.
    pub fn candidates(&self, pos: usize) -> (Vec<usize>, Vec<usize>) {
        let [fl, eq0, eq1, fr] = self.bounds[pos];
        let close = self.order[fl..eq0].iter().chain(&self.order[eq1..fr]).copied().collect();
        let far = self.order[..fl].iter().chain(&self.order[fr..]).copied().collect();
        (close, far)
    }

    /// Draws one triple for the anchor at time-order position `pos`, or
    /// `None` if it lacks close or far candidates.
    pub fn draw(&self, pos: usize, rng: &mut Rng) -> Option<[usize; 3]> {
        let (nc, nf) = self.counts(pos);
        if nc == 0 || nf == 0 {
            return None;
        }
        let [fl, eq0, eq1, fr] = self.bounds[pos];
        let c = rng.random_range(0..nc);
        let c = if c < eq0 - fl { fl + c } else { eq1 + c - (eq0 - fl) };
        let f = rng.random_range(0..nf);
        let f = if f < fl { f } else { fr + f - fl };
        Some([self.order[pos], self.order[c], self.order[f]])
    }

    /// Checks the defining inequality `0 < |t_n - t_c| <= T_c < |t_n - t_f|`.
    pub fn is_valid_triple(timestamps: &[f64], tc: f64, [n, c, f]: [usize; 3]) -> bool {
        let dc = (timestamps[n] - timestamps[c]).abs();
        let df = (timestamps[n] - timestamps[f]).abs();
        dc > 0.0 && dc <= tc && df > tc
    }

    /// `count` triples with anchors drawn uniformly among valid anchors.
    pub fn sample(&self, count: usize, rng: &mut Rng) -> Result<TripletBatch> {
        let valid: Vec<usize> = (0..self.len()).filter(|&p| self.is_valid_anchor(p)).collect();
        if valid.is_empty() {
            return Err(Error::NoValidTriplet);
        }
        // Resampling an anchor until it has candidates is the same as drawing
        // uniformly from the valid anchors.
        let triples = (0..count)
            .map(|_| {
                let pos = valid[rng.random_range(0..valid.len())];
                self.draw(pos, rng).expect("valid anchor")
            })
            .collect();
        Ok(TripletBatch { triples })
    }

    /// Pool timestamps in ascending order.
    pub fn times(&self) -> &[f64] {
        &self.times
    }
}

/// Samples `count` triples over all samples.
pub fn sample_triplets(timestamps: &[f64], coherence_time_s: f64, count: usize, seed: u64) -> Result<TripletBatch> {
    if timestamps.len() < 3 {
        return Err(invalid("triplet sampling needs at least three samples"));
    }
    let pool: Vec<usize> = (0..timestamps.len()).collect();
    let sampler = TripletSampler::new(timestamps, &pool, coherence_time_s)?;
    sampler.sample(count, &mut stream_rng(seed, stream::TRIPLETS))
}

/// Mean over triples of `(|x_n - x_c| - |x_n - x_f| + margin)^+`.
pub fn triplet_loss(emb: &[Point2], triples: &[[usize; 3]], margin: f64) -> Result<LossOutput> {
    if triples.is_empty() {
        return Err(Error::NoValidTriplet);
    }
    let mut out = LossOutput::zero(emb.len());
    for &[n, c, f] in triples {
        if n.max(c).max(f) >= emb.len() {
            return Err(invalid("triplet index out of range"));
        }
        let (dc, uc) = dir(&emb[n], &emb[c]);
        let (df, uf) = dir(&emb[n], &emb[f]);
        let h = dc - df + margin;
        if h > 0.0 {
            out.value += h;
            add(&mut out.grads[n], 1.0, uc);
            add(&mut out.grads[c], -1.0, uc);
            add(&mut out.grads[n], -1.0, uf);
            add(&mut out.grads[f], 1.0, uf);
        }
    }
    out.scale(1.0 / triples.len() as f64);
    Ok(out)
}

/// Hinge on distance differences to AP pairs, normalized by the total pair
/// count. `pairs[i]` lists `(closer, farther)` AP pairs for row `i`.
pub fn bilateration_loss(emb: &[Point2], ap_xy: &[Point2], pairs: &[Vec<(usize, usize)>], margin: f64) -> Result<LossOutput> {
    if pairs.len() != emb.len() {
        return Err(Error::Shape { what: "AP pair rows", expected: emb.len(), found: pairs.len() });
    }
    let mut out = LossOutput::zero(emb.len());
    let total: usize = pairs.iter().map(Vec::len).sum();
    if total == 0 {
        log::warn!("bilateration loss: batch has no AP pairs");
        return Ok(out);
    }
    for ((x, row), g) in emb.iter().zip(pairs).zip(&mut out.grads) {
        for &(c, f) in row {
            let (ac, af) = ap_xy.get(c).zip(ap_xy.get(f)).ok_or_else(|| invalid("AP index out of range"))?;
            let (dc, uc) = dir(x, ac);
            let (df, uf) = dir(x, af);
            let h = dc - df + margin;
            if h > 0.0 {
                out.value += h;
                add(g, 1.0, uc);
                add(g, -1.0, uf);
            }
        }
    }
    out.scale(1.0 / total as f64);
    Ok(out)
}

/// Squared distance from `p` to the box; zero inside.
pub fn box_distance(p: &Point2, b: &Rect) -> f64 {
    let g = box_gap(p, b);
    g[0] * g[0] + g[1] * g[1]
}

/// Signed per-axis gap between `p` and its projection onto the box.
fn box_gap(p: &Point2, b: &Rect) -> Point2 {
    let gap = |v: f64, lo: f64, hi: f64| {
        if v < lo {
            v - lo
        } else if v > hi {
            v - hi
        } else {
            0.0
        }
    };
    [gap(p[0], b.x_min, b.x_max), gap(p[1], b.y_min, b.y_max)]
}

/// APs whose boxes constrain a sample under `policy`: the strongest LoS AP
/// alone (ties to the lower index) or the whole LoS set.
pub fn box_targets(los_set: &[usize], powers: &[f64], policy: BoxPolicy) -> Vec<usize> {
    match policy {
        BoxPolicy::AllLosAps => los_set.to_vec(),
        BoxPolicy::StrongestAp => {
            let mut best: Option<usize> = None;
            for &a in los_set {
                if best.is_none_or(|b| powers[a] > powers[b]) {
                    best = Some(a);
                }
            }
            best.into_iter().collect()
        }
    }
}

/// Mean squared distance outside the target boxes, normalized by the total
/// number of (row, box) terms. `targets[i]` comes from [`box_targets`].
pub fn bbox_loss(emb: &[Point2], targets: &[Vec<usize>], boxes: &[Rect]) -> Result<LossOutput> {
    if targets.len() != emb.len() {
        return Err(Error::Shape { what: "box target rows", expected: emb.len(), found: targets.len() });
    }
    let mut out = LossOutput::zero(emb.len());
    let total: usize = targets.iter().map(Vec::len).sum();
    if total == 0 {
        log::warn!("box loss: batch has no LoS samples");
        return Ok(out);
    }
    for ((x, row), g) in emb.iter().zip(targets).zip(&mut out.grads) {
        for &a in row {
            let b = boxes.get(a).ok_or_else(|| invalid("AP index out of range"))?;
            let gap = box_gap(x, b);
            out.value += gap[0] * gap[0] + gap[1] * gap[1];
            add(g, 2.0, gap);
        }
    }
    out.scale(1.0 / total as f64);
    Ok(out)
}

/// Mean squared error over labeled rows `(row, position)`.
pub fn mse_loss(emb: &[Point2], labels: &[(usize, Point2)]) -> Result<LossOutput> {
    if labels.is_empty() {
        return Err(invalid("MSE loss needs at least one labeled sample"));
    }
    let mut out = LossOutput::zero(emb.len());
    for &(i, t) in labels {
        let x = emb.get(i).ok_or_else(|| invalid("label row out of range"))?;
        let d = [x[0] - t[0], x[1] - t[1]];
        out.value += d[0] * d[0] + d[1] * d[1];
        add(&mut out.grads[i], 2.0, d);
    }
    out.scale(1.0 / labels.len() as f64);
    Ok(out)
}

/// Index sets for one batch; rows refer to positions in the embedded batch.
#[derive(Debug, Clone, Copy, Default)]
pub struct BatchTerms<'a> {
    pub triples: &'a [[usize; 3]],
    pub pairs: &'a [Vec<(usize, usize)>],
    pub box_targets: &'a [Vec<usize>],
    pub labels: &'a [(usize, Point2)],
}

/// Fixed geometry referenced by the position-anchoring losses.
#[derive(Debug, Clone, Copy, Default)]
pub struct Anchors<'a> {
    pub ap_xy: &'a [Point2],
    pub boxes: &'a [Rect],
}

pub const COMPONENTS: [&str; 4] = ["triplet", "bilateration", "bbox", "mse"];

/// Weighted loss with per-component (unweighted) values; `None` marks a
/// component that was skipped because its weight is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiLoss {
    pub total: f64,
    pub components: [Option<f64>; 4],
    pub grads: Vec<Point2>,
}

pub fn multi_loss(cfg: &LossConfig, emb: &[Point2], terms: &BatchTerms<'_>, anchors: &Anchors<'_>) -> Result<MultiLoss> {
    let w = cfg.weights;
    w.validate()?;
    let mut total = MultiLoss { total: 0.0, components: [None; 4], grads: vec![[0.0; 2]; emb.len()] };
    let mut accumulate = |k: usize, weight: f64, part: LossOutput| {
        total.total += weight * part.value;
        total.components[k] = Some(part.value);
        for (g, p) in total.grads.iter_mut().zip(&part.grads) {
            add(g, weight, *p);
        }
    };
    if w.triplet > 0.0 {
        accumulate(0, w.triplet, triplet_loss(emb, terms.triples, cfg.triplet_margin)?);
    }
    if w.bilateration > 0.0 {
        accumulate(1, w.bilateration, bilateration_loss(emb, anchors.ap_xy, terms.pairs, cfg.bilateration_margin)?);
    }
    if w.bbox > 0.0 {
        accumulate(2, w.bbox, bbox_loss(emb, terms.box_targets, anchors.boxes)?);
    }
    if w.mse > 0.0 {
        accumulate(3, w.mse, mse_loss(emb, terms.labels)?);
    }
    Ok(total)
}
