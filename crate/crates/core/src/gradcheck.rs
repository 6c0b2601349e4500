//! Finite-difference verification of the analytic gradients of every loss
//! composed with the network.
//!
//! The finite-difference side only evaluates loss values on perturbed
//! parameters; it never touches the backward pass. Parameters whose ±h
//! perturbation flips a ReLU unit, a hinge or a box-edge condition are
//! skipped, since the objective is not differentiable across that step.
//!
//! With the activation pattern fixed, the embeddings are affine in any single
//! parameter, so the only curvature left is that of the Euclidean norms in
//! the distance terms. For a separation `u` moved by `Δ` per step `h`, the
//! central difference of `|u + tΔ/h|` is off by at most
//! `|Δ|^3 / (2 h (|u| - |Δ|)^2)`. Summed over terms this certifies the
//! oracle's own truncation error; a parameter is skipped when that bound
//! exceeds half of the tolerance budget. Instances are redrawn when a hidden
//! layer is silent on some row, where the check would be vacuous.

use alloc::vec::Vec;

use rand::Rng as _;

use crate::error::Result;
use crate::losses::{multi_loss, Anchors, BatchTerms, BoxPolicy, LossConfig, LossWeights, COMPONENTS};
use crate::math::{dist2, norm2};
use crate::net::{ChartModel, ForwardCache, LAYERS};
use crate::rng::{stream_rng, Rng};
use crate::sim::Rect;
use crate::Point2;

pub const STEP: f64 = 1e-4;
pub const TOLERANCE: f64 = 1e-5;
/// Denominator floor of the relative error: central differences of losses of
/// order 10 carry rounding noise near `eps * 10 / h ~ 2e-11`, so smaller
/// gradient entries are compared in absolute terms (at `TOLERANCE * REL_FLOOR`).
pub const REL_FLOOR: f64 = 1e-4;
const MAX_DRAWS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckResult {
    pub loss: &'static str,
    pub instances: usize,
    pub checked: usize,
    pub skipped: usize,
    pub max_rel_error: f64,
}

impl GradCheckResult {
    pub fn passed(&self) -> bool {
        self.checked > 0 && self.max_rel_error < TOLERANCE
    }
}

struct Instance {
    model: ChartModel,
    input: Vec<f64>,
    cfg: LossConfig,
    triples: Vec<[usize; 3]>,
    pairs: Vec<Vec<(usize, usize)>>,
    targets: Vec<Vec<usize>>,
    labels: Vec<(usize, Point2)>,
    ap_xy: Vec<Point2>,
    boxes: Vec<Rect>,
}

const DIM: usize = 32;

fn instance(rng: &mut Rng, seed: u64, rows: usize, weights: LossWeights) -> Result<Instance> {
    let mut model = ChartModel::init(DIM, seed)?;
    // Nonzero biases so the check also covers them.
    for l in 0..LAYERS {
        let r = model.bias_range(l);
        for b in &mut model.params_mut()[r] {
            *b = rng.random_range(-0.1..0.1);
        }
    }
    let input = (0..rows * DIM).map(|_| rng.random_range(-2.0..2.0)).collect();
    let mut idx = || rng.random_range(0..rows);
    let triples = (0..rows).map(|_| [idx(), idx(), idx()]).collect();
    let ap_xy = alloc::vec![[-3.0, -2.0], [3.0, -2.0], [0.0, 3.0], [0.5, 0.5]];
    let boxes = alloc::vec![
        Rect::new(-4.0, -1.0, -3.0, 0.0)?,
        Rect::new(1.0, 4.0, -3.0, 0.0)?,
        Rect::new(-1.0, 1.0, 1.0, 4.0)?,
        Rect::new(0.2, 0.4, 0.2, 0.4)?,
    ];
    let pairs = (0..rows)
        .map(|_| {
            let c = rng.random_range(0..4);
            let f = (c + rng.random_range(1..4)) % 4;
            if rng.random_bool(0.8) { alloc::vec![(c, f)] } else { Vec::new() }
        })
        .collect();
    let targets = (0..rows).map(|_| if rng.random_bool(0.8) { alloc::vec![rng.random_range(0..4)] } else { Vec::new() }).collect();
    let labels = (0..rows / 2).map(|i| (2 * i, [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)])).collect();
    let cfg = LossConfig {
        coherence_time_s: 1.0,
        triplet_margin: rng.random_range(0.0..0.5),
        bilateration_margin: rng.random_range(0.0..0.5),
        weights,
        box_policy: BoxPolicy::StrongestAp,
    };
    Ok(Instance { model, input, cfg, triples, pairs, targets, labels, ap_xy, boxes })
}

impl Instance {
    /// Loss value, embeddings and kink pattern from one forward pass.
    fn evaluate(&self, model: &ChartModel) -> Result<(f64, Vec<Point2>, Vec<bool>)> {
        let (emb, cache) = model.forward(&self.input)?;
        let total = multi_loss(&self.cfg, &emb, &self.terms(), &self.anchors())?.total;
        let pattern = self.pattern(&emb, &cache);
        Ok((total, emb, pattern))
    }

    fn terms(&self) -> BatchTerms<'_> {
        BatchTerms { triples: &self.triples, pairs: &self.pairs, box_targets: &self.targets, labels: &self.labels }
    }

    fn anchors(&self) -> Anchors<'_> {
        Anchors { ap_xy: &self.ap_xy, boxes: &self.boxes }
    }

    /// Whether every row keeps an active unit in every hidden layer.
    fn well_posed(&self) -> Result<bool> {
        let (emb, cache) = self.model.forward(&self.input)?;
        let rows = emb.len();
        for l in 0..LAYERS - 1 {
            let out = cache.layer_output(l);
            let width = out.len() / rows;
            if out.chunks_exact(width).any(|r| r.iter().all(|v| *v <= 0.0)) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Separation vectors of every active distance term.
    fn separations(&self, emb: &[Point2]) -> Vec<Point2> {
        let w = self.cfg.weights;
        let sep = |a: &Point2, b: &Point2| [a[0] - b[0], a[1] - b[1]];
        let mut out = Vec::new();
        if w.triplet > 0.0 {
            for &[n, c, f] in &self.triples {
                out.push(sep(&emb[n], &emb[c]));
                out.push(sep(&emb[n], &emb[f]));
            }
        }
        if w.bilateration > 0.0 {
            for (x, row) in emb.iter().zip(&self.pairs) {
                for &(c, f) in row {
                    out.push(sep(x, &self.ap_xy[c]));
                    out.push(sep(x, &self.ap_xy[f]));
                }
            }
        }
        out
    }

    /// Bound on the truncation error of the central difference when the
    /// embeddings move from `base` to `moved` over one step.
    fn truncation_bound(&self, base: &[Point2], moved: &[Point2]) -> f64 {
        let a = self.separations(base);
        let b = self.separations(moved);
        let w = self.cfg.weights.triplet.max(self.cfg.weights.bilateration);
        a.iter()
            .zip(&b)
            .map(|(s, t)| {
                let r = norm2(s);
                let shift = norm2(&[t[0] - s[0], t[1] - s[1]]);
                if shift == 0.0 {
                    0.0
                } else if shift >= r {
                    f64::INFINITY
                } else {
                    shift * shift * shift / (2.0 * STEP * (r - shift) * (r - shift))
                }
            })
            .sum::<f64>()
            * w
    }

    /// Signs of every ReLU unit and loss kink at the given parameters.
    fn pattern(&self, emb: &[Point2], cache: &ForwardCache) -> Vec<bool> {
        let mut p: Vec<bool> = (0..LAYERS - 1).flat_map(|l| cache.layer_output(l).iter().map(|v| *v > 0.0)).collect();
        let w = self.cfg.weights;
        if w.triplet > 0.0 {
            for &[n, c, f] in &self.triples {
                p.push(dist2(&emb[n], &emb[c]) - dist2(&emb[n], &emb[f]) + self.cfg.triplet_margin > 0.0);
            }
        }
        if w.bilateration > 0.0 {
            for (x, row) in emb.iter().zip(&self.pairs) {
                for &(c, f) in row {
                    p.push(dist2(x, &self.ap_xy[c]) - dist2(x, &self.ap_xy[f]) + self.cfg.bilateration_margin > 0.0);
                }
            }
        }
        if w.bbox > 0.0 {
            for (x, row) in emb.iter().zip(&self.targets) {
                for &a in row {
                    let b = &self.boxes[a];
                    p.extend([x[0] < b.x_min, x[0] > b.x_max, x[1] < b.y_min, x[1] > b.y_max]);
                }
            }
        }
        p
    }
}

/// Checks one loss configuration over `instances` random instances.
pub fn check_weights(name: &'static str, weights: LossWeights, seed: u64, instances: usize) -> Result<GradCheckResult> {
    let mut rng = stream_rng(seed, 0x6772_6164);
    let mut res = GradCheckResult { loss: name, instances, checked: 0, skipped: 0, max_rel_error: 0.0 };
    let mut draw = 0u64;
    for _ in 0..instances {
        let inst = loop {
            let rows = rng.random_range(8..=20);
            let inst = instance(&mut rng, seed.wrapping_add(draw), rows, weights)?;
            draw += 1;
            if inst.well_posed()? {
                break inst;
            }
            if draw as usize >= MAX_DRAWS * instances {
                return Err(crate::Error::Numerical("no well-posed gradient-check instance found"));
            }
        };
        let (emb, cache) = inst.model.forward(&inst.input)?;
        let loss = multi_loss(&inst.cfg, &emb, &inst.terms(), &inst.anchors())?;
        let analytic = inst.model.backward(&cache, &loss.grads)?;
        let base = inst.pattern(&emb, &cache);
        let mut probe = inst.model.clone();
        for i in 0..probe.param_count() {
            let v = probe.params()[i];
            probe.params_mut()[i] = v + STEP;
            let (up, emb_up, pat_up) = inst.evaluate(&probe)?;
            probe.params_mut()[i] = v - STEP;
            let (down, _, pat_down) = inst.evaluate(&probe)?;
            let smooth = pat_up == base && pat_down == base;
            probe.params_mut()[i] = v;
            let fd = (up - down) / (2.0 * STEP);
            let budget = 0.5 * TOLERANCE * fd.abs().max(REL_FLOOR);
            if !smooth || inst.truncation_bound(&emb, &emb_up) > budget {
                res.skipped += 1;
                continue;
            }
            let an = analytic.0[i];
            let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(REL_FLOOR);
            res.max_rel_error = res.max_rel_error.max(rel);
            res.checked += 1;
        }
    }
    Ok(res)
}

/// Every loss alone and all four combined.
pub fn check_all(seed: u64, instances: usize) -> Result<Vec<GradCheckResult>> {
    let mut out = Vec::new();
    for (k, name) in COMPONENTS.iter().enumerate() {
        let mut w = [0.0; 4];
        w[k] = 1.0;
        out.push(check_weights(name, LossWeights::new(w[0], w[1], w[2], w[3]), seed, instances)?);
    }
    out.push(check_weights("multi", LossWeights::new(0.7, 1.3, 0.4, 0.9), seed, instances)?);
    Ok(out)
}
