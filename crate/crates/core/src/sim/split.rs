use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::{CsiDataset, Split};
use crate::error::{invalid, Result};
use crate::math::floor;
use crate::rng::{stream, stream_rng};

/// Uniformly random train/test split with exactly `floor(ratio * N)` training
/// samples.
pub fn split_train_test(ds: &CsiDataset, ratio: f64, seed: u64) -> Result<CsiDataset> {
    let n = ds.len();
    if n < 10 {
        return Err(invalid("splitting needs at least 10 samples"));
    }
    if !(0.0..=1.0).contains(&ratio) {
        return Err(invalid("split ratio must lie in [0, 1]"));
    }
    let n_train = (floor(ratio * n as f64 + 1e-9) as usize).min(n);
    if n_train == n {
        log::warn!("split ratio {ratio} leaves the test set empty");
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream_rng(seed, stream::SPLIT));
    let mut out = ds.clone();
    out.split.fill(Split::Test);
    for &i in &order[..n_train] {
        out.split[i] = Split::Train;
    }
    Ok(out)
}
