use alloc::vec::Vec;

use num_complex::Complex32;
use rand_distr::{Distribution, Normal};

use super::{CsiDataset, Domain};
use crate::error::{Error, Result};
use crate::features::truncate_dataset;
use crate::math::db_to_linear;
use crate::rng::{stream, stream_rng};

/// Per-AP complex noise variance `sigma_a^2` placing the expected SNR of the
/// AP's strongest sample at `max_snr_db`.
///
/// The SNR of an `M_R x C` block `H` is `||H||_F^2 / (M_R * C * sigma^2)`.
pub fn noise_variances(ds: &CsiDataset, max_snr_db: f64) -> Result<Vec<f64>> {
    if ds.is_empty() {
        return Err(Error::InvalidInput("empty dataset".into()));
    }
    let entries = (ds.antennas_per_ap * ds.cols) as f64;
    let snr = db_to_linear(max_snr_db);
    (0..ds.ap_count)
        .map(|a| {
            let strongest = (0..ds.len())
                .map(|n| block_energy(ds.ap_block(n, a)))
                .fold(0.0f64, f64::max);
            if strongest == 0.0 {
                return Err(Error::ZeroChannel);
            }
            Ok(strongest / (entries * snr))
        })
        .collect()
}

pub(crate) fn block_energy(block: &[Complex32]) -> f64 {
    block.iter().map(|z| (z.re as f64) * (z.re as f64) + (z.im as f64) * (z.im as f64)).sum()
}

/// Truncates to the first `taps` delay taps and adds i.i.d. circular complex
/// Gaussian noise calibrated per AP (see [`noise_variances`]).
///
/// `max_snr_db = +inf` returns the truncated dataset without noise. An AP
/// whose channel is zero in every sample yields [`Error::ZeroChannel`].
pub fn add_noise(ds: &CsiDataset, max_snr_db: f64, taps: usize, seed: u64) -> Result<CsiDataset> {
    if ds.is_empty() {
        return Err(Error::InvalidInput("empty dataset".into()));
    }
    if max_snr_db.is_nan() {
        return Err(Error::InvalidInput("SNR must not be NaN".into()));
    }
    let mut out = match ds.domain {
        Domain::Frequency => truncate_dataset(ds, taps)?,
        Domain::Delay if ds.cols == taps => ds.clone(),
        Domain::Delay => truncate_dataset(ds, taps)?,
    };
    if max_snr_db == f64::INFINITY {
        return Ok(out);
    }
    let variances = noise_variances(&out, max_snr_db)?;
    let mut rng = stream_rng(seed, stream::NOISE);
    let block = out.antennas_per_ap * out.cols;
    let n = out.len();
    let per_ap: Vec<Normal<f64>> = variances
        .iter()
        .map(|v| Normal::new(0.0, crate::math::sqrt(v / 2.0)).map_err(|_| Error::Numerical("noise deviation")))
        .collect::<Result<_>>()?;
    for i in 0..n {
        for (a, chunk) in out.sample_mut(i).chunks_exact_mut(block).enumerate() {
            let dist = &per_ap[a];
            for z in chunk {
                let re = z.re as f64 + dist.sample(&mut rng);
                let im = z.im as f64 + dist.sample(&mut rng);
                *z = Complex32::new(re as f32, im as f32);
            }
        }
    }
    Ok(out)
}
