use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::{Complex32, Complex64};
use rand::Rng as _;

use super::{generate_trajectory, los_visible, CsiDataset, Domain, ScenarioConfig, Split, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::math::{dist3, powf, sin_cos, sqrt};
use crate::rng::{stream, stream_rng};
use crate::Point3;

/// A fixed point reflector serving one AP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scatterer {
    pub position: Point3,
    /// Attenuation relative to a LoS ray of the same path length, in dB.
    pub loss_db: f64,
}

/// Static propagation environment of a scenario: AP geometry, walls and the
/// scatterers drawn from the scenario seed.
#[derive(Debug, Clone)]
pub struct ChannelModel<'a> {
    cfg: &'a ScenarioConfig,
    scatterers: Vec<Vec<Scatterer>>,
    ap_gain: Vec<f64>,
    freqs: Vec<f64>,
}

impl<'a> ChannelModel<'a> {
    pub fn new(cfg: &'a ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = stream_rng(cfg.seed, stream::SCATTERERS);
        let [lo, hi] = cfg.channel.scatter_loss_db;
        let scatterers = cfg
            .aps
            .iter()
            .map(|ap| {
                let b = &ap.los_box;
                let top = ap.position[2].max(cfg.ue_height_m).max(0.0);
                (0..cfg.channel.scatterers_per_ap)
                    .map(|_| Scatterer {
                        position: [
                            b.x_min + rng.random::<f64>() * b.width(),
                            b.y_min + rng.random::<f64>() * b.height(),
                            rng.random::<f64>() * top,
                        ],
                        loss_db: lo + rng.random::<f64>() * (hi - lo),
                    })
                    .collect()
            })
            .collect();
        let w = cfg.subcarrier_count;
        let df = cfg.subcarrier_spacing_hz();
        let freqs = (0..w).map(|i| cfg.carrier_hz + (i as f64 - (w as f64 - 1.0) / 2.0) * df).collect();
        Ok(ChannelModel { cfg, scatterers, ap_gain: vec![1.0; cfg.aps.len()], freqs })
    }

    pub fn scatterers(&self, ap: usize) -> &[Scatterer] {
        &self.scatterers[ap]
    }

    /// Removes every ray of AP `ap`.
    pub fn mute_ap(&mut self, ap: usize) {
        self.ap_gain[ap] = 0.0;
    }

    /// Writes the noiseless `M_R x W` channel of AP `ap` into `out` and
    /// returns whether the link is LoS.
    pub fn ap_block(&self, ap: usize, ue: &Point3, out: &mut [Complex64]) -> Result<bool> {
        let cfg = self.cfg;
        let ap_cfg = &cfg.aps[ap];
        let m_r = ap_cfg.antenna_count;
        let w = cfg.subcarrier_count;
        debug_assert_eq!(out.len(), m_r * w);
        out.fill(Complex64::new(0.0, 0.0));

        let d = dist3(&ap_cfg.position, ue);
        if d < 1e-9 {
            return Err(Error::SingularGeometry);
        }
        let los = los_visible(ap_cfg, ue, &cfg.walls);
        let gain = self.ap_gain[ap];
        let nlos_amp = if los { 1.0 } else { amplitude_from_db(cfg.channel.nlos_loss_db) };

        if los {
            self.add_ray(ap, out, gain / d, d, ue);
        }
        for s in &self.scatterers[ap] {
            let path = dist3(&ap_cfg.position, &s.position) + dist3(&s.position, ue);
            let amp = gain * nlos_amp * amplitude_from_db(s.loss_db) / path;
            self.add_ray(ap, out, amp, path, &s.position);
        }
        Ok(los)
    }

    /// Noiseless `B x W` channel of a UE position with per-AP LoS flags.
    pub fn sample(&self, ue: &Point3) -> Result<(Vec<Complex64>, Vec<bool>)> {
        let m_r = self.cfg.antennas_per_ap();
        let w = self.cfg.subcarrier_count;
        let mut h = vec![Complex64::new(0.0, 0.0); self.cfg.aps.len() * m_r * w];
        let mut flags = Vec::with_capacity(self.cfg.aps.len());
        for (a, block) in h.chunks_exact_mut(m_r * w).enumerate() {
            flags.push(self.ap_block(a, ue, block)?);
        }
        Ok((h, flags))
    }

    /// Adds one plane-wave ray of amplitude `amp` and path length `path`
    /// arriving from `source`.
    fn add_ray(&self, ap: usize, out: &mut [Complex64], amp: f64, path: f64, source: &Point3) {
        if amp == 0.0 {
            return;
        }
        let ap_cfg = &self.cfg.aps[ap];
        let w = self.freqs.len();
        let delay = path / SPEED_OF_LIGHT;
        let dir = [
            source[0] - ap_cfg.position[0],
            source[1] - ap_cfg.position[1],
            source[2] - ap_cfg.position[2],
        ];
        let norm = sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
        let cos_theta = if norm > 0.0 {
            (dir[0] * ap_cfg.array_orientation[0] + dir[1] * ap_cfg.array_orientation[1]) / norm
        } else {
            0.0
        };
        let spectrum: Vec<Complex64> = self.freqs.iter().map(|f| amp * phasor(-2.0 * PI * f * delay)).collect();
        for (m, row) in out.chunks_exact_mut(w).enumerate() {
            // Half-wavelength element spacing.
            let steer = phasor(-PI * m as f64 * cos_theta);
            for (o, s) in row.iter_mut().zip(&spectrum) {
                *o += steer * s;
            }
        }
    }
}

fn phasor(angle: f64) -> Complex64 {
    let (s, c) = sin_cos(angle);
    Complex64::new(c, s)
}

fn amplitude_from_db(loss_db: f64) -> f64 {
    powf(10.0, -loss_db / 20.0)
}

/// Generates the noiseless frequency-domain CSI of the scenario trajectory.
///
/// All samples start in the training split. With `ap_phase_offsets` set,
/// each AP block of each sample is rotated by an independent uniform phase.
pub fn synthesize_csi(cfg: &ScenarioConfig) -> Result<CsiDataset> {
    let model = ChannelModel::new(cfg)?;
    let traj = generate_trajectory(cfg)?;
    let a_count = cfg.aps.len();
    let m_r = cfg.antennas_per_ap();
    let w = cfg.subcarrier_count;
    let block = m_r * w;

    let mut phase_rng = stream_rng(cfg.seed, stream::AP_PHASE);
    let mut csi = Vec::with_capacity(traj.len() * a_count * block);
    let mut los = Vec::with_capacity(traj.len() * a_count);
    let mut positions = Vec::with_capacity(traj.len());
    let mut timestamps = Vec::with_capacity(traj.len());
    for (pos, t) in &traj {
        let (h, flags) = model.sample(pos)?;
        for blk in h.chunks_exact(block) {
            let rot = if cfg.channel.ap_phase_offsets {
                phasor(2.0 * PI * phase_rng.random::<f64>())
            } else {
                Complex64::new(1.0, 0.0)
            };
            csi.extend(blk.iter().map(|z| {
                let v = z * rot;
                Complex32::new(v.re as f32, v.im as f32)
            }));
        }
        los.extend(flags);
        positions.push(*pos);
        timestamps.push(*t);
    }
    let n = timestamps.len();
    Ok(CsiDataset {
        ap_count: a_count,
        antennas_per_ap: m_r,
        cols: w,
        domain: Domain::Frequency,
        csi,
        timestamps,
        positions: Some(positions),
        los: Some(los),
        split: vec![Split::Train; n],
    })
}
