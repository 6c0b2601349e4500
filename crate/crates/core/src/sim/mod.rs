//! Synthetic distributed-MIMO scenarios.
//!
//! A scenario is a set of multi-antenna APs with known positions and LoS
//! bounding boxes, a meandering UE trajectory, and a list of 2-D wall segments.
//! The channel between the UE and each AP is a LoS ray (when no wall blocks
//! the direct segment) plus a few rays bounced off fixed scatterers.

mod channel;
mod geometry;
mod noise;
mod split;
mod trajectory;

use alloc::vec::Vec;

use num_complex::Complex32;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::{Point2, Point3};

pub use channel::{synthesize_csi, ChannelModel};
pub use geometry::los_visible;
pub use noise::{add_noise, noise_variances};
pub use split::split_train_test;
pub use trajectory::generate_trajectory;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Axis-aligned rectangle in the horizontal plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let r = Rect { x_min, x_max, y_min, y_max };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max].iter().all(|v| v.is_finite());
        if !finite || self.x_min >= self.x_max || self.y_min >= self.y_max {
            return Err(invalid("rectangle requires x_min < x_max and y_min < y_max"));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn diagonal(&self) -> f64 {
        crate::math::norm2(&[self.width(), self.height()])
    }

    /// Closed-interval containment on both axes.
    pub fn contains(&self, p: &Point2) -> bool {
        p[0] >= self.x_min && p[0] <= self.x_max && p[1] >= self.y_min && p[1] <= self.y_max
    }
}

/// One access point.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ApConfig {
    pub position: Point3,
    pub antenna_count: usize,
    /// Rectangle enclosing the area from which the AP is seen in LoS.
    pub los_box: Rect,
    /// Axis of the half-wavelength uniform linear array (unit vector).
    pub array_orientation: Point2,
}

impl ApConfig {
    pub fn validate(&self) -> Result<()> {
        self.los_box.validate()?;
        if self.antenna_count == 0 {
            return Err(invalid("AP needs at least one antenna"));
        }
        let n = crate::math::norm2(&self.array_orientation);
        if !((n - 1.0).abs() <= 1e-6) {
            return Err(invalid("array orientation must be a unit vector"));
        }
        if !self.position.iter().all(|v| v.is_finite()) {
            return Err(invalid("AP position must be finite"));
        }
        Ok(())
    }
}

/// Serpentine sweep direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Meander {
    /// Columns of constant x traversed alternately north and south.
    NorthSouth,
    /// Rows of constant y traversed alternately east and west.
    EastWest,
    /// A north-south sweep followed by an east-west sweep.
    Both,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct TrajectorySpec {
    pub area: Rect,
    pub step_m: f64,
    pub pattern: Meander,
    pub sample_period_s: f64,
}

/// Occluding wall between two points of the horizontal plane.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Wall {
    pub start: Point2,
    pub end: Point2,
}

/// Parameters of the parametric multipath model.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ChannelParams {
    /// Scatterers per AP, placed uniformly inside the AP's LoS box.
    pub scatterers_per_ap: usize,
    /// Per-scatterer attenuation range in dB relative to a LoS ray of equal
    /// path length; drawn uniformly once per scatterer.
    pub scatter_loss_db: [f64; 2],
    /// Extra penetration loss in dB applied to every ray of a non-LoS link.
    pub nlos_loss_db: f64,
    /// Apply an independent uniform phase to each AP block of each sample.
    pub ap_phase_offsets: bool,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            scatterers_per_ap: 3,
            scatter_loss_db: [15.0, 25.0],
            nlos_loss_db: 20.0,
            ap_phase_offsets: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ScenarioConfig {
    pub aps: Vec<ApConfig>,
    pub subcarrier_count: usize,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub ue_height_m: f64,
    pub trajectory: TrajectorySpec,
    #[cfg_attr(feature = "serde", serde(default))]
    pub walls: Vec<Wall>,
    /// Expected SNR of the strongest sample of each AP; `+inf` disables noise.
    pub max_snr_db: f64,
    pub seed: u64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub channel: ChannelParams,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.aps.len() < 2 {
            return Err(invalid("a scenario needs at least two APs"));
        }
        for ap in &self.aps {
            ap.validate()?;
        }
        let m = self.aps[0].antenna_count;
        if self.aps.iter().any(|ap| ap.antenna_count != m) {
            return Err(invalid("all APs must have the same antenna count"));
        }
        if self.subcarrier_count == 0 {
            return Err(invalid("subcarrier count must be positive"));
        }
        if !(self.carrier_hz > 0.0 && self.bandwidth_hz > 0.0) {
            return Err(invalid("carrier and bandwidth must be positive"));
        }
        self.trajectory.area.validate()?;
        if !(self.trajectory.step_m > 0.0) {
            return Err(invalid("trajectory step must be positive"));
        }
        if !(self.trajectory.sample_period_s > 0.0) {
            return Err(invalid("sample period must be positive"));
        }
        let [lo, hi] = self.channel.scatter_loss_db;
        if !(lo <= hi) || self.channel.nlos_loss_db < 0.0 {
            return Err(invalid("invalid scatter attenuation range"));
        }
        Ok(())
    }

    pub fn antennas_per_ap(&self) -> usize {
        self.aps[0].antenna_count
    }

    pub fn subcarrier_spacing_hz(&self) -> f64 {
        self.bandwidth_hz / self.subcarrier_count as f64
    }

    pub fn ap_xy(&self) -> Vec<Point2> {
        self.aps.iter().map(|ap| crate::horizontal(&ap.position)).collect()
    }

    pub fn los_boxes(&self) -> Vec<Rect> {
        self.aps.iter().map(|ap| ap.los_box).collect()
    }
}

/// Which transform domain the CSI columns are in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Domain {
    /// Columns are OFDM subcarriers.
    Frequency,
    /// Columns are the leading delay taps.
    Delay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// CSI matrices of a UE trajectory.
///
/// Sample `n` occupies `csi[n * rows * cols..(n + 1) * rows * cols]` in
/// row-major order; rows are AP-major, so rows `a * M_R..(a + 1) * M_R`
/// belong to AP `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiDataset {
    pub ap_count: usize,
    pub antennas_per_ap: usize,
    pub cols: usize,
    pub domain: Domain,
    pub csi: Vec<Complex32>,
    pub timestamps: Vec<f64>,
    pub positions: Option<Vec<Point3>>,
    /// Simulator ground truth: `los[n * A + a]` is true when AP `a` sees
    /// sample `n` in LoS.
    pub los: Option<Vec<bool>>,
    pub split: Vec<Split>,
}

impl CsiDataset {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// Total receive antennas `B = A * M_R`.
    pub fn rows(&self) -> usize {
        self.ap_count * self.antennas_per_ap
    }

    pub fn sample_len(&self) -> usize {
        self.rows() * self.cols
    }

    pub fn sample(&self, n: usize) -> &[Complex32] {
        let len = self.sample_len();
        &self.csi[n * len..(n + 1) * len]
    }

    pub fn sample_mut(&mut self, n: usize) -> &mut [Complex32] {
        let len = self.sample_len();
        &mut self.csi[n * len..(n + 1) * len]
    }

    /// The `M_R x cols` block of AP `a` in sample `n`.
    pub fn ap_block(&self, n: usize, a: usize) -> &[Complex32] {
        let len = self.antennas_per_ap * self.cols;
        &self.sample(n)[a * len..(a + 1) * len]
    }

    pub fn indices(&self, which: Split) -> Vec<usize> {
        self.split.iter().enumerate().filter(|(_, s)| **s == which).map(|(i, _)| i).collect()
    }

    pub fn train_indices(&self) -> Vec<usize> {
        self.indices(Split::Train)
    }

    pub fn test_indices(&self) -> Vec<usize> {
        self.indices(Split::Test)
    }

    pub fn los_flag(&self, n: usize, a: usize) -> Option<bool> {
        self.los.as_ref().map(|l| l[n * self.ap_count + a])
    }

    /// Checks shapes and strict timestamp monotonicity.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if self.ap_count == 0 || self.antennas_per_ap == 0 || self.cols == 0 {
            return Err(invalid("dataset dimensions must be positive"));
        }
        if self.csi.len() != n * self.sample_len() {
            return Err(Error::Shape { what: "csi entries", expected: n * self.sample_len(), found: self.csi.len() });
        }
        if self.split.len() != n {
            return Err(Error::Shape { what: "split flags", expected: n, found: self.split.len() });
        }
        if let Some(p) = &self.positions {
            if p.len() != n {
                return Err(Error::Shape { what: "positions", expected: n, found: p.len() });
            }
        }
        if let Some(l) = &self.los {
            if l.len() != n * self.ap_count {
                return Err(Error::Shape { what: "los flags", expected: n * self.ap_count, found: l.len() });
            }
        }
        if self.timestamps.iter().any(|t| !t.is_finite()) {
            return Err(invalid("timestamps must be finite"));
        }
        if self.timestamps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("timestamps must be strictly increasing"));
        }
        Ok(())
    }
}
