//! Channel charting in real-world coordinates.
//!
//! This crate holds the allocation-only algorithmic core: a synthetic
//! distributed-MIMO channel simulator, delay-domain CSI features, the
//! channel-charting network with its optimizer, the triplet / bilateration /
//! bounding-box / MSE losses, the training variants, and the chart quality
//! metrics. File formats, configuration parsing and the command line live in
//! the `geochart` companion crate.

#![no_std]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
pub mod features;
pub mod gradcheck;
pub mod losses;
pub(crate) mod math;
pub mod metrics;
pub mod net;
pub mod rng;
pub mod sim;
pub mod train;

pub use error::{Error, Result};

/// Dimension of the channel chart (the UE height is fixed).
pub const CHART_DIM: usize = 2;

/// A point in the channel chart or a horizontal real-world position.
pub type Point2 = [f64; CHART_DIM];

/// A real-world position in meters.
pub type Point3 = [f64; 3];

/// Truncates a 3-D position to its horizontal coordinates.
#[inline]
pub fn horizontal(p: &Point3) -> Point2 {
    [p[0], p[1]]
}
