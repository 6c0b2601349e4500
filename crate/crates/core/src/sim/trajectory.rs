use alloc::vec::Vec;

use super::{Meander, Rect, ScenarioConfig};
use crate::error::{Error, Result};
use crate::math::floor;
use crate::{Point2, Point3};

/// Serpentine UE trajectory over the configured area.
///
/// Consecutive positions are exactly `step_m` apart; timestamps advance by
/// `sample_period_s` starting at zero.
pub fn generate_trajectory(cfg: &ScenarioConfig) -> Result<Vec<(Point3, f64)>> {
    let spec = &cfg.trajectory;
    spec.area.validate()?;
    let path = meander_path(&spec.area, spec.step_m, spec.pattern)?;
    Ok(path
        .into_iter()
        .enumerate()
        .map(|(n, p)| ([p[0], p[1], cfg.ue_height_m], n as f64 * spec.sample_period_s))
        .collect())
}

fn grid_count(extent: f64, step: f64) -> usize {
    // Tolerate representation error in extent / step for exact multiples.
    floor(extent / step + 1e-9) as usize + 1
}

pub(crate) fn meander_path(area: &Rect, step: f64, pattern: Meander) -> Result<Vec<Point2>> {
    if !(step > 0.0) || step > area.width() || step > area.height() {
        return Err(Error::DegenerateTrajectory);
    }
    let nx = grid_count(area.width(), step);
    let ny = grid_count(area.height(), step);
    let x = |i: usize| area.x_min + i as f64 * step;
    let y = |j: usize| area.y_min + j as f64 * step;

    let mut path = Vec::with_capacity(nx * ny);
    if matches!(pattern, Meander::NorthSouth | Meander::Both) {
        for i in 0..nx {
            for k in 0..ny {
                let j = if i % 2 == 0 { k } else { ny - 1 - k };
                path.push([x(i), y(j)]);
            }
        }
    }
    match pattern {
        Meander::NorthSouth => {}
        Meander::EastWest => {
            for j in 0..ny {
                for k in 0..nx {
                    let i = if j % 2 == 0 { k } else { nx - 1 - k };
                    path.push([x(i), y(j)]);
                }
            }
        }
        Meander::Both => {
            // Continue from the corner where the north-south sweep ended so the
            // step length stays constant across the junction.
            let ends_low = (nx - 1) % 2 == 1;
            for r in 0..ny {
                let j = if ends_low { r } else { ny - 1 - r };
                for k in 0..nx {
                    let i = if r % 2 == 0 { nx - 1 - k } else { k };
                    if r == 0 && k == 0 {
                        continue;
                    }
                    path.push([x(i), y(j)]);
                }
            }
        }
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::dist2;

    fn square(side: f64) -> Rect {
        Rect::new(0.0, side, 0.0, side).unwrap()
    }

    #[test]
    fn ten_by_ten_unit_step_has_121_points() {
        let p = meander_path(&square(10.0), 1.0, Meander::NorthSouth).unwrap();
        assert_eq!(p.len(), 121);
        assert_eq!(p[0], [0.0, 0.0]);
        assert_eq!(p[10], [0.0, 10.0]);
        assert_eq!(p[11], [1.0, 10.0]);
    }

    #[test]
    fn steps_are_constant_for_every_pattern() {
        let area = Rect::new(-2.0, 5.0, 1.0, 9.5).unwrap();
        for pattern in [Meander::NorthSouth, Meander::EastWest, Meander::Both] {
            let p = meander_path(&area, 0.5, pattern).unwrap();
            for w in p.windows(2) {
                assert!((dist2(&w[0], &w[1]) - 0.5).abs() < 1e-12, "{pattern:?}");
            }
            assert!(p.iter().all(|q| area.contains(q)));
        }
        let ns = meander_path(&area, 0.5, Meander::NorthSouth).unwrap().len();
        let both = meander_path(&area, 0.5, Meander::Both).unwrap().len();
        assert_eq!(both, 2 * ns - 1);
    }

    #[test]
    fn outdoor_grid_count() {
        let area = Rect::new(0.0, 83.0, 0.0, 122.0).unwrap();
        let p = meander_path(&area, 0.4, Meander::NorthSouth).unwrap();
        assert_eq!(p.len(), (207 + 1) * (305 + 1));
    }

    #[test]
    fn oversized_step_is_degenerate() {
        assert_eq!(meander_path(&square(1.0), 2.0, Meander::NorthSouth), Err(Error::DegenerateTrajectory));
        assert_eq!(meander_path(&square(1.0), 0.0, Meander::NorthSouth), Err(Error::DegenerateTrajectory));
    }
}
