use super::{ApConfig, Wall};
use crate::{Point2, Point3};

fn orient(p: &Point2, q: &Point2, r: &Point2) -> f64 {
    (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
}

/// Strict crossing of the open segments `p-q` and `a-b`. Touching at an
/// endpoint or collinear overlap does not count.
pub(crate) fn segments_cross(p: &Point2, q: &Point2, a: &Point2, b: &Point2) -> bool {
    let o1 = orient(p, q, a);
    let o2 = orient(p, q, b);
    let o3 = orient(a, b, p);
    let o4 = orient(a, b, q);
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

/// True iff the horizontal segment AP -> UE crosses no wall.
pub fn los_visible(ap: &ApConfig, ue: &Point3, walls: &[Wall]) -> bool {
    let p = [ap.position[0], ap.position[1]];
    let q = [ue[0], ue[1]];
    !walls.iter().any(|w| segments_cross(&p, &q, &w.start, &w.end))
}
