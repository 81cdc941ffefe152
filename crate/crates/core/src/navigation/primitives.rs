//! Forward-only Ackermann motion primitives on a heading lattice.

use super::PlanError;
use std::f64::consts::TAU;

/// Spacing of the dense samples stored with each primitive.
pub(crate) const SAMPLE_STEP: f64 = 0.1;
/// Finer spacing used when rasterizing swept cells.
const SWEEP_STEP: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosePoint {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionPrimitive {
    pub start_heading: usize,
    pub end_heading: usize,
    /// Signed curvature (positive turns left).
    pub curvature: f64,
    /// Length of the underlying circular arc.
    pub arc_length: f64,
    /// Exact arc end offset `(dx, dy, dheading)` before snapping.
    pub end_offset: (f64, f64, f64),
    /// End offset snapped onto the lattice, in cells.
    pub end_cell: (i64, i64),
    /// Length of the snapped sample polyline; edge costs use this.
    pub length: f64,
    /// Dense samples relative to the start cell center, first at the origin,
    /// last exactly at the snapped end cell center.
    pub samples: Vec<PosePoint>,
    /// Cell offsets touched by the primitive, sorted and unique.
    pub swept_cells: Vec<(i64, i64)>,
}

pub fn heading_angle(bin: usize, headings: usize) -> f64 {
    bin as f64 * TAU / headings as f64
}

pub fn nearest_heading_bin(angle: f64, headings: usize) -> usize {
    let step = TAU / headings as f64;
    (angle.rem_euclid(TAU) / step).round() as usize % headings
}

fn arc_point(theta0: f64, curvature: f64, s: f64) -> (f64, f64, f64) {
    if curvature == 0.0 {
        (s * theta0.cos(), s * theta0.sin(), theta0)
    } else {
        let th = theta0 + curvature * s;
        ((th.sin() - theta0.sin()) / curvature, (theta0.cos() - th.cos()) / curvature, th)
    }
}

fn cell_of(x: f64, y: f64, cell_size: f64) -> (i64, i64) {
    ((x / cell_size).round() as i64, (y / cell_size).round() as i64)
}

fn build(start_heading: usize, headings: usize, curvature: f64, arc_length: f64, cell_size: f64) -> MotionPrimitive {
    let theta0 = heading_angle(start_heading, headings);
    let (ex, ey, _) = arc_point(theta0, curvature, arc_length);
    let end_cell = cell_of(ex, ey, cell_size);
    let (sx, sy) = (end_cell.0 as f64 * cell_size, end_cell.1 as f64 * cell_size);
    let (cx, cy) = (sx - ex, sy - ey);
    let dtheta = curvature * arc_length;
    let end_heading = nearest_heading_bin(theta0 + dtheta, headings);

    // exact arc plus a correction ramped linearly along the arc, so the
    // polyline is continuous and lands on the lattice
    let sample = |step: f64| -> Vec<PosePoint> {
        let n = ((arc_length / step).ceil() as usize).max(1);
        (0..=n)
            .map(|i| {
                let f = i as f64 / n as f64;
                let (x, y, th) = arc_point(theta0, curvature, arc_length * f);
                PosePoint {
                    x: x + f * cx,
                    y: y + f * cy,
                    heading: th,
                }
            })
            .collect()
    };
    let mut samples = sample(SAMPLE_STEP);
    if let Some(last) = samples.last_mut() {
        last.x = sx;
        last.y = sy;
    }
    let length = samples
        .windows(2)
        .map(|w| ((w[1].x - w[0].x).powi(2) + (w[1].y - w[0].y).powi(2)).sqrt())
        .sum();
    let mut swept: Vec<(i64, i64)> = sample(SWEEP_STEP).iter().map(|p| cell_of(p.x, p.y, cell_size)).collect();
    swept.push(end_cell);
    swept.sort_unstable();
    swept.dedup();
    MotionPrimitive {
        start_heading,
        end_heading,
        curvature,
        arc_length,
        end_offset: (ex, ey, dtheta),
        end_cell,
        length,
        samples,
        swept_cells: swept,
    }
}

/// For every start heading: straight, max left/right and half left/right.
/// Turning arcs are shortened or lengthened so their heading change is a
/// whole number of heading bins (at least one).
pub fn generate_primitives(
    min_turn_radius: f64,
    arc_length: f64,
    headings: usize,
    cell_size: f64,
) -> Result<Vec<MotionPrimitive>, PlanError> {
    if !(min_turn_radius > 0.0) {
        return Err(PlanError::Config(format!("min turn radius {min_turn_radius} must be positive")));
    }
    if headings < 4 {
        return Err(PlanError::Config(format!("need at least 4 heading bins, got {headings}")));
    }
    if !(cell_size > 0.0) || !(arc_length > 0.0) {
        return Err(PlanError::Config("arc length and cell size must be positive".into()));
    }
    let bin = TAU / headings as f64;
    let kmax = 1.0 / min_turn_radius;
    if (arc_length * kmax / bin).round() < 1.0 {
        return Err(PlanError::Config(format!(
            "arc length {arc_length} m at radius {min_turn_radius} m turns less than half a heading bin"
        )));
    }
    if arc_length < cell_size {
        return Err(PlanError::Config(format!(
            "arc length {arc_length} m shorter than a cell ({cell_size} m)"
        )));
    }
    let mut out = Vec::with_capacity(headings * 5);
    for h in 0..headings {
        out.push(build(h, headings, 0.0, arc_length, cell_size));
        for k in [kmax, 0.5 * kmax] {
            let bins = (arc_length * k / bin).round().max(1.0);
            let len = bins * bin / k;
            out.push(build(h, headings, k, len, cell_size));
            out.push(build(h, headings, -k, len, cell_size));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn default_set_has_80() {
        let p = generate_primitives(4.0, 2.0, 16, 0.5).unwrap();
        assert_eq!(p.len(), 80);
        for h in 0..16 {
            assert_eq!(p.iter().filter(|m| m.start_heading == h).count(), 5);
        }
    }

    #[test]
    fn straight_end_offset() {
        let prims = generate_primitives(4.0, 2.0, 16, 0.5).unwrap();
        for m in prims.iter().filter(|m| m.curvature == 0.0) {
            let th = heading_angle(m.start_heading, 16);
            assert_relative_eq!(m.end_offset.0, 2.0 * th.cos(), epsilon = 1e-12);
            assert_relative_eq!(m.end_offset.1, 2.0 * th.sin(), epsilon = 1e-12);
            assert_eq!(m.end_offset.2, 0.0);
            assert_eq!(m.end_heading, m.start_heading);
        }
    }

    #[test]
    fn max_left_from_east() {
        let prims = generate_primitives(4.0, 2.0, 16, 0.5).unwrap();
        let m = prims
            .iter()
            .find(|m| m.start_heading == 0 && (m.curvature - 0.25).abs() < 1e-12)
            .unwrap();
        assert_eq!(m.end_heading, 1);
        let a = 22.5f64.to_radians();
        assert_relative_eq!(m.end_offset.0, 4.0 * a.sin(), epsilon = 1e-12);
        assert_relative_eq!(m.end_offset.1, 4.0 * (1.0 - a.cos()), epsilon = 1e-12);
        assert_relative_eq!(m.end_offset.2, a, epsilon = 1e-12);
        assert_eq!(m.end_cell, (3, 1));
    }

    #[test]
    fn snapping_and_continuity() {
        let cs = 0.5;
        for m in generate_primitives(4.0, 2.0, 16, cs).unwrap() {
            let (sx, sy) = (m.end_cell.0 as f64 * cs, m.end_cell.1 as f64 * cs);
            assert!((sx - m.end_offset.0).abs() <= cs / 2.0 && (sy - m.end_offset.1).abs() <= cs / 2.0);
            assert!(m.curvature.abs() <= 0.25 + 1e-12);
            let last = m.samples.last().unwrap();
            assert_eq!((last.x, last.y), (sx, sy));
            assert_eq!(m.samples[0].x, 0.0);
            for w in m.samples.windows(2) {
                let d = ((w[1].x - w[0].x).powi(2) + (w[1].y - w[0].y).powi(2)).sqrt();
                assert!(d <= 0.25);
            }
            assert!(m.length + 1e-12 >= (sx * sx + sy * sy).sqrt());
            assert!(m.swept_cells.contains(&(0, 0)) && m.swept_cells.contains(&m.end_cell));
            let expect_heading = nearest_heading_bin(heading_angle(m.start_heading, 16) + m.end_offset.2, 16);
            assert_eq!(m.end_heading, expect_heading);
        }
    }

    #[test]
    fn too_short_arc_rejected() {
        assert!(matches!(generate_primitives(4.0, 0.5, 16, 0.25), Err(PlanError::Config(_))));
        assert!(generate_primitives(0.0, 2.0, 16, 0.5).is_err());
    }
}
