//! Binary occupancy image of an object over the inaccessible square.
//!
//! A cell is occupied when the polygon's interior overlaps the cell's
//! interior. Touching along an edge or at a corner does not count; a thin
//! sliver that crosses a cell counts even if it misses the cell center. For
//! a convex polygon and an axis-aligned square this is decided exactly by a
//! separating-axis test over the two coordinate axes and the polygon's edge
//! normals, carried out in grid units.

use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::scene::SceneConfig;
use crate::shapes::ConvexPolygon;
use crate::{Error, Result};

/// Overlap (in cell widths) below which two projections count as touching.
const TOUCH_TOL: f64 = 1e-9;

/// Row-major occupancy bits; row 0 is the bottom (minimum y) row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    pub dim: usize,
    /// 1 = object, 0 = air.
    pub bits: Vec<u8>,
    pub object_id: String,
}

impl OccupancyGrid {
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.bits[row * self.dim + col]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    /// Rotation by +90° about the square's center (x → y, y → −x).
    pub fn rotated_quarter(&self) -> Self {
        let n = self.dim;
        let mut bits = vec![0; n * n];
        for row in 0..n {
            for col in 0..n {
                bits[col * n + (n - 1 - row)] = self.get(row, col);
            }
        }
        OccupancyGrid {
            dim: n,
            bits,
            object_id: self.object_id.clone(),
        }
    }
}

/// Rasterizes `polygon` onto the inaccessible square of `cfg`.
pub fn rasterize(polygon: &ConvexPolygon, object_id: &str, cfg: &SceneConfig) -> Result<OccupancyGrid> {
    cfg.validate()?;
    let square = cfg.inaccessible_square();
    let n = cfg.inaccessible_dim();
    let h = cfg.cell_size;
    let to_grid = |p: Point| Point::new((p.x - square.min.x) / h, (p.y - square.min.y) / h);
    let verts: Vec<Point> = polygon.vertices().iter().map(|&v| to_grid(v)).collect();
    let (lo, hi) = bounds(&verts);
    let normals: Vec<Point> = (0..verts.len())
        .map(|i| (verts[(i + 1) % verts.len()] - verts[i]).rotated_quarter())
        .collect();
    let span = |f: f64| f.floor().clamp(0.0, n as f64) as usize;
    let mut bits = vec![0u8; n * n];
    for row in span(lo.y)..span(hi.y + 1.0) {
        for col in span(lo.x)..span(hi.x + 1.0) {
            if overlaps(&verts, &normals, lo, hi, col as f64, row as f64) {
                bits[row * n + col] = 1;
            }
        }
    }
    Ok(OccupancyGrid {
        dim: n,
        bits,
        object_id: object_id.to_string(),
    })
}

fn bounds(verts: &[Point]) -> (Point, Point) {
    verts.iter().fold(
        (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY)),
        |(lo, hi), v| (Point::new(lo.x.min(v.x), lo.y.min(v.y)), Point::new(hi.x.max(v.x), hi.y.max(v.y))),
    )
}

/// Open-interior overlap of the polygon with the unit cell at `(x0, y0)`.
fn overlaps(verts: &[Point], normals: &[Point], lo: Point, hi: Point, x0: f64, y0: f64) -> bool {
    let apart = |a_min: f64, a_max: f64, b_min: f64, b_max: f64, scale: f64| {
        a_max.min(b_max) - a_min.max(b_min) <= TOUCH_TOL * scale
    };
    if apart(lo.x, hi.x, x0, x0 + 1.0, 1.0) || apart(lo.y, hi.y, y0, y0 + 1.0, 1.0) {
        return false;
    }
    let corners = [
        Point::new(x0, y0),
        Point::new(x0 + 1.0, y0),
        Point::new(x0, y0 + 1.0),
        Point::new(x0 + 1.0, y0 + 1.0),
    ];
    for &axis in normals {
        let (p_min, p_max) = project(verts, axis);
        let (c_min, c_max) = project(&corners, axis);
        if apart(p_min, p_max, c_min, c_max, axis.norm()) {
            return false;
        }
    }
    true
}

fn project(points: &[Point], axis: Point) -> (f64, f64) {
    points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let d = p.dot(axis);
        (lo.min(d), hi.max(d))
    })
}

/// `|occupied area − polygon area| / polygon area`.
pub fn occupancy_area_error(grid: &OccupancyGrid, polygon: &ConvexPolygon, cfg: &SceneConfig) -> Result<f64> {
    if grid.dim != cfg.inaccessible_dim() {
        return Err(Error::Contract(format!(
            "grid is {0}×{0} but the config expects {1}×{1}",
            grid.dim,
            cfg.inaccessible_dim()
        )));
    }
    let area = polygon.area();
    if area <= 0.0 {
        return Err(Error::Domain("polygon has no area".into()));
    }
    let covered = grid.count() as f64 * cfg.cell_size * cfg.cell_size;
    Ok((covered - area).abs() / area)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_aligned_square_has_no_area_error() {
        let cfg = SceneConfig::desk();
        let poly = ConvexPolygon::new(vec![
            Point::new(-0.18, -0.1),
            Point::new(0.22, -0.1),
            Point::new(0.22, 0.18),
            Point::new(-0.18, 0.18),
        ])
        .unwrap();
        let g = rasterize(&poly, "sq", &cfg).unwrap();
        assert_eq!(g.count(), 10 * 7);
        assert!(occupancy_area_error(&g, &poly, &cfg).unwrap() < 1e-9);
    }

    #[test]
    fn whole_square_fills_the_grid() {
        let cfg = SceneConfig::desk();
        let poly = ConvexPolygon::regular(4, 0.5 * 2f64.sqrt(), Point::ORIGIN, std::f64::consts::FRAC_PI_4).unwrap();
        let g = rasterize(&poly, "all", &cfg).unwrap();
        assert_eq!(g.count(), 25 * 25);
    }

    #[test]
    fn thin_sliver_marks_every_crossed_cell() {
        // A needle along y = 0.001 m crosses row 12 without covering any center.
        let cfg = SceneConfig::desk();
        let poly = ConvexPolygon::new(vec![
            Point::new(-0.45, 0.0005),
            Point::new(0.45, 0.0005),
            Point::new(0.45, 0.0015),
        ])
        .unwrap();
        let g = rasterize(&poly, "needle", &cfg).unwrap();
        let row: Vec<u8> = (0..25).map(|c| g.get(12, c)).collect();
        assert_eq!(row.iter().filter(|&&b| b == 1).count(), 23);
        assert_eq!(g.count(), 23);
    }

    #[test]
    fn touching_a_cell_edge_does_not_occupy_it() {
        let cfg = SceneConfig::desk();
        // Right edge on x = 0.02, the boundary between columns 12 and 13.
        let poly = ConvexPolygon::new(vec![
            Point::new(-0.1, -0.1),
            Point::new(0.02, -0.1),
            Point::new(0.02, 0.1),
        ])
        .unwrap();
        let g = rasterize(&poly, "edge", &cfg).unwrap();
        assert!((0..25).all(|r| g.get(r, 13) == 0));
        assert!((0..25).any(|r| g.get(r, 12) == 1));
    }
}
