use std::f64::consts::PI;

use crate::geometry::Point;
use crate::shapes::ConvexPolygon;
use crate::{Error, Result};

/// One straight boundary element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: Point,
    pub end: Point,
    pub midpoint: Point,
    /// Unit normal pointing out of the object.
    pub normal: Point,
    pub length: f64,
}

impl Segment {
    pub fn new(start: Point, end: Point) -> Self {
        let d = end - start;
        let length = d.norm();
        let tangent = d * (1.0 / length);
        Segment {
            start,
            end,
            midpoint: start.lerp(end, 0.5),
            normal: Point::new(tangent.y, -tangent.x),
            length,
        }
    }

    pub fn tangent(&self) -> Point {
        (self.end - self.start) * (1.0 / self.length)
    }

    /// Point at parameter `t ∈ [0, 1]` along the segment.
    pub fn at(&self, t: f64) -> Point {
        self.start.lerp(self.end, t)
    }

    /// Euclidean distance from `x` to the closed segment.
    pub fn distance_to(&self, x: Point) -> f64 {
        let d = self.end - self.start;
        let t = ((x - self.start).dot(d) / d.norm_sq()).clamp(0.0, 1.0);
        x.distance(self.at(t))
    }
}

/// Piecewise-straight discretization of an object's boundary, traversed
/// counter-clockwise.
#[derive(Debug, Clone)]
pub struct BoundaryMesh {
    segments: Vec<Segment>,
    polygon: ConvexPolygon,
    /// Identifier of the object the mesh was built from, if any.
    pub object_id: Option<String>,
}

impl BoundaryMesh {
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn polygon(&self) -> &ConvexPolygon {
        &self.polygon
    }

    pub fn with_object_id(mut self, id: impl Into<String>) -> Self {
        self.object_id = Some(id.into());
        self
    }

    pub fn max_segment_length(&self) -> f64 {
        self.segments.iter().map(|s| s.length).fold(0.0, f64::max)
    }

    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|s| s.length).sum()
    }
}

/// Subdivides every polygon edge uniformly so that no element is longer than
/// `(2π / k_max) / elements_per_wavelength`.
pub fn build_mesh(
    polygon: &ConvexPolygon,
    k_max: f64,
    elements_per_wavelength: usize,
) -> Result<BoundaryMesh> {
    if !(k_max.is_finite() && k_max > 0.0) {
        return Err(Error::Contract(format!("k_max must be positive, got {k_max}")));
    }
    if elements_per_wavelength < 4 {
        return Err(Error::Contract(format!(
            "elements_per_wavelength must be >= 4, got {elements_per_wavelength}"
        )));
    }
    let h_max = 2.0 * PI / k_max / elements_per_wavelength as f64;
    let v = polygon.vertices();
    let n = v.len();
    let mut segments = Vec::new();
    for i in 0..n {
        let a = v[i];
        let b = v[(i + 1) % n];
        let pieces = ((a.distance(b) / h_max) - 1e-9).ceil().max(1.0) as usize;
        for p in 0..pieces {
            let s = if p == 0 { a } else { a.lerp(b, p as f64 / pieces as f64) };
            let e = if p + 1 == pieces { b } else { a.lerp(b, (p + 1) as f64 / pieces as f64) };
            segments.push(Segment::new(s, e));
        }
    }
    Ok(BoundaryMesh {
        segments,
        polygon: polygon.clone(),
        object_id: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> ConvexPolygon {
        ConvexPolygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ])
        .unwrap()
    }

    #[test]
    fn unit_square_at_one_meter_wavelength() {
        let mesh = build_mesh(&unit_square(), 2.0 * PI, 8).unwrap();
        assert_eq!(mesh.len(), 32);
        assert!((mesh.total_length() - 4.0).abs() < 1e-12);
        assert!(mesh.max_segment_length() <= 0.125 + 1e-12);
    }

    #[test]
    fn normals_point_outward_and_chain_closes() {
        let poly = ConvexPolygon::regular(5, 0.4, Point::new(0.1, -0.05), 0.3).unwrap();
        let mesh = build_mesh(&poly, 40.0, 8).unwrap();
        let c = poly.centroid();
        let segs = mesh.segments();
        for (i, s) in segs.iter().enumerate() {
            assert!(s.normal.dot(s.midpoint - c) > 0.0);
            assert!((s.normal.norm() - 1.0).abs() < 1e-14);
            assert_eq!(s.end, segs[(i + 1) % segs.len()].start);
        }
        assert!((mesh.total_length() - poly.perimeter()).abs() <= 1e-12 * poly.perimeter());
        assert!(mesh.max_segment_length() <= 2.0 * PI / 40.0 / 8.0 * (1.0 + 1e-12));
    }

    #[test]
    fn doubling_frequency_at_least_doubles_each_edge() {
        let tri = ConvexPolygon::regular(3, 0.45, Point::ORIGIN, 0.1).unwrap();
        let coarse = build_mesh(&tri, 10.0, 8).unwrap();
        let fine = build_mesh(&tri, 20.0, 8).unwrap();
        assert!(fine.len() >= 2 * coarse.len());
    }

    #[test]
    fn rejects_bad_density() {
        assert!(build_mesh(&unit_square(), 1.0, 3).is_err());
        assert!(build_mesh(&unit_square(), 0.0, 8).is_err());
    }
}
