//! Convex polygon populations: vertices collocated on a circle, optional
//! scaling about the centroid, then a random translation that keeps the
//! object inside the inaccessible square.
//!
//! Objects are vertically invariant prisms, so the horizontal cross-section
//! is the complete geometry.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{self, Point, Square};
use crate::{Error, Result};

/// Vertex counts of the generated prism families.
pub const CATEGORIES: [usize; 5] = [3, 4, 5, 6, 7];

/// Scaling factors are drawn uniformly from this range.
pub const SCALE_RANGE: (f64, f64) = (0.6, 1.0);

/// Slack for containment tests against the inaccessible square, m.
pub const CONTAINMENT_TOL: f64 = 1e-12;

const REDRAW_BUDGET: usize = 10_000;
const OVERLAP_RETRY_BUDGET: usize = 1_000;

/// A strictly convex polygon with counter-clockwise vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
}

impl ConvexPolygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::Contract(format!(
                "a polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::Contract("non-finite polygon vertex".into()));
        }
        let n = vertices.len();
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            if a == b {
                return Err(Error::Contract(format!("repeated vertex at index {i}")));
            }
            if (b - a).cross(c - b) <= 0.0 {
                return Err(Error::Contract(format!(
                    "polygon is not strictly convex counter-clockwise at vertex {}",
                    (i + 1) % n
                )));
            }
        }
        // Consecutive left turns can still wind more than once.
        let winding: f64 = (0..n)
            .map(|i| {
                let e0 = vertices[(i + 1) % n] - vertices[i];
                let e1 = vertices[(i + 2) % n] - vertices[(i + 1) % n];
                e0.cross(e1).atan2(e0.dot(e1))
            })
            .sum();
        if (winding - 2.0 * PI).abs() > 1e-6 {
            return Err(Error::Contract("polygon winds more than once".into()));
        }
        Ok(ConvexPolygon { vertices })
    }

    /// Regular `n`-gon with circumradius `radius` centered at `center`,
    /// first vertex at angle `phase`.
    pub fn regular(n: usize, radius: f64, center: Point, phase: f64) -> Result<Self> {
        let vertices = (0..n)
            .map(|k| center + Point::from_polar(radius, phase + 2.0 * PI * k as f64 / n as f64))
            .collect();
        ConvexPolygon::new(vertices)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Vertex count; for generated shapes this is the prism family label.
    pub fn category(&self) -> usize {
        self.vertices.len()
    }

    pub fn area(&self) -> f64 {
        geometry::signed_area(&self.vertices)
    }

    pub fn perimeter(&self) -> f64 {
        geometry::perimeter(&self.vertices)
    }

    pub fn centroid(&self) -> Point {
        geometry::centroid(&self.vertices)
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        (lo, hi)
    }

    pub fn fits_in(&self, square: &Square) -> bool {
        self.vertices.iter().all(|&v| square.contains(v, CONTAINMENT_TOL))
    }

    /// Signed distance-like test: positive strictly inside, zero on the
    /// boundary, negative outside. Returns the minimum edge cross product
    /// normalized by edge length (the distance to the nearest edge line).
    pub fn inside_margin(&self, p: Point) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                (b - a).cross(p - a) / (b - a).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, p: Point) -> bool {
        self.inside_margin(p) >= 0.0
    }

    pub fn scaled_about_centroid(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::Contract(format!("scale factor must be positive, got {factor}")));
        }
        let c = self.centroid();
        ConvexPolygon::new(self.vertices.iter().map(|&v| c + (v - c) * factor).collect())
    }

    pub fn translated(&self, offset: Point) -> Self {
        ConvexPolygon {
            vertices: self.vertices.iter().map(|&v| v + offset).collect(),
        }
    }

    /// Rotation about the origin.
    pub fn rotated(&self, angle: f64) -> Self {
        ConvexPolygon {
            vertices: self.vertices.iter().map(|v| v.rotated(angle)).collect(),
        }
    }

    pub fn rotated_quarter(&self) -> Self {
        ConvexPolygon {
            vertices: self.vertices.iter().map(|v| v.rotated_quarter()).collect(),
        }
    }
}

/// Largest vertex displacement between two polygons with the same vertex
/// count, minimized over cyclic relabelings. `None` when counts differ.
pub fn vertex_set_distance(a: &ConvexPolygon, b: &ConvexPolygon) -> Option<f64> {
    let n = a.category();
    if n != b.category() {
        return None;
    }
    (0..n)
        .map(|shift| {
            (0..n)
                .map(|k| a.vertices[k].distance(b.vertices[(k + shift) % n]))
                .fold(0.0, f64::max)
        })
        .reduce(f64::min)
}

/// Vertices of a `category`-gon on the circle of `radius` about `center`,
/// at sorted random angles no closer than `2π / (4·category)`.
pub fn generate_polygon<R: Rng + ?Sized>(
    category: usize,
    radius: f64,
    center: Point,
    rng: &mut R,
) -> Result<ConvexPolygon> {
    if !CATEGORIES.contains(&category) {
        return Err(Error::Contract(format!("category {category} not in 3..=7")));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::Contract(format!("radius must be positive, got {radius}")));
    }
    let min_gap = 2.0 * PI / (4.0 * category as f64);
    for _ in 0..REDRAW_BUDGET {
        let mut angles: Vec<f64> = (0..category).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
        angles.sort_by(f64::total_cmp);
        let gaps_ok = (0..category).all(|i| {
            let next = if i + 1 == category { angles[0] + 2.0 * PI } else { angles[i + 1] };
            next - angles[i] >= min_gap
        });
        if !gaps_ok {
            continue;
        }
        let vertices = angles
            .iter()
            .map(|&t| center + Point::from_polar(radius, t))
            .collect();
        if let Ok(p) = ConvexPolygon::new(vertices) {
            return Ok(p);
        }
    }
    Err(Error::ShapeGeneration(format!(
        "no admissible {category}-gon after {REDRAW_BUDGET} draws"
    )))
}

/// Scale about the centroid by a factor drawn from [`SCALE_RANGE`],
/// redrawing while the result escapes `square`.
pub fn scale_polygon<R: Rng + ?Sized>(
    p: &ConvexPolygon,
    square: &Square,
    rng: &mut R,
) -> Result<(ConvexPolygon, f64)> {
    for _ in 0..REDRAW_BUDGET {
        let factor = SCALE_RANGE.0 + (SCALE_RANGE.1 - SCALE_RANGE.0) * rng.random::<f64>();
        let scaled = p.scaled_about_centroid(factor)?;
        if scaled.fits_in(square) {
            return Ok((scaled, factor));
        }
    }
    Err(Error::ShapeGeneration("no scale factor keeps the polygon inside".into()))
}

/// Uniform random offset keeping the polygon's bounding box inside `square`.
pub fn translate_polygon<R: Rng + ?Sized>(
    p: &ConvexPolygon,
    square: &Square,
    rng: &mut R,
) -> Result<ConvexPolygon> {
    let (lo, hi) = p.bounding_box();
    let max = square.max();
    let mut range = |low: f64, high: f64| -> Result<f64> {
        if high < low - CONTAINMENT_TOL {
            return Err(Error::Contract("polygon does not fit in the square".into()));
        }
        if high <= low {
            Ok(0.0)
        } else {
            Ok(low + (high - low) * rng.random::<f64>())
        }
    };
    let dx = range(square.min.x - lo.x, max.x - hi.x)?;
    let dy = range(square.min.y - lo.y, max.y - hi.y)?;
    Ok(p.translated(Point::new(dx, dy)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Training,
    Test,
}

impl Split {
    pub fn tag(self) -> &'static str {
        match self {
            Split::Training => "train",
            Split::Test => "test",
        }
    }
}

/// Recipe for one population of objects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeSetSpec {
    pub split: Split,
    /// Objects per vertex-count family; radii are assigned round-robin.
    pub instances_per_category: usize,
    pub circle_radii: Vec<f64>,
    pub scaling_enabled: bool,
    pub rng_seed: u64,
    /// Vertex-count families to draw, in generation order.
    #[serde(default = "default_categories")]
    pub categories: Vec<usize>,
}

fn default_categories() -> Vec<usize> {
    CATEGORIES.to_vec()
}

impl ShapeSetSpec {
    /// Vertices on the circle inscribed in the inaccessible square, with scaling.
    pub fn training(inaccessible_side: f64, instances_per_category: usize, rng_seed: u64) -> Self {
        ShapeSetSpec {
            split: Split::Training,
            instances_per_category,
            circle_radii: vec![0.5 * inaccessible_side],
            scaling_enabled: true,
            rng_seed,
            categories: default_categories(),
        }
    }

    /// Vertices on four fixed radii, no scaling.
    pub fn test(instances_per_category: usize, rng_seed: u64) -> Self {
        ShapeSetSpec {
            split: Split::Test,
            instances_per_category,
            circle_radii: vec![0.30, 0.35, 0.40, 0.45],
            scaling_enabled: false,
            rng_seed,
            categories: default_categories(),
        }
    }

    pub fn total(&self) -> usize {
        self.instances_per_category * self.categories.len()
    }

    pub fn validate(&self, square: &Square) -> Result<()> {
        if self.categories.is_empty() {
            return Err(Error::Contract("shape spec needs at least one category".into()));
        }
        for (i, c) in self.categories.iter().enumerate() {
            if !CATEGORIES.contains(c) {
                return Err(Error::Contract(format!(
                    "category {c} is not a supported vertex count (3 to 7)"
                )));
            }
            if self.categories[..i].contains(c) {
                return Err(Error::Contract(format!("category {c} listed twice")));
            }
        }
        if self.circle_radii.is_empty() {
            return Err(Error::Contract("shape spec needs at least one radius".into()));
        }
        for &r in &self.circle_radii {
            if !(r > 0.0 && 2.0 * r <= square.side + CONTAINMENT_TOL) {
                return Err(Error::Contract(format!(
                    "radius {r} does not fit in a {} m square",
                    square.side
                )));
            }
        }
        Ok(())
    }
}

/// A generated object with its stable identifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeRecord {
    pub id: String,
    pub polygon: ConvexPolygon,
}

/// Generates a whole split. When `disjoint_from` is given, any candidate within
/// `overlap_threshold` (see [`vertex_set_distance`]) of one of those shapes is
/// discarded and regenerated.
pub fn generate_split(
    spec: &ShapeSetSpec,
    square: &Square,
    disjoint_from: Option<&[ShapeRecord]>,
    overlap_threshold: f64,
) -> Result<Vec<ShapeRecord>> {
    spec.validate(square)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let center = Point::new(square.min.x + 0.5 * square.side, square.min.y + 0.5 * square.side);
    let mut out = Vec::with_capacity(spec.total());
    for &category in &spec.categories {
        for m in 0..spec.instances_per_category {
            let radius = spec.circle_radii[m % spec.circle_radii.len()];
            let mut accepted = None;
            for _ in 0..OVERLAP_RETRY_BUDGET {
                let mut p = generate_polygon(category, radius, center, &mut rng)?;
                if spec.scaling_enabled {
                    p = scale_polygon(&p, square, &mut rng)?.0;
                }
                p = translate_polygon(&p, square, &mut rng)?;
                let clash = disjoint_from.is_some_and(|others| {
                    others.iter().any(|o| {
                        vertex_set_distance(&o.polygon, &p).is_some_and(|d| d < overlap_threshold)
                    })
                });
                if !clash {
                    accepted = Some(p);
                    break;
                }
            }
            let polygon = accepted.ok_or_else(|| {
                Error::ShapeGeneration(format!(
                    "could not draw a {category}-gon (radius {radius}) distinct from the reference \
                     split within {OVERLAP_RETRY_BUDGET} attempts (threshold {overlap_threshold} m)"
                ))
            })?;
            out.push(ShapeRecord {
                id: format!("{}-{:05}", spec.split.tag(), out.len()),
                polygon,
            });
        }
    }
    Ok(out)
}

const SHAPES_HEADER: &str = "# scatterforge shapes v1\n# id category x0 y0 x1 y1 ... (meters, counter-clockwise)\n";

/// Line-oriented text form: one record per line, full round-trip precision.
pub fn shapes_to_string(records: &[ShapeRecord]) -> String {
    let mut s = String::from(SHAPES_HEADER);
    for r in records {
        write!(s, "{} {}", r.id, r.polygon.category()).unwrap();
        for v in r.polygon.vertices() {
            write!(s, " {} {}", v.x, v.y).unwrap();
        }
        s.push('\n');
    }
    s
}

pub fn shapes_from_str(text: &str) -> Result<Vec<ShapeRecord>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |detail: String| Error::format("shapes file", format!("line {}: {detail}", lineno + 1));
        let mut fields = line.split_whitespace();
        let id = fields.next().ok_or_else(|| bad("missing id".into()))?.to_string();
        let category: usize = fields
            .next()
            .ok_or_else(|| bad("missing category".into()))?
            .parse()
            .map_err(|e| bad(format!("category: {e}")))?;
        let coords: Vec<f64> = fields
            .map(|f| f.parse::<f64>().map_err(|e| bad(format!("coordinate `{f}`: {e}"))))
            .collect::<Result<_>>()?;
        if coords.len() != 2 * category {
            return Err(bad(format!(
                "category {category} needs {} coordinates, found {}",
                2 * category,
                coords.len()
            )));
        }
        let vertices = coords.chunks(2).map(|c| Point::new(c[0], c[1])).collect();
        let polygon = ConvexPolygon::new(vertices).map_err(|e| bad(e.to_string()))?;
        out.push(ShapeRecord { id, polygon });
    }
    Ok(out)
}

pub fn write_shapes(path: &Path, records: &[ShapeRecord]) -> Result<()> {
    crate::fsutil::write_atomic(path, shapes_to_string(records).as_bytes())
}

pub fn read_shapes(path: &Path) -> Result<Vec<ShapeRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    shapes_from_str(&text)
}
