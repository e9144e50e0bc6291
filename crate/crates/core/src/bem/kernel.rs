//! Free-space Green's function of the 2-D Helmholtz operator and its
//! integrals over straight segments.
//!
//! `G(x, y) = (i/4) H0⁽¹⁾(k|x − y|)` solves `ΔG + k²G = −δ` with outgoing
//! radiation, so the incident field of a unit line source is `G(x, x_s)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::mesh::Segment;
use crate::geometry::Point;
use crate::quadrature::GaussRule;
use crate::special::{hankel01, hankel012};
use crate::{Error, Result};

const QUARTER_I: Complex64 = Complex64::new(0.0, 0.25);

/// Pressure radiated by a unit line source at `source`, observed at `x`.
pub fn incident_pressure(source: Point, k: f64, x: Point) -> Result<Complex64> {
    let r = x.distance(source);
    if r == 0.0 {
        return Err(Error::Singularity((source.x, source.y)));
    }
    Ok(QUARTER_I * hankel01(k * r).0)
}

/// `∂G(x, x_s)/∂n_x` at `x` for unit normal `normal`.
pub fn incident_normal_derivative(source: Point, k: f64, x: Point, normal: Point) -> Result<Complex64> {
    let d = x - source;
    let r = d.norm();
    if r == 0.0 {
        return Err(Error::Singularity((source.x, source.y)));
    }
    let h1 = hankel01(k * r).1;
    Ok(-QUARTER_I * k * h1 * (d.dot(normal) / r))
}

/// `∂G(x, y)/∂n_y` (double-layer kernel).
#[inline]
pub(crate) fn double_layer_kernel(k: f64, x: Point, y: Point, n_y: Point) -> Complex64 {
    let d = y - x;
    let r = d.norm();
    let h1 = hankel01(k * r).1;
    -QUARTER_I * k * h1 * (d.dot(n_y) / r)
}

/// `∂²G(x, y)/∂n_x∂n_y` (hypersingular kernel), for `x ≠ y`.
#[inline]
pub(crate) fn hypersingular_kernel(k: f64, x: Point, n_x: Point, y: Point, n_y: Point) -> Complex64 {
    let d = x - y;
    let r = d.norm();
    let (_, h1, h2) = hankel012(k * r);
    let rn_x = d.dot(n_x) / r;
    let rn_y = d.dot(n_y) / r;
    -QUARTER_I * k * k * h2 * (rn_x * rn_y) + QUARTER_I * k * h1 * (n_x.dot(n_y) / r)
}

/// Gauss rule size for a segment of length `len` seen from distance `dist`;
/// `None` means the segment must be split first.
#[inline]
fn rule_for(dist: f64, len: f64, far_points: usize) -> Option<usize> {
    let ratio = dist / len;
    if ratio >= 4.0 {
        Some(far_points)
    } else if ratio >= 1.5 {
        Some(4.max(far_points))
    } else if ratio >= 0.5 {
        Some(8)
    } else {
        None
    }
}

const MAX_SPLIT_DEPTH: usize = 40;

/// Integrates `f(y)` over the straight piece `[a, b]` of a segment, refining
/// toward the observation point `x` (which must not lie on the piece).
pub(crate) fn integrate_near<F>(a: Point, b: Point, x: Point, far_points: usize, f: &F) -> Complex64
where
    F: Fn(Point) -> Complex64,
{
    integrate_rec(a, b, x, far_points, f, 0)
}

fn integrate_rec<F>(a: Point, b: Point, x: Point, far_points: usize, f: &F, depth: usize) -> Complex64
where
    F: Fn(Point) -> Complex64,
{
    let piece = Segment::new(a, b);
    let dist = piece.distance_to(x);
    match rule_for(dist, piece.length, far_points) {
        Some(n) => gauss_on(a, b, n, f),
        None if depth >= MAX_SPLIT_DEPTH => gauss_on(a, b, 16, f),
        None => {
            let m = a.lerp(b, 0.5);
            integrate_rec(a, m, x, far_points, f, depth + 1)
                + integrate_rec(m, b, x, far_points, f, depth + 1)
        }
    }
}

#[inline]
fn gauss_on<F>(a: Point, b: Point, n: usize, f: &F) -> Complex64
where
    F: Fn(Point) -> Complex64,
{
    let rule = GaussRule::cached(n);
    let len = a.distance(b);
    let mut acc = Complex64::new(0.0, 0.0);
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        let y = a.lerp(b, 0.5 * (t + 1.0));
        acc += f(y) * (0.5 * w * len);
    }
    acc
}

/// `∫_seg ∂G(x, y)/∂n_y ds_y` for `x` off the segment.
pub(crate) fn double_layer_integral(seg: &Segment, k: f64, x: Point, far_points: usize) -> Complex64 {
    let n = seg.normal;
    integrate_near(seg.start, seg.end, x, far_points, &|y| double_layer_kernel(k, x, y, n))
}

/// `∂/∂n_x ∫_seg ∂G(x, y)/∂n_y ds_y` for `x` off the segment.
pub(crate) fn hypersingular_integral(seg: &Segment, k: f64, x: Point, n_x: Point) -> Complex64 {
    let n_y = seg.normal;
    integrate_near(seg.start, seg.end, x, 4, &|y| hypersingular_kernel(k, x, n_x, y, n_y))
}

/// Finite-part value of the hypersingular integral over a straight segment,
/// collocated at its own midpoint.
///
/// On a flat element the kernel reduces to `(ik/4) H1(kr)/r`. Its `1/(2πr²)`
/// leading part has finite part `−2/(πL)` and its `−(k²/4π) ln r` part is
/// integrated in closed form; the remainder is smooth and goes to Gauss.
pub(crate) fn hypersingular_self(length: f64, k: f64) -> Complex64 {
    let half = 0.5 * length;
    let log_coeff = k * k / (4.0 * PI);
    let rule = GaussRule::cached(16);
    let mut regular = Complex64::new(0.0, 0.0);
    for (t, w) in rule.mapped(0.0, half) {
        let h1 = hankel01(k * t).1;
        let f = QUARTER_I * k * h1 / t - 1.0 / (2.0 * PI * t * t) + log_coeff * t.ln();
        regular += f * w;
    }
    regular *= 2.0;
    regular - log_coeff * length * (half.ln() - 1.0) - 2.0 / (PI * length)
}
