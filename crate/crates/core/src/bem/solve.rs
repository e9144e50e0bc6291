//! Burton–Miller collocation for the rigid (sound-hard) exterior problem.
//!
//! With `n` the outward normal of the object and `q = ∂p/∂n = 0`, the total
//! pressure satisfies the representation
//!
//! ```text
//! p(x) = p_inc(x) + ∫_Γ p(y) ∂G(x, y)/∂n_y ds_y,   x outside the object.
//! ```
//!
//! Taking the boundary limit gives `(½ − K) p = p_inc`; differentiating along
//! `n_x` first gives `−H p = ∂p_inc/∂n`. The solver collocates
//! `(½ − K − βH) p = p_inc + β ∂p_inc/∂n` with `β = i/k` at segment
//! midpoints, using piecewise-constant `p`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::kernel::{
    double_layer_integral, hypersingular_integral, hypersingular_self, incident_normal_derivative,
    incident_pressure,
};
use super::mesh::BoundaryMesh;
use crate::geometry::Point;
use crate::{Error, Result};

/// Pivot-ratio estimates above this are treated as a singular system.
pub const MAX_CONDITION: f64 = 1e13;

/// Gauss points per element for far-field extrapolation.
const FAR_POINTS: usize = 2;

/// Surface pressure for one (mesh, source, wavenumber) triple.
#[derive(Debug, Clone)]
pub struct SurfaceSolution {
    pub wavenumber: f64,
    pub source: Point,
    /// Total pressure at each segment midpoint, in mesh order.
    pub pressure: Vec<Complex64>,
    /// `max |u_ii| / min |u_ii|` over the LU pivots.
    pub condition_estimate: f64,
}

/// Assembles the Burton–Miller collocation matrix.
pub fn assemble(mesh: &BoundaryMesh, k: f64) -> DMatrix<Complex64> {
    let segs = mesh.segments();
    let n = segs.len();
    let beta = Complex64::new(0.0, 1.0 / k);
    let mut a = DMatrix::<Complex64>::zeros(n, n);
    for (i, si) in segs.iter().enumerate() {
        let x = si.midpoint;
        let n_x = si.normal;
        for (j, sj) in segs.iter().enumerate() {
            a[(i, j)] = if i == j {
                // The double layer vanishes on its own flat element.
                Complex64::new(0.5, 0.0) - beta * hypersingular_self(sj.length, k)
            } else {
                -double_layer_integral(sj, k, x, 4) - beta * hypersingular_integral(sj, k, x, n_x)
            };
        }
    }
    a
}

/// Solves for the total surface pressure due to a unit line source.
pub fn solve_surface(mesh: &BoundaryMesh, source: Point, k: f64) -> Result<SurfaceSolution> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::Contract(format!("wavenumber must be positive, got {k}")));
    }
    if mesh.is_empty() {
        return Err(Error::Contract("cannot solve on an empty mesh".into()));
    }
    if mesh.polygon().inside_margin(source) >= 0.0 {
        return Err(Error::Domain(format!(
            "source ({}, {}) is not strictly outside the object",
            source.x, source.y
        )));
    }
    let beta = Complex64::new(0.0, 1.0 / k);
    let rhs = mesh
        .segments()
        .iter()
        .map(|s| {
            Ok(incident_pressure(source, k, s.midpoint)?
                + beta * incident_normal_derivative(source, k, s.midpoint, s.normal)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let a = assemble(mesh, k);
    let lu = a.lu();
    let u = lu.u();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..u.nrows() {
        let m = u[(i, i)].norm();
        lo = lo.min(m);
        hi = hi.max(m);
    }
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::SolverFailure { condition });
    }
    let x = lu
        .solve(&DVector::from_vec(rhs))
        .ok_or(Error::SolverFailure { condition })?;
    let pressure: Vec<Complex64> = x.iter().copied().collect();
    if pressure.iter().any(|p| !p.re.is_finite() || !p.im.is_finite()) {
        return Err(Error::SolverFailure { condition });
    }
    Ok(SurfaceSolution {
        wavenumber: k,
        source,
        pressure,
        condition_estimate: condition,
    })
}

/// Total pressure at an exterior point from a surface solution.
pub fn exterior_pressure(
    solution: &SurfaceSolution,
    mesh: &BoundaryMesh,
    x: Point,
) -> Result<Complex64> {
    if mesh.polygon().inside_margin(x) >= 0.0 {
        return Err(Error::Domain(format!(
            "evaluation point ({}, {}) is inside or on the object",
            x.x, x.y
        )));
    }
    if solution.pressure.len() != mesh.len() {
        return Err(Error::Contract(format!(
            "surface solution has {} values for a {}-segment mesh",
            solution.pressure.len(),
            mesh.len()
        )));
    }
    let k = solution.wavenumber;
    let mut total = incident_pressure(solution.source, k, x)?;
    for (seg, &p) in mesh.segments().iter().zip(&solution.pressure) {
        total += p * double_layer_integral(seg, k, x, FAR_POINTS);
    }
    Ok(total)
}

/// Total pressure at `x` for a unit line source; `None` means free field.
pub fn total_pressure(
    scatterer: Option<(&SurfaceSolution, &BoundaryMesh)>,
    source: Point,
    k: f64,
    x: Point,
) -> Result<Complex64> {
    match scatterer {
        Some((sol, mesh)) => exterior_pressure(sol, mesh, x),
        None => incident_pressure(source, k, x),
    }
}
