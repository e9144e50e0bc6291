//! Partial-wave solution for a unit line source next to a rigid circular
//! cylinder centered at the origin.
//!
//! Expanding the source by Graf's addition theorem and imposing `∂p/∂r = 0`
//! at `r = a` gives
//!
//! ```text
//! p = (i/4) H0(k|x − x_s|) + (i/4) Σ_n ε_n b_n H_n(kr) H_n(kr_s) cos(n(θ − θ_s))
//! b_n = −J_n'(ka) / H_n'(ka),   ε_0 = 1, ε_n = 2
//! ```

use num_complex::Complex64;

use super::kernel::incident_pressure;
use crate::geometry::Point;
use crate::special::{bessel_j_upto, bessel_y_upto};
use crate::{Error, Result};

/// Largest number of partial waves tried before giving up.
pub const TERM_BUDGET: usize = 4096;

const RELATIVE_STOP: f64 = 1e-12;

/// Total pressure at `x` for a unit line source at `source` and a rigid
/// cylinder of radius `a` about the origin.
pub fn analytic_cylinder(a: f64, source: Point, k: f64, x: Point) -> Result<Complex64> {
    if !(a.is_finite() && a >= 0.0 && k.is_finite() && k > 0.0) {
        return Err(Error::Contract(format!("need a ≥ 0 and k > 0, got a = {a}, k = {k}")));
    }
    let (r, rs) = (x.norm(), source.norm());
    if r <= a || rs <= a {
        return Err(Error::Domain(format!(
            "points must lie outside the cylinder of radius {a} (|x| = {r}, |x_s| = {rs})"
        )));
    }
    let incident = incident_pressure(source, k, x)?;
    if a == 0.0 {
        return Ok(incident);
    }
    let dtheta = x.angle() - source.angle();
    let ka = k * a;
    let min_terms = (ka.ceil() as usize) + 8;
    let mut nmax = (k * r.max(rs)).ceil() as usize + 64;
    loop {
        if let Some(scattered) = partial_sum(a, k, r, rs, dtheta, nmax, incident.norm(), min_terms)? {
            return Ok(incident + scattered);
        }
        if nmax >= TERM_BUDGET {
            return Err(Error::OracleNonConvergence { terms: nmax });
        }
        nmax = (nmax * 2).min(TERM_BUDGET);
    }
}

/// Sums the scattered series up to order `nmax`. `Ok(None)` means the stop
/// rule was not met within `nmax`.
#[allow(clippy::too_many_arguments)]
fn partial_sum(
    a: f64,
    k: f64,
    r: f64,
    rs: f64,
    dtheta: f64,
    nmax: usize,
    incident_scale: f64,
    min_terms: usize,
) -> Result<Option<Complex64>> {
    let ka = k * a;
    let ja = bessel_j_upto(nmax + 1, ka);
    let ya = bessel_y_upto(nmax + 1, ka);
    let jr = bessel_j_upto(nmax, k * r);
    let yr = bessel_y_upto(nmax, k * r);
    let js = bessel_j_upto(nmax, k * rs);
    let ys = bessel_y_upto(nmax, k * rs);
    let deriv = |f: &[f64], n: usize| {
        if n == 0 {
            -f[1]
        } else {
            f[n - 1] - n as f64 / ka * f[n]
        }
    };
    let quarter_i = Complex64::new(0.0, 0.25);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut quiet = 0;
    for n in 0..=nmax {
        let dh = Complex64::new(deriv(&ja, n), deriv(&ya, n));
        let b = -deriv(&ja, n) / dh;
        let eps = if n == 0 { 1.0 } else { 2.0 };
        // Multiply the small coefficient in first so the product of two
        // large Hankel values cannot overflow on its own.
        let term = quarter_i
            * eps
            * (n as f64 * dtheta).cos()
            * ((b * Complex64::new(jr[n], yr[n])) * Complex64::new(js[n], ys[n]));
        if !(term.re.is_finite() && term.im.is_finite()) {
            return Err(Error::OracleNonConvergence { terms: n });
        }
        sum += term;
        let scale = sum.norm().max(incident_scale);
        if n >= min_terms && term.norm() < RELATIVE_STOP * scale {
            quiet += 1;
            if quiet >= 3 {
                return Ok(Some(sum));
            }
        } else {
            quiet = 0;
        }
    }
    Ok(None)
}
