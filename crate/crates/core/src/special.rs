//! Integer-order Bessel and Hankel functions of real, non-negative argument.
//!
//! Small and moderate arguments use Miller's backward recurrence for `J_n`,
//! normalized by `J_0 + 2 Σ J_2k = 1`, and Neumann's series for `Y_0` and
//! `Y_1` built from the same `J_n` values. Large arguments use Hankel's
//! asymptotic expansion, which at `x ≥ 20` is accurate to rounding before its
//! terms start to grow.

use std::f64::consts::{FRAC_2_PI, PI};

use num_complex::Complex64;

/// Below this, Miller/Neumann; at or above, the asymptotic expansion.
const ASYMPTOTIC_FROM: f64 = 20.0;

/// Euler–Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const RESCALE_ABOVE: f64 = 1e250;

/// `(−1)^(k+1) / k`, indexed by `k`; covers every start order used below
/// the asymptotic switch.
const ALTERNATING_RECIPROCALS: [f64; 64] = {
    let mut t = [0.0; 64];
    let mut k = 1;
    while k < 64 {
        t[k] = if k % 2 == 1 { 1.0 / k as f64 } else { -1.0 / k as f64 };
        k += 1;
    }
    t
};

/// `(J0, J1, Y0, Y1)` at `x > 0`.
pub fn bessel01(x: f64) -> [f64; 4] {
    debug_assert!(x > 0.0, "bessel01 needs x > 0, got {x}");
    if x >= ASYMPTOTIC_FROM {
        let (h0, h1) = hankel_asymptotic01(x);
        [h0.re, h1.re, h0.im, h1.im]
    } else {
        streaming01(x)
    }
}

/// Same recurrence and series as [`miller_j`] + [`neumann_y01`], accumulated
/// on the fly so the hot path does not allocate.
fn streaming01(x: f64) -> [f64; 4] {
    let top = (x.ceil() as usize).max(1);
    let mut start = top + 20 + (40.0 * top as f64).sqrt() as usize;
    if start % 2 == 1 {
        start += 1;
    }
    let c = |k: usize| ALTERNATING_RECIPROCALS[k];
    let two_over_x = 2.0 / x;
    let (mut norm, mut s0, mut s1) = (0.0, 0.0, 0.0);
    // J_{n+1}, J_n with n even, walking down two orders per step
    let mut above = 0.0;
    let mut even = 1e-300;
    let mut n = start;
    let mut odd;
    loop {
        if n == 0 {
            norm += even;
            break;
        }
        norm += 2.0 * even;
        s0 += c(n / 2) * even;
        odd = n as f64 * two_over_x * even - above;
        let m = n - 1;
        let coeff = if m >= 3 { c(m.div_ceil(2)) - c((m - 1) / 2) } else { c(1) };
        s1 += coeff * odd;
        above = even;
        even = m as f64 * two_over_x * odd - above;
        above = odd;
        n -= 2;
        if even.abs() > RESCALE_ABOVE {
            for v in [&mut above, &mut even, &mut norm, &mut s0, &mut s1] {
                *v /= RESCALE_ABOVE;
            }
        }
    }
    let (cur, j1) = (even, above);
    let (j0, j1) = (cur / norm, j1 / norm);
    let (s0, s1) = (s0 / norm, s1 / norm);
    let log_term = (0.5 * x).ln() + EULER_GAMMA;
    let y0 = FRAC_2_PI * (log_term * j0 + 2.0 * s0);
    let y1 = FRAC_2_PI * (log_term * j1 - j0 / x - s1);
    [j0, j1, y0, y1]
}

/// `H0⁽¹⁾(x)` and `H1⁽¹⁾(x)` at `x > 0`.
pub fn hankel01(x: f64) -> (Complex64, Complex64) {
    let [j0, j1, y0, y1] = bessel01(x);
    (Complex64::new(j0, y0), Complex64::new(j1, y1))
}

/// `H0⁽¹⁾`, `H1⁽¹⁾` and `H2⁽¹⁾` at `x > 0`.
pub fn hankel012(x: f64) -> (Complex64, Complex64, Complex64) {
    let (h0, h1) = hankel01(x);
    (h0, h1, h1 * (2.0 / x) - h0)
}

/// `J_0(x) … J_nmax(x)` for `x ≥ 0`.
pub fn bessel_j_upto(nmax: usize, x: f64) -> Vec<f64> {
    if x == 0.0 {
        let mut out = vec![0.0; nmax + 1];
        out[0] = 1.0;
        return out;
    }
    let mut j = miller_j(nmax, x);
    j.truncate(nmax + 1);
    j
}

/// `Y_0(x) … Y_nmax(x)` for `x > 0`, by upward recurrence (stable for `Y`).
/// Entries overflow to `-inf` once `Y_n` exceeds the float range.
pub fn bessel_y_upto(nmax: usize, x: f64) -> Vec<f64> {
    let [_, _, y0, y1] = bessel01(x);
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(y0);
    if nmax >= 1 {
        out.push(y1);
    }
    for n in 1..nmax {
        let next = 2.0 * n as f64 / x * out[n] - out[n - 1];
        out.push(next);
    }
    out
}

/// Backward recurrence from an order well above both `nmax` and `x`.
/// Returns at least `nmax + 1` normalized values (and at least two).
fn miller_j(nmax: usize, x: f64) -> Vec<f64> {
    let top = nmax.max(x.ceil() as usize).max(1);
    let mut start = top + 20 + (40.0 * top as f64).sqrt() as usize;
    if start % 2 == 1 {
        start += 1;
    }
    let mut vals = vec![0.0f64; start + 2];
    let mut next = 0.0; // J_{n+1}
    let mut cur = 1e-300; // J_n, arbitrary scale
    vals[start] = cur;
    for n in (1..=start).rev() {
        let prev = 2.0 * n as f64 / x * cur - next;
        next = cur;
        cur = prev;
        vals[n - 1] = cur;
        if cur.abs() > RESCALE_ABOVE {
            for v in &mut vals[n - 1..=start] {
                *v /= RESCALE_ABOVE;
            }
            next /= RESCALE_ABOVE;
            cur /= RESCALE_ABOVE;
        }
    }
    let norm = vals[0] + 2.0 * vals.iter().skip(2).step_by(2).sum::<f64>();
    for v in &mut vals {
        *v /= norm;
    }
    vals
}

/// Neumann series for `Y_0`, `Y_1` from a table of `J_n(x)`.
#[cfg(test)]
fn neumann_y01(j: &[f64], x: f64) -> (f64, f64) {
    let log_term = (0.5 * x).ln() + EULER_GAMMA;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut k = 1;
    while 2 * k + 1 < j.len() {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        s0 += sign * j[2 * k] / k as f64;
        s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / k as f64;
        k += 1;
    }
    let y0 = FRAC_2_PI * (log_term * j[0] + 2.0 * s0);
    let y1 = FRAC_2_PI * (log_term * j[1] - j[0] / x - s1);
    (y0, y1)
}

/// Hankel's expansion of `H_0⁽¹⁾(x)` and `H_1⁽¹⁾(x)`, each summed until its
/// terms stop shrinking or fall below rounding.
fn hankel_asymptotic01(x: f64) -> (Complex64, Complex64) {
    let inv_8x = 1.0 / (8.0 * x);
    let series = |mu: f64| {
        let mut sum = Complex64::new(1.0, 0.0);
        let mut coeff = 1.0; // a_m(ν) / x^m
        let mut last = f64::INFINITY;
        let mut i_pow = Complex64::new(1.0, 0.0);
        for m in 1..200 {
            let odd = (2 * m - 1) as f64;
            coeff *= (mu - odd * odd) * inv_8x / m as f64;
            if coeff.abs() >= last || coeff == 0.0 {
                break;
            }
            last = coeff.abs();
            i_pow *= Complex64::i();
            sum += i_pow * coeff;
            if last < 1e-17 {
                break;
            }
        }
        sum
    };
    let (s, c) = (x - 0.25 * PI).sin_cos();
    let phase = Complex64::new(c, s) * (2.0 / (PI * x)).sqrt();
    let h0 = phase * series(0.0);
    let h1 = Complex64::new(0.0, -1.0) * phase * series(4.0);
    (h0, h1)
}
