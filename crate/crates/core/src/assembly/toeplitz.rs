//! First-row assembly of the stiffness matrix on a uniform mesh.
//!
//! With `y = x + r` the bilinear form of two hats `k` cells apart becomes a
//! single radial integral
//!
//! ```text
//! a(φ_0, φ_k) = 2 ∫_0^δ γ(r) G_k(r) dr,
//! G_k(r)      = h [2 M(k) − M(k + r/h) − M(k − r/h)],
//! ```
//!
//! where `h M(t/h)` is the autocorrelation of the hat function, i.e. `M` is
//! the centred cubic B-spline. `G_k` is a cubic between consecutive
//! multiples of `h`, so the integral splits into unit cells in `t = r/h`:
//! the cell touching the origin is integrated in closed form, the rest with
//! a high-order Gauss rule, and the constant tail of lags 0 and 1 again in
//! closed form.

use crate::error::{Error, Result};
use crate::kernels::{power_integral, KernelSpec};
use crate::quadrature::GaussRule;

/// Centred cubic B-spline, support `[−2, 2]`, `M(0) = 2/3`.
#[inline]
fn cubic_bspline(t: f64) -> f64 {
    let u = t.abs();
    if u <= 1.0 {
        2.0 / 3.0 - u * u + 0.5 * u * u * u
    } else if u < 2.0 {
        let v = 2.0 - u;
        v * v * v / 6.0
    } else {
        0.0
    }
}

/// `2 M(k) − M(k + t) − M(k − t)`.
#[inline]
fn bracket(k: usize, t: f64) -> f64 {
    let kf = k as f64;
    2.0 * cubic_bspline(kf) - cubic_bspline(kf + t) - cubic_bspline(kf - t)
}

/// Monomial coefficients `(c2, c3)` of the bracket on `t ∈ [0, 1]`; the
/// constant and linear terms vanish for every lag.
fn bracket_near_origin(k: usize) -> (f64, f64) {
    match k {
        0 => (2.0, -1.0),
        1 => (-1.0, 2.0 / 3.0),
        2 => (0.0, -1.0 / 6.0),
        _ => (0.0, 0.0),
    }
}

const CELL_RULE_POINTS: usize = 20;

/// Values `a(φ_i, φ_j)` as a function of the lag `|i − j|`, for lags
/// `0 ..= min(δ/h + 1, n_free − 1)`.
pub(crate) fn first_row(
    h: f64,
    horizon_cells: Option<usize>,
    n_free: usize,
    kernel: &KernelSpec,
) -> Result<Vec<f64>> {
    let q = kernel.radial_exponent();
    if kernel.dim() != 1 {
        return Err(Error::invalid("assembly is only implemented in 1D"));
    }
    if horizon_cells.is_none() && q >= -1.0 {
        return Err(Error::invalid(format!(
            "the {:?} kernel has no finite infinite-horizon operator",
            kernel.case()
        )));
    }
    let rule = GaussRule::new(CELL_RULE_POINTS);
    let max_lag = match horizon_cells {
        Some(m) => (m + 1).min(n_free.saturating_sub(1)),
        None => n_free.saturating_sub(1),
    };
    let scale = 2.0 * kernel.sigma() * h.powf(q + 2.0);
    let row = (0..=max_lag)
        .map(|k| scale * lag_integral(k, horizon_cells, q, &rule))
        .collect();
    Ok(row)
}

/// `∫_0^m t^q bracket_k(t) dt`.
fn lag_integral(k: usize, horizon_cells: Option<usize>, q: f64, rule: &GaussRule) -> f64 {
    let m = horizon_cells.map_or(f64::INFINITY, |m| m as f64);
    let (c2, c3) = bracket_near_origin(k);
    let mut total = c2 / (q + 3.0) + c3 / (q + 4.0);

    // cells [j, j+1] where the bracket is a non-constant cubic
    let support_end = (k + 2) as f64;
    let last = support_end.min(m);
    let mut j = 1.0;
    while j < last {
        total += rule.integrate(j, j + 1.0, |t| t.powf(q) * bracket(k, t));
        j += 1.0;
    }
    // beyond k + 2 only the constant 2 M(k) survives (lags 0 and 1)
    if k <= 1 && m > support_end {
        total += 2.0 * cubic_bspline(k as f64) * power_integral(q, support_end, m);
    }
    total
}
