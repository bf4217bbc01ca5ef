//! Element-pair assembly of the stiffness matrix.
//!
//! Since every free hat vanishes on the interaction domain, the bilinear
//! form splits into an `Ω × Ω` part and a boundary-layer mass term:
//!
//! ```text
//! a(u, v) = ∬_{Ω×Ω} (u(x) − u(y))(v(x) − v(y)) γ dy dx + 2 ∫_Ω u v w,
//! w(x)    = ∫_{Ω_δ} γ(x, y) dy.
//! ```
//!
//! For a pair of cells `(K_e, K_f)` the integrand is a quadratic polynomial
//! in the reference coordinates `(ξ, η)` times `g(h |f − e + η − ξ|)`. The
//! inner integral along lines of constant `τ = η − ξ` is exact with a
//! three-point rule; the outer one runs over the distance `ρ = |f − e + τ|`
//! and is graded toward `ρ = 0` for touching cells. Cuts of the kernel at
//! `ρ = δ/h` always fall on cell boundaries because `δ` is a multiple of `h`.

use crate::error::{Error, Result};
use crate::grid::FeSpace1D;
use crate::kernels::KernelSpec;
use crate::matrix::DenseMatrix;
use crate::quadrature::{integrate_toward_singularity, GaussRule};

use super::QuadOptions;

/// Local matrix over up to four distinct nodes, flattened row-major.
type Local = [f64; 16];

pub(crate) fn assemble(
    space: &FeSpace1D,
    kernel: &KernelSpec,
    opts: &QuadOptions,
) -> Result<DenseMatrix> {
    let n_cells = space.cells();
    let m = space.horizon_cells() as i64;
    let h = space.h();
    let outer = GaussRule::new(opts.gauss_order);
    let inner = GaussRule::new(3);
    let mut a = DenseMatrix::zeros(space.n_free());

    for e in 0..n_cells as i64 {
        for f in 0..n_cells as i64 {
            let d = f - e;
            if d.abs() > m + 1 {
                continue;
            }
            let nodes = local_nodes(e, f);
            let local = pair_integral(e, f, m, h, kernel, &outer, &inner, opts, &nodes)
                .map_err(|err| err.context(&format!("element pair ({e}, {f})")))?;
            scatter(&mut a, &nodes, &local, n_cells);
        }
    }

    boundary_layer(space, kernel, opts, &outer, &mut a)?;
    Ok(a)
}

/// Distinct Ω-node indices touched by the pair, padded with `-1`.
fn local_nodes(e: i64, f: i64) -> [i64; 4] {
    let mut out = [-1; 4];
    let mut len = 0;
    for id in [e, e + 1, f, f + 1] {
        if !out[..len].contains(&id) {
            out[len] = id;
            len += 1;
        }
    }
    out
}

fn scatter(a: &mut DenseMatrix, nodes: &[i64; 4], local: &Local, n_cells: usize) {
    let free = |id: i64| (id >= 1 && id < n_cells as i64).then(|| (id - 1) as usize);
    for (i, &ni) in nodes.iter().enumerate() {
        let Some(p) = free(ni) else { continue };
        for (j, &nj) in nodes.iter().enumerate() {
            let Some(q) = free(nj) else { continue };
            a.add(p, q, local[4 * i + j]);
        }
    }
}

/// `φ_id` on cell `cell` at reference coordinate `t` (extended linearly
/// outside `[0, 1]`).
#[inline]
fn hat_on_cell(id: i64, cell: i64, t: f64) -> f64 {
    if id == cell {
        1.0 - t
    } else if id == cell + 1 {
        t
    } else {
        0.0
    }
}

/// Derivative of `φ_id` on cell `cell` in the reference coordinate.
#[inline]
fn hat_slope(id: i64, cell: i64) -> f64 {
    if id == cell {
        -1.0
    } else if id == cell + 1 {
        1.0
    } else {
        0.0
    }
}

#[allow(clippy::too_many_arguments)]
fn pair_integral(
    e: i64,
    f: i64,
    m: i64,
    h: f64,
    kernel: &KernelSpec,
    outer: &GaussRule,
    inner: &GaussRule,
    opts: &QuadOptions,
    nodes: &[i64; 4],
) -> Result<Local> {
    let d = f - e;
    let mut total = [0.0; 16];
    // the two halves τ ∈ [0, 1] and τ ∈ [−1, 0]
    for positive in [true, false] {
        // ρ = |d + τ| ranges over [rho0, rho0 + 1]; `sign` maps ρ back to τ
        let (rho0, sign) = match (positive, d >= 0, d >= 1) {
            (true, true, _) => (d, 1.0),
            (true, false, _) => (-d - 1, -1.0),
            (false, _, true) => (d - 1, 1.0),
            (false, _, false) => (-d, -1.0),
        };
        if rho0 >= m {
            continue;
        }
        let tau_of = |rho: f64| sign * rho - d as f64;
        let integrand = |rho: f64| -> Local {
            let tau = tau_of(rho);
            let g = kernel.profile(h * rho);
            let (lo, hi) = if tau >= 0.0 { (0.0, 1.0 - tau) } else { (-tau, 1.0) };
            let mut q = [0.0; 16];
            if hi <= lo {
                return q;
            }
            for (xi, w) in inner.points(lo, hi) {
                let mut diff = [0.0; 4];
                for (k, &id) in nodes.iter().enumerate() {
                    if id >= 0 {
                        // η = ξ + τ loses τ to rounding once τ ≪ 1; the
                        // hats are linear, so split off the τ part exactly
                        diff[k] = hat_on_cell(id, e, xi)
                            - hat_on_cell(id, f, xi)
                            - hat_slope(id, f) * tau;
                    }
                }
                for i in 0..4 {
                    for j in 0..4 {
                        q[4 * i + j] += w * g * diff[i] * diff[j];
                    }
                }
            }
            q
        };
        let part: Local = integrate_toward_singularity(
            outer,
            rho0 as f64,
            rho0 as f64 + 1.0,
            0.0,
            &opts.grading,
            integrand,
        )?;
        for (t, p) in total.iter_mut().zip(part) {
            *t += h * h * p;
        }
    }
    Ok(total)
}

/// Adds `2 ∫_Ω φ_p φ_q w` to the matrix.
fn boundary_layer(
    space: &FeSpace1D,
    kernel: &KernelSpec,
    opts: &QuadOptions,
    rule: &GaussRule,
    a: &mut DenseMatrix,
) -> Result<()> {
    let n_cells = space.cells() as i64;
    let h = space.h();
    let delta = space.delta();
    // ∫_{Ω_δ} γ(x, ·) from one side, as a function of the distance to ∂Ω
    let side = |dist: f64| -> f64 {
        if dist >= delta {
            0.0
        } else {
            kernel
                .radial_tail_integral(dist, delta)
                .expect("distance is positive inside the cell")
        }
    };
    for e in 0..n_cells {
        // constrained hats are left out: near ∂Ω their weighted square
        // need not be integrable
        let (use_l, use_r) = (e >= 1, e + 1 < n_cells);
        // reference coordinate t ∈ [0, 1] on cell e; x = a + (e + t) h
        let local = |w: f64, t: f64| -> [f64; 4] {
            let l = if use_l { 1.0 - t } else { 0.0 };
            let r = if use_r { t } else { 0.0 };
            // a vanishing hat factor must not meet an overflowed weight
            let m = |a: f64, b: f64| if a == 0.0 || b == 0.0 { 0.0 } else { a * b * w };
            [m(l, l), m(l, r), m(r, l), m(r, r)]
        };
        // left collar: distance u h with u = e + t, singular where it vanishes
        let from_left: [f64; 4] = integrate_toward_singularity(
            rule,
            e as f64,
            e as f64 + 1.0,
            0.0,
            &opts.grading,
            |u: f64| local(side(u * h), u - e as f64),
        )?;
        // right collar: distance u h with u = N − e − t; taking the distance
        // from u directly avoids cancellation next to the singularity
        let lo = (n_cells - e - 1) as f64;
        let from_right: [f64; 4] = integrate_toward_singularity(
            rule,
            lo,
            lo + 1.0,
            0.0,
            &opts.grading,
            |u: f64| local(side(u * h), n_cells as f64 - e as f64 - u),
        )?;
        let ids = [e, e + 1];
        for i in 0..2 {
            for j in 0..2 {
                let (pi, pj) = (ids[i], ids[j]);
                if pi >= 1 && pi < n_cells && pj >= 1 && pj < n_cells {
                    let v = 2.0 * h * (from_left[2 * i + j] + from_right[2 * i + j]);
                    a.add((pi - 1) as usize, (pj - 1) as usize, v);
                }
            }
        }
    }
    if a.max_abs().is_finite() {
        Ok(())
    } else {
        Err(Error::numerical("boundary-layer term is not finite"))
    }
}
