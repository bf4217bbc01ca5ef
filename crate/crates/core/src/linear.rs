//! Linear solves: the nonlocal problem, its fractional (infinite-horizon)
//! counterpart and the classical local problem.

use crate::assembly::{
    assemble_load, assemble_mass, infinite_horizon_matrix, local_stiffness, Storage,
};
use crate::error::{Error, Result};
use crate::grid::FeSpace1D;
use crate::kernels::{make_kernel, Horizon, KernelCase, SigmaMode};
use crate::matrix::{conjugate_gradient, norm2, Stiffness, DENSE_SOLVE_LIMIT};

/// Relative residual asked of every linear solve.
pub const SOLVE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSolution {
    pub u: Vec<f64>,
    /// `‖A u − b‖₂`.
    pub residual_norm: f64,
    /// Whether a direct factorization was used (as opposed to CG).
    pub direct: bool,
}

/// Solves `A u = b` for an SPD stiffness matrix.
///
/// Dense Cholesky up to [`DENSE_SOLVE_LIMIT`] unknowns, conjugate gradients
/// beyond.
pub fn solve_linear(a: &Stiffness, b: &[f64]) -> Result<LinearSolution> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::config(format!(
            "right-hand side has length {}, matrix has {n} rows",
            b.len()
        )));
    }
    let direct = n <= DENSE_SOLVE_LIMIT;
    let u = if direct {
        a.to_dense()
            .cholesky()
            .map_err(|e| e.context("stiffness matrix is not SPD (assembly bug?)"))?
            .solve(b)
    } else {
        conjugate_gradient(|x| a.matvec(x), b, SOLVE_TOL * 1e-2, 20 * n)?
    };
    let residual_norm = residual(a, &u, b);
    let bound = 1e-10 * norm2(b).max(f64::MIN_POSITIVE);
    if !(residual_norm <= bound) && norm2(b) > 0.0 {
        return Err(Error::numerical(format!(
            "linear residual {residual_norm:e} above {bound:e}"
        )));
    }
    Ok(LinearSolution {
        u,
        residual_norm,
        direct,
    })
}

fn residual(a: &Stiffness, u: &[f64], b: &[f64]) -> f64 {
    let au = a.matvec(u);
    let r: Vec<f64> = au.iter().zip(b).map(|(x, y)| x - y).collect();
    norm2(&r)
}

/// P1 solution of `−u'' = f` with homogeneous Dirichlet data.
pub fn solve_local_reference<F: Fn(f64) -> f64>(space: &FeSpace1D, f: F) -> Result<Vec<f64>> {
    let b = assemble_load(space, f)?;
    local_stiffness(space).solve(&b)
}

/// Solution with the integral fractional Laplacian `(−Δ)^s`.
///
/// Uses the truncation identity, so `space.delta()` must be at least the
/// diameter of `Ω`.
pub fn solve_fractional<F: Fn(f64) -> f64>(
    space: &FeSpace1D,
    s: f64,
    f: F,
) -> Result<Vec<f64>> {
    let kernel = make_kernel(
        KernelCase::FractionalType,
        Some(s),
        Horizon::Infinite,
        SigmaMode::FractionalNormalization,
        1,
    )?;
    let a = infinite_horizon_matrix(space, &kernel, Storage::Toeplitz)?;
    let b = assemble_load(space, f)?;
    Ok(solve_linear(&a, &b)?.u)
}

/// `‖v‖_{L²}` of a free-node vector, exact for P1 functions.
pub fn l2_norm(space: &FeSpace1D, v: &[f64]) -> f64 {
    assemble_mass(space).quadratic_form(v).max(0.0).sqrt()
}
