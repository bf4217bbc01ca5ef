//! The discrete obstacle problem: find `u ≥ ψ` and `λ ≥ 0` with
//!
//! ```text
//! A u − B λ = f,     λ_p (u_p − ψ_p) = 0,
//! ```
//!
//! where `B = diag(h)` pairs hats with the biorthogonal dual basis, so the
//! multiplier is a nonnegative combination of dual basis functions and all
//! conditions hold node by node. Two solvers are provided: a primal-dual
//! active set iteration and a penalty method with a bounded penalty
//! (`λ_ε = g⁺ H_ε(u_ε − ψ)`, `g⁺` a nodal version of `(−𝓛ψ − f)⁺`).

use crate::assembly::{assemble_load, local_operators, nodal_operator_values, OperatorSet};
use crate::error::{Error, Result};
use crate::grid::{interpolate_nodal, FeSpace1D};
use crate::linear::{solve_linear, SOLVE_TOL};
use crate::matrix::{conjugate_gradient, dot, norm2, DenseMatrix, DENSE_SOLVE_LIMIT};

/// `max(−3 (x − 1/2)² + 1/4, 0)`.
pub fn psi_smooth(x: f64) -> f64 {
    (-3.0 * (x - 0.5) * (x - 0.5) + 0.25).max(0.0)
}

/// Piecewise-linear obstacle with a plateau on `[1/6, 1/3]` and a tent
/// on `[2/3, 5/6]`; zero elsewhere.
pub fn psi_kink(x: f64) -> f64 {
    if (1.0 / 6.0..=2.0 / 6.0).contains(&x) {
        0.02
    } else if (2.0 / 3.0..=0.75).contains(&x) {
        0.24 * (x - 2.0 / 3.0)
    } else if (0.75..=5.0 / 6.0).contains(&x) {
        0.24 * (5.0 / 6.0 - x)
    } else {
        0.0
    }
}

/// Obstacle selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Obstacle {
    Smooth,
    Kink,
    Constant(f64),
}

impl Obstacle {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Obstacle::Smooth => psi_smooth(x),
            Obstacle::Kink => psi_kink(x),
            Obstacle::Constant(v) => v,
        }
    }
}

/// Operators plus the data of one obstacle problem.
#[derive(Debug, Clone)]
pub struct ObstacleProblem {
    pub ops: OperatorSet,
    pub f_vec: Vec<f64>,
    pub psi_vec: Vec<f64>,
    /// `(B⁻¹ (A ψ − f))⁺`, the nodal upper bound of the multiplier.
    pub g_plus_vec: Vec<f64>,
}

impl ObstacleProblem {
    pub fn new<F, P>(ops: OperatorSet, f: F, psi: P) -> Result<Self>
    where
        F: Fn(f64) -> f64,
        P: Fn(f64) -> f64,
    {
        let f_vec = assemble_load(&ops.space, f)?;
        let psi_vec = interpolate_nodal(&ops.space, psi)?;
        Ok(Self::from_vectors(ops, f_vec, psi_vec))
    }

    pub fn from_vectors(ops: OperatorSet, f_vec: Vec<f64>, psi_vec: Vec<f64>) -> Self {
        let a_psi = nodal_operator_values(&ops, &psi_vec);
        let g_plus_vec = a_psi
            .iter()
            .zip(&f_vec)
            .zip(&ops.dual_pairing)
            .map(|((ap, f), b)| (ap - f / b).max(0.0))
            .collect();
        ObstacleProblem {
            ops,
            f_vec,
            psi_vec,
            g_plus_vec,
        }
    }

    pub fn n_free(&self) -> usize {
        self.psi_vec.len()
    }
}

/// Residuals of the discrete optimality system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    /// `‖A u − B λ − f‖₂`.
    pub stationarity: f64,
    /// `min_p (u_p − ψ_p)`.
    pub min_gap: f64,
    /// `min_p λ_p`.
    pub min_lambda: f64,
    /// `|Σ_p λ_p B_pp (u_p − ψ_p)|`.
    pub complementarity: f64,
}

impl KktResiduals {
    /// All four conditions within `tol` (feasibility is one-sided).
    pub fn within(&self, tol: f64) -> bool {
        self.stationarity <= tol
            && self.min_gap >= -tol
            && self.min_lambda >= -tol
            && self.complementarity <= tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VIResult {
    pub u: Vec<f64>,
    pub lambda: Vec<f64>,
    /// Free-node indices where the constraint is treated as active.
    pub active_set: Vec<usize>,
    pub iterations: usize,
    pub kkt: KktResiduals,
}

pub fn kkt_residuals(problem: &ObstacleProblem, u: &[f64], lambda: &[f64]) -> KktResiduals {
    let b = &problem.ops.dual_pairing;
    let au = problem.ops.stiffness.matvec(u);
    let r: Vec<f64> = (0..u.len())
        .map(|p| au[p] - b[p] * lambda[p] - problem.f_vec[p])
        .collect();
    let gap: Vec<f64> = u.iter().zip(&problem.psi_vec).map(|(u, p)| u - p).collect();
    let weighted: Vec<f64> = lambda.iter().zip(b).map(|(l, b)| l * b).collect();
    KktResiduals {
        stationarity: norm2(&r),
        min_gap: gap.iter().copied().fold(f64::INFINITY, f64::min),
        min_lambda: lambda.iter().copied().fold(f64::INFINITY, f64::min),
        complementarity: dot(&weighted, &gap).abs(),
    }
}

/// `g⁺ − λ` node by node.
pub fn lewy_stampacchia_margin(problem: &ObstacleProblem, lambda: &[f64]) -> Vec<f64> {
    problem
        .g_plus_vec
        .iter()
        .zip(lambda)
        .map(|(g, l)| g - l)
        .collect()
}

/// Settings of the active set iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActiveSetOptions {
    /// Weight `c` in the active set rule `λ_p + c (ψ_p − u_p) > 0`.
    pub c: f64,
    pub max_iter: usize,
}

impl Default for ActiveSetOptions {
    fn default() -> Self {
        ActiveSetOptions {
            c: 1.0,
            max_iter: 50,
        }
    }
}

/// Primal-dual active set method.
///
/// Starts from the unconstrained solution with `λ = 0` and stops as soon
/// as the active set repeats; at that point the nodal complementarity
/// conditions hold exactly.
pub fn active_set_solve(problem: &ObstacleProblem, opts: &ActiveSetOptions) -> Result<VIResult> {
    if !(opts.c > 0.0) {
        return Err(Error::invalid(format!("c must be positive, got {}", opts.c)));
    }
    let n = problem.n_free();
    let psi = &problem.psi_vec;
    let mut u = solve_linear(&problem.ops.stiffness, &problem.f_vec)?.u;
    let mut lambda = vec![0.0; n];
    let mut active: Vec<bool> = vec![false; n];
    let mut sizes = Vec::new();

    for iter in 1..=opts.max_iter {
        let next: Vec<bool> = (0..n)
            .map(|p| lambda[p] + opts.c * (psi[p] - u[p]) > 0.0)
            .collect();
        if iter > 1 && next == active {
            let active_set: Vec<usize> = (0..n).filter(|&p| active[p]).collect();
            let kkt = kkt_residuals(problem, &u, &lambda);
            return Ok(VIResult {
                u,
                lambda,
                active_set,
                iterations: iter - 1,
                kkt,
            });
        }
        active = next;
        sizes.push(active.iter().filter(|&&a| a).count());
        u = reduced_solve(problem, &active)?;
        let au = problem.ops.stiffness.matvec(&u);
        for p in 0..n {
            lambda[p] = if active[p] {
                (au[p] - problem.f_vec[p]) / problem.ops.dual_pairing[p]
            } else {
                0.0
            };
        }
    }
    Err(Error::numerical(format!(
        "active set iteration did not settle in {} steps; last active set sizes {:?}",
        opts.max_iter,
        &sizes[sizes.len().saturating_sub(5)..]
    )))
}

/// Obstacle problem for the classical operator `−u''` on the same mesh.
///
/// The active set iteration is allowed up to `N` steps here: for the
/// three-point Laplacian it typically sheds only a few nodes per step.
pub fn solve_local_obstacle<F, P>(space: &FeSpace1D, f: F, psi: P) -> Result<VIResult>
where
    F: Fn(f64) -> f64,
    P: Fn(f64) -> f64,
{
    let pb = ObstacleProblem::new(local_operators(space), f, psi)?;
    let opts = ActiveSetOptions {
        c: 1.0,
        max_iter: space.n_free() + 1,
    };
    active_set_solve(&pb, &opts)
}

/// `u = ψ` on the active set, `(A u)_I = f_I` on the rest.
fn reduced_solve(problem: &ObstacleProblem, active: &[bool]) -> Result<Vec<f64>> {
    let n = problem.n_free();
    let a = &problem.ops.stiffness;
    let mut u: Vec<f64> = (0..n)
        .map(|p| if active[p] { problem.psi_vec[p] } else { 0.0 })
        .collect();
    let inactive: Vec<usize> = (0..n).filter(|&p| !active[p]).collect();
    if inactive.is_empty() {
        return Ok(u);
    }
    let a_psi = a.matvec(&u);
    let rhs: Vec<f64> = inactive
        .iter()
        .map(|&p| problem.f_vec[p] - a_psi[p])
        .collect();
    let x = if inactive.len() <= DENSE_SOLVE_LIMIT {
        let sub = DenseMatrix::from_fn(inactive.len(), |i, j| a.get(inactive[i], inactive[j]));
        sub.cholesky()
            .map_err(|e| e.context("reduced active set system"))?
            .solve(&rhs)
    } else {
        let apply = |x: &[f64]| {
            let mut full = vec![0.0; n];
            for (k, &p) in inactive.iter().enumerate() {
                full[p] = x[k];
            }
            let y = a.matvec(&full);
            inactive.iter().map(|&p| y[p]).collect::<Vec<_>>()
        };
        conjugate_gradient(apply, &rhs, SOLVE_TOL * 1e-2, 20 * n)?
    };
    for (k, &p) in inactive.iter().enumerate() {
        u[p] = x[k];
    }
    Ok(u)
}

/// `H_ε(t)`: 1 for `t ≤ 0`, 0 for `t ≥ ε`, linear in between.
pub fn penalty_h(eps: f64, t: f64) -> f64 {
    if t <= 0.0 {
        1.0
    } else if t >= eps {
        0.0
    } else {
        1.0 - t / eps
    }
}

/// Settings of the penalty Newton iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyOptions {
    /// Stop once `‖F(u)‖₂ ≤ tol · (‖f‖₂ + ‖B g⁺‖₂)`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PenaltyOptions {
    fn default() -> Self {
        PenaltyOptions {
            tol: 1e-13,
            max_iter: 100,
        }
    }
}

/// Penalty solution `(u_ε, λ_ε)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltySolution {
    pub u: Vec<f64>,
    pub lambda: Vec<f64>,
    pub iterations: usize,
    pub residual_norm: f64,
}

const MAX_BRACKET_DOUBLINGS: usize = 60;
const LINE_SEARCH_BISECTIONS: usize = 60;
/// Relative size of a Newton correction treated as converged.
const STEP_TOL: f64 = 1e-14;

/// Solves `A u − B (g⁺ ∘ H_ε(u − ψ)) = f` by semismooth Newton with an
/// exact line search, starting from `start` (or the unconstrained solution).
///
/// Converged once the residual meets [`PenaltyOptions::tol`] or the Newton
/// correction drops below `1e-14 ‖u‖_∞`.
pub fn penalty_solve(
    problem: &ObstacleProblem,
    eps: f64,
    opts: &PenaltyOptions,
    start: Option<&[f64]>,
) -> Result<PenaltySolution> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!("epsilon must be positive, got {eps}")));
    }
    let n = problem.n_free();
    let b = &problem.ops.dual_pairing;
    let g = &problem.g_plus_vec;
    let psi = &problem.psi_vec;
    let a = &problem.ops.stiffness;

    let multiplier =
        |u: &[f64]| -> Vec<f64> { (0..n).map(|p| g[p] * penalty_h(eps, u[p] - psi[p])).collect() };
    let residual = |u: &[f64]| -> Vec<f64> {
        let au = a.matvec(u);
        let lam = multiplier(u);
        (0..n).map(|p| au[p] - b[p] * lam[p] - problem.f_vec[p]).collect()
    };

    // J(u) = ½ uᵀAu − fᵀu + Σ b g Φ_ε(u − ψ) with Φ_ε' = −H_ε
    let energy = |u: &[f64]| -> f64 {
        let au = a.matvec(u);
        (0..n)
            .map(|p| {
                let t = u[p] - psi[p];
                let phi = if t <= 0.0 {
                    -t
                } else if t >= eps {
                    -0.5 * eps
                } else {
                    -t + t * t / (2.0 * eps)
                };
                0.5 * u[p] * au[p] - problem.f_vec[p] * u[p] + b[p] * g[p] * phi
            })
            .sum()
    };

    let mut u = match start {
        Some(u0) if u0.len() == n => u0.to_vec(),
        Some(_) => return Err(Error::config("start vector has the wrong length")),
        None => solve_linear(a, &problem.f_vec)?.u,
    };
    let scale = norm2(&problem.f_vec)
        + norm2(&(0..n).map(|p| b[p] * g[p]).collect::<Vec<_>>())
        + f64::MIN_POSITIVE;
    let target = opts.tol * scale;
    let mut r = residual(&u);
    let mut rn = norm2(&r);
    let dense_a = (n <= DENSE_SOLVE_LIMIT).then(|| a.to_dense());

    for iter in 0..opts.max_iter {
        if rn <= target {
            return Ok(PenaltySolution {
                lambda: multiplier(&u),
                u,
                iterations: iter,
                residual_norm: rn,
            });
        }
        // generalized derivative: A + B diag(g⁺/ε) on the ramp (0, ε)
        let extra: Vec<f64> = (0..n)
            .map(|p| {
                let t = u[p] - psi[p];
                if t > 0.0 && t < eps {
                    b[p] * g[p] / eps
                } else {
                    0.0
                }
            })
            .collect();
        let step = match &dense_a {
            Some(m) => {
                let mut j = m.clone();
                for (p, e) in extra.iter().enumerate() {
                    j.add(p, p, *e);
                }
                j.cholesky()
                    .map_err(|e| e.context("penalty Jacobian"))?
                    .solve(&r)
            }
            None => conjugate_gradient(
                |x: &[f64]| {
                    let mut y = a.matvec(x);
                    for p in 0..n {
                        y[p] += extra[p] * x[p];
                    }
                    y
                },
                &r,
                SOLVE_TOL * 1e-2,
                20 * n,
            )?,
        };
        // The Newton step is a descent direction of the convex, piecewise
        // quadratic energy whose gradient is the residual. Minimize that
        // energy exactly along the step: its slope there is monotone in t.
        let au = a.matvec(&u);
        let ad = a.matvec(&step);
        let slope_at = |t: f64| -> f64 {
            (0..n)
                .map(|p| {
                    let grad = au[p] - t * ad[p]
                        - b[p] * g[p] * penalty_h(eps, u[p] - t * step[p] - psi[p])
                        - problem.f_vec[p];
                    -step[p] * grad
                })
                .sum()
        };
        // On the ramp the residual carries rounding amplified by g⁺/ε, so
        // for small ε a negligible Newton correction is the better test.
        let u_max = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let step_max = step.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if step_max <= STEP_TOL * u_max.max(f64::MIN_POSITIVE) {
            let rf: Vec<f64> = (0..n).map(|p| u[p] - step[p]).collect();
            return Ok(PenaltySolution {
                lambda: multiplier(&rf),
                residual_norm: norm2(&residual(&rf)),
                u: rf,
                iterations: iter + 1,
            });
        }
        let full: Vec<f64> = (0..n).map(|p| u[p] - step[p]).collect();
        let rf = residual(&full);
        let rfn = norm2(&rf);
        if rfn < rn {
            // plain Newton step (quadratic convergence near the solution)
            u = full;
            r = rf;
            rn = rfn;
            continue;
        }
        let mut hi = 1.0;
        let mut grown = 0;
        while slope_at(hi) < 0.0 && grown < MAX_BRACKET_DOUBLINGS {
            hi *= 2.0;
            grown += 1;
        }
        let mut lo = 0.0;
        for _ in 0..LINE_SEARCH_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if slope_at(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut moved = false;
        for t in [hi, lo] {
            if t == 0.0 {
                continue;
            }
            let trial: Vec<f64> = (0..n).map(|p| u[p] - t * step[p]).collect();
            let rt = residual(&trial);
            let rtn = norm2(&rt);
            if energy(&trial) <= energy(&u) || rtn < rn {
                u = trial;
                r = rt;
                rn = rtn;
                moved = true;
                break;
            }
        }
        if !moved {
            // no decrease along the Newton direction: we sit at the
            // floating-point floor
            if rn <= 1e3 * target {
                return Ok(PenaltySolution {
                    lambda: multiplier(&u),
                    u,
                    iterations: iter + 1,
                    residual_norm: rn,
                });
            }
            return Err(Error::numerical(format!(
                "penalty Newton found no descent at residual {rn:e}"
            )));
        }
    }
    // the last digits may be out of reach of the rounding in A u
    if rn <= 1e3 * target {
        return Ok(PenaltySolution {
            lambda: multiplier(&u),
            u,
            iterations: opts.max_iter,
            residual_norm: rn,
        });
    }
    Err(Error::numerical(format!(
        "penalty Newton did not converge in {} steps (residual {rn:e})",
        opts.max_iter
    )))
}

/// Penalty solutions for a decreasing sequence of `ε`, each started from
/// the previous one.
pub fn penalty_continuation(
    problem: &ObstacleProblem,
    eps: &[f64],
    opts: &PenaltyOptions,
) -> Result<Vec<PenaltySolution>> {
    let mut out: Vec<PenaltySolution> = Vec::with_capacity(eps.len());
    for &e in eps {
        let start = out.last().map(|s| s.u.as_slice());
        let sol = penalty_solve(problem, e, opts, start)
            .map_err(|err| err.context(&format!("epsilon = {e:e}")))?;
        out.push(sol);
    }
    Ok(out)
}
