//! Stiffness, mass, dual pairing and load assembly on a [`FeSpace1D`].
//!
//! Two independent routes build the nonlocal stiffness matrix:
//! [`assemble_stiffness`] integrates element pairs of `Ω × Ω` with graded
//! quadrature and adds the boundary layer, while
//! [`assemble_stiffness_toeplitz`] computes the first row from a single
//! radial integral per lag. They share nothing but the kernel profile, so
//! each is the other's oracle.

mod dense;
mod toeplitz;

use crate::error::{Error, Result};
use crate::grid::FeSpace1D;
use crate::kernels::{Horizon, KernelSpec};
use crate::matrix::{DenseMatrix, Stiffness, SymmetricToeplitz, Tridiagonal};
use crate::quadrature::{GaussRule, GradingOptions};

/// Quadrature settings for the element-pair route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    /// Points of the Gauss rule on every (sub)cell.
    pub gauss_order: usize,
    pub grading: GradingOptions,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            gauss_order: 10,
            grading: GradingOptions::default(),
        }
    }
}

/// Storage used for the stiffness matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Storage {
    /// Element-pair assembly into a full matrix.
    #[default]
    Dense,
    /// First-row assembly; needs a uniform mesh, which is all we have.
    Toeplitz,
}

/// Everything a solver needs on one mesh.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    pub stiffness: Stiffness,
    pub mass: Tridiagonal,
    /// Diagonal of the pairing between hats and dual basis functions.
    pub dual_pairing: Vec<f64>,
    /// `None` for the classical local operator.
    pub kernel: Option<KernelSpec>,
    pub space: FeSpace1D,
}

impl OperatorSet {
    pub fn n_free(&self) -> usize {
        self.space.n_free()
    }
}

/// Assembles stiffness, mass and dual pairing.
///
/// An infinite-horizon fractional kernel is accepted as well; it is then
/// built through [`infinite_horizon_matrix`] with `δ₀ = space.delta()`.
pub fn assemble_operators(
    space: &FeSpace1D,
    kernel: &KernelSpec,
    storage: Storage,
) -> Result<OperatorSet> {
    let stiffness = match (kernel.horizon(), storage) {
        (Horizon::Infinite, _) => infinite_horizon_matrix(space, kernel, storage)?,
        (_, Storage::Dense) => {
            Stiffness::Dense(assemble_stiffness(space, kernel, &QuadOptions::default())?)
        }
        (_, Storage::Toeplitz) => Stiffness::Toeplitz(assemble_stiffness_toeplitz(space, kernel)?),
    };
    Ok(OperatorSet {
        stiffness,
        mass: assemble_mass(space),
        dual_pairing: assemble_dual_pairing(space),
        kernel: Some(*kernel),
        space: space.clone(),
    })
}

/// Operators of the classical problem `−u'' = f` on the same space.
pub fn local_operators(space: &FeSpace1D) -> OperatorSet {
    let t = local_stiffness(space);
    let row = vec![t.diag[0], t.off.first().copied().unwrap_or(0.0)];
    OperatorSet {
        stiffness: Stiffness::Toeplitz(SymmetricToeplitz::new(space.n_free(), row)),
        mass: assemble_mass(space),
        dual_pairing: assemble_dual_pairing(space),
        kernel: None,
        space: space.clone(),
    }
}

fn check_horizon(space: &FeSpace1D, kernel: &KernelSpec) -> Result<()> {
    if kernel.dim() != 1 {
        return Err(Error::invalid("assembly is only implemented in 1D"));
    }
    match kernel.horizon() {
        Horizon::Infinite => Err(Error::invalid(
            "stiffness assembly needs a finite horizon; use infinite_horizon_matrix",
        )),
        Horizon::Finite(d) => {
            let want = space.delta();
            if (d - want).abs() > 1e-12 * want {
                Err(Error::config(format!(
                    "kernel horizon {d} differs from the mesh horizon {want}"
                )))
            } else {
                Ok(())
            }
        }
    }
}

/// Element-pair assembly of `A_{pq} = a(φ_p, φ_q)` over the free nodes.
pub fn assemble_stiffness(
    space: &FeSpace1D,
    kernel: &KernelSpec,
    opts: &QuadOptions,
) -> Result<DenseMatrix> {
    check_horizon(space, kernel)?;
    if opts.gauss_order == 0 {
        return Err(Error::invalid("Gauss order must be at least 1"));
    }
    dense::assemble(space, kernel, opts)
}

/// First-row assembly; entries depend only on `|p − q|`.
pub fn assemble_stiffness_toeplitz(
    space: &FeSpace1D,
    kernel: &KernelSpec,
) -> Result<SymmetricToeplitz> {
    check_horizon(space, kernel)?;
    let row = toeplitz::first_row(
        space.h(),
        Some(space.horizon_cells()),
        space.n_free(),
        kernel,
    )?;
    Ok(SymmetricToeplitz::new(space.n_free(), row))
}

/// Stiffness of an infinite-horizon kernel computed directly, one radial
/// integral per lag (a full first row). Used to check the truncation
/// identity behind [`infinite_horizon_matrix`].
pub fn assemble_infinite_toeplitz(
    space: &FeSpace1D,
    kernel_inf: &KernelSpec,
) -> Result<SymmetricToeplitz> {
    if kernel_inf.horizon() != Horizon::Infinite {
        return Err(Error::invalid("expected an infinite-horizon kernel"));
    }
    let row = toeplitz::first_row(space.h(), None, space.n_free(), kernel_inf)?;
    Ok(SymmetricToeplitz::new(space.n_free(), row))
}

/// `A_∞ = A_{δ₀} + C(δ₀) M` with `δ₀ = space.delta()`.
///
/// Exact as long as `δ₀` is at least the diameter of `Ω`: then no pair of
/// points in `Ω` is cut off by the truncation.
pub fn infinite_horizon_matrix(
    space: &FeSpace1D,
    kernel_inf: &KernelSpec,
    storage: Storage,
) -> Result<Stiffness> {
    if kernel_inf.horizon() != Horizon::Infinite {
        return Err(Error::invalid("expected an infinite-horizon kernel"));
    }
    let diam = space.b() - space.a();
    let delta = space.delta();
    if delta < diam * (1.0 - 1e-12) {
        return Err(Error::config(format!(
            "the truncation identity needs a horizon of at least diam = {diam}, got {delta}"
        )));
    }
    let truncated = kernel_inf.with_horizon(Horizon::Finite(delta))?;
    let c = truncated.truncation_constant()?;
    let a = match storage {
        Storage::Dense => {
            Stiffness::Dense(assemble_stiffness(space, &truncated, &QuadOptions::default())?)
        }
        Storage::Toeplitz => Stiffness::Toeplitz(assemble_stiffness_toeplitz(space, &truncated)?),
    };
    Ok(a.plus_scaled(c, &assemble_mass(space)))
}

/// P1 mass matrix over the free nodes.
pub fn assemble_mass(space: &FeSpace1D) -> Tridiagonal {
    let h = space.h();
    let n = space.n_free();
    Tridiagonal {
        diag: vec![2.0 * h / 3.0; n],
        off: vec![h / 6.0; n.saturating_sub(1)],
    }
}

/// `∫ ξ_p φ_p = ∫ φ_p = h`; the pairing is diagonal by biorthogonality.
pub fn assemble_dual_pairing(space: &FeSpace1D) -> Vec<f64> {
    vec![space.h(); space.n_free()]
}

/// Stiffness of the classical P1 Laplacian, `(1/h)(−1, 2, −1)`.
pub fn local_stiffness(space: &FeSpace1D) -> Tridiagonal {
    let h = space.h();
    let n = space.n_free();
    Tridiagonal {
        diag: vec![2.0 / h; n],
        off: vec![-1.0 / h; n.saturating_sub(1)],
    }
}

/// Points per cell of the load quadrature.
const LOAD_GAUSS_ORDER: usize = 5;

/// `b_p = ∫_Ω f φ_p`.
pub fn assemble_load<F: Fn(f64) -> f64>(space: &FeSpace1D, f: F) -> Result<Vec<f64>> {
    let rule = GaussRule::new(LOAD_GAUSS_ORDER);
    let n = space.cells();
    let mut b = vec![0.0; space.n_free()];
    for e in 0..n {
        let (x0, x1) = (space.coord(e as i64), space.coord(e as i64 + 1));
        let mut left = 0.0;
        let mut right = 0.0;
        for (t, w) in rule.points(0.0, 1.0) {
            let x = x0 + t * (x1 - x0);
            let y = f(x);
            if !y.is_finite() {
                return Err(Error::Data(format!("non-finite load value {y} at x = {x}")));
            }
            left += w * y * (1.0 - t);
            right += w * y * t;
        }
        let len = x1 - x0;
        if e >= 1 {
            b[e - 1] += len * left;
        }
        if e + 1 < n {
            b[e] += len * right;
        }
    }
    Ok(b)
}

/// `B⁻¹ A v`: nodal values of the operator applied to `v`, lumped with the
/// dual pairing.
pub fn nodal_operator_values(ops: &OperatorSet, v: &[f64]) -> Vec<f64> {
    ops.stiffness
        .matvec(v)
        .into_iter()
        .zip(&ops.dual_pairing)
        .map(|(av, b)| av / b)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{make_kernel, KernelCase, SigmaMode};

    fn space(n: usize, delta: f64) -> FeSpace1D {
        crate::grid::build_space(0.0, 1.0, n, delta).unwrap()
    }

    #[test]
    fn dense_matches_toeplitz() {
        for (s, delta) in [(0.5, 0.25), (0.25, 0.5), (0.75, 0.125)] {
            let sp = space(16, delta);
            let k = KernelSpec::fractional(s, delta, 1.0).unwrap();
            let a = assemble_stiffness(&sp, &k, &QuadOptions::default()).unwrap();
            let t = assemble_stiffness_toeplitz(&sp, &k).unwrap().to_dense();
            let mut diff: f64 = 0.0;
            for i in 0..sp.n_free() {
                for j in 0..sp.n_free() {
                    diff = diff.max((a.get(i, j) - t.get(i, j)).abs());
                }
            }
            assert!(diff < 1e-12, "s = {s}, δ = {delta}: {diff:e}");
        }
    }

    #[test]
    fn constant_and_peridynamic_routes_agree() {
        let sp = space(16, 0.25);
        for case in [KernelCase::ConstantIntegrable, KernelCase::Peridynamic] {
            let k = make_kernel(case, None, Horizon::Finite(0.25), SigmaMode::Constant(1.5), 1)
                .unwrap();
            let a = assemble_stiffness(&sp, &k, &QuadOptions::default()).unwrap();
            let t = assemble_stiffness_toeplitz(&sp, &k).unwrap().to_dense();
            for i in 0..sp.n_free() {
                for j in 0..sp.n_free() {
                    assert!((a.get(i, j) - t.get(i, j)).abs() < 1e-12, "{case:?} ({i}, {j})");
                }
            }
        }
    }

    #[test]
    fn mass_and_pairing() {
        let sp = space(8, 0.5);
        let m = assemble_mass(&sp);
        assert_eq!(m.diag[3], 1.0 / 12.0);
        let ones = vec![1.0; 7];
        let sums = m.matvec(&ones);
        for v in &sums[1..6] {
            assert!((v - 0.125).abs() < 1e-16);
        }
        assert!(assemble_dual_pairing(&sp).iter().all(|&b| b == 0.125));
    }

    #[test]
    fn load_vectors() {
        let sp = space(4, 0.25);
        let b = assemble_load(&sp, |_| 1.0).unwrap();
        assert!(b.iter().all(|v| (v - 0.25).abs() < 1e-15));
        let b = assemble_load(&sp, |x| x).unwrap();
        assert!((b[1] - 0.125).abs() < 1e-15);
        assert!(assemble_load(&sp, |_| 0.0).unwrap().iter().all(|&v| v == 0.0));
        assert!(assemble_load(&sp, |x| 1.0 / (x - 0.1)).is_ok());
        assert!(assemble_load(&sp, |_| f64::NAN).is_err());
    }

    #[test]
    fn horizon_must_match_mesh() {
        let sp = space(8, 0.5);
        let k = KernelSpec::fractional(0.5, 0.25, 1.0).unwrap();
        assert!(assemble_stiffness_toeplitz(&sp, &k).is_err());
    }

    #[test]
    fn truncation_identity() {
        let k = make_kernel(
            KernelCase::FractionalType,
            Some(0.5),
            Horizon::Infinite,
            SigmaMode::FractionalNormalization,
            1,
        )
        .unwrap();
        let sp = space(16, 1.0);
        let via = infinite_horizon_matrix(&sp, &k, Storage::Toeplitz).unwrap();
        let direct = assemble_infinite_toeplitz(&sp, &k).unwrap();
        let scale = direct.lag(0);
        for lag in 0..sp.n_free() {
            let d = (via.get(0, lag) - direct.lag(lag)).abs();
            assert!(d < 1e-12 * scale, "lag {lag}: {d:e}");
        }
        assert!(infinite_horizon_matrix(&space(16, 0.5), &k, Storage::Toeplitz).is_err());
    }
}
