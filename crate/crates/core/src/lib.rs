//! Finite elements for truncated nonlocal diffusion and the nonlocal
//! obstacle problem in one dimension.
//!
//! The pieces, bottom up:
//!
//! - [`kernels`]: radial kernels `γ = σ g(r)` with a horizon `δ`, the
//!   fractional normalization constant and the truncation constant.
//! - [`grid`]: the uniform mesh over `Ω ∪ Ω_δ` and the constrained P1 space.
//! - [`assembly`]: stiffness (element pairs or first row), mass, dual
//!   pairing, loads and the infinite-horizon operator.
//! - [`linear`], [`obstacle`]: solvers.
//! - [`analysis`]: error norms, rates and convergence studies.
//!
//! ```
//! use nonlocal_vi::assembly::{assemble_load, assemble_operators, Storage};
//! use nonlocal_vi::grid::FeSpace1D;
//! use nonlocal_vi::kernels::KernelSpec;
//! use nonlocal_vi::linear::solve_linear;
//!
//! let space = FeSpace1D::unit_interval(5, 0.5)?;
//! let kernel = KernelSpec::fractional(0.5, 0.5, 1.0)?;
//! let ops = assemble_operators(&space, &kernel, Storage::Toeplitz)?;
//! let b = assemble_load(&space, |_| 1.0)?;
//! let u = solve_linear(&ops.stiffness, &b)?.u;
//! assert!(u.iter().all(|&v| v > 0.0));
//! # Ok::<(), nonlocal_vi::Error>(())
//! ```

pub mod analysis;
pub mod assembly;
pub mod error;
pub mod grid;
pub mod kernels;
pub mod linear;
pub mod matrix;
pub mod obstacle;
pub mod quadrature;

pub use error::{Error, Result};

/// The guide's chapters, compiled as doctests.
#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/kernels.md")]
    pub struct Kernels;
    #[doc = include_str!("../../../book/src/assembly.md")]
    pub struct Assembly;
    #[doc = include_str!("../../../book/src/fractional-limit.md")]
    pub struct FractionalLimit;
    #[doc = include_str!("../../../book/src/obstacle.md")]
    pub struct Obstacle;
    #[doc = include_str!("../../../book/src/studies.md")]
    pub struct Studies;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}
