//! Uniform 1D mesh over `Ω ∪ Ω_δ` and the constrained P1 space on it.
//!
//! The mesh spans `[a − δ, b + δ]` with spacing `h = (b − a)/N`. The horizon
//! must be a whole number of cells, so the truncation radius and the outer
//! edge of the interaction domain always fall on nodes. Only the `N − 1`
//! nodes strictly inside `Ω` carry degrees of freedom; every other hat
//! function is constrained to zero.

use crate::error::{Error, Result};

/// Relative slack accepted when checking `δ / h` for integrality.
const ALIGN_TOL: f64 = 1e-12;

/// Constrained piecewise-linear space on a uniform mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct FeSpace1D {
    a: f64,
    b: f64,
    cells: usize,
    horizon_cells: usize,
}

/// Local coefficients of the piecewise-linear dual basis on a cell:
/// `ξ_left = 2 φ_left − φ_right`, `ξ_right = −φ_left + 2 φ_right`.
pub const DUAL_BASIS_STENCIL: [[f64; 2]; 2] = [[2.0, -1.0], [-1.0, 2.0]];

/// Builds the space on `Ω = (a, b)` with `cells` cells and horizon `delta`.
pub fn build_space(a: f64, b: f64, cells: usize, delta: f64) -> Result<FeSpace1D> {
    if !(a.is_finite() && b.is_finite() && b > a) {
        return Err(Error::invalid(format!("need a < b, got a = {a}, b = {b}")));
    }
    if cells < 2 {
        return Err(Error::invalid(format!("need at least 2 cells, got {cells}")));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid(format!("horizon must be positive, got {delta}")));
    }
    let h = (b - a) / cells as f64;
    let ratio = delta / h;
    let k = ratio.round();
    if k < 1.0 || (ratio - k).abs() > ALIGN_TOL * ratio.max(1.0) {
        let lower = ratio.floor().max(1.0) * h;
        let upper = ratio.ceil().max(1.0) * h;
        return Err(Error::config(format!(
            "horizon {delta} is not a multiple of the mesh size h = {h}; nearest admissible values are {lower} and {upper}"
        )));
    }
    Ok(FeSpace1D {
        a,
        b,
        cells,
        horizon_cells: k as usize,
    })
}

impl FeSpace1D {
    /// `Ω = (0, 1)` with `2^level` cells.
    pub fn unit_interval(level: u32, delta: f64) -> Result<Self> {
        build_space(0.0, 1.0, 1usize << level, delta)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Number of cells in `Ω`.
    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn h(&self) -> f64 {
        (self.b - self.a) / self.cells as f64
    }

    /// Horizon snapped to the mesh, `δ = horizon_cells · h`.
    pub fn delta(&self) -> f64 {
        self.horizon_cells as f64 * self.h()
    }

    /// `δ / h`.
    pub fn horizon_cells(&self) -> usize {
        self.horizon_cells
    }

    /// Cells over `Ω ∪ Ω_δ`.
    pub fn total_cells(&self) -> usize {
        self.cells + 2 * self.horizon_cells
    }

    pub fn total_nodes(&self) -> usize {
        self.total_cells() + 1
    }

    /// Number of degrees of freedom, `N − 1`.
    pub fn n_free(&self) -> usize {
        self.cells - 1
    }

    /// Coordinate of the node `i` cells to the right of `a` (`i` may be
    /// negative inside the left collar).
    pub fn coord(&self, i: i64) -> f64 {
        self.a + i as f64 * (self.b - self.a) / self.cells as f64
    }

    /// All node coordinates, from `a − δ` to `b + δ`.
    pub fn nodes(&self) -> Vec<f64> {
        let m = self.horizon_cells as i64;
        (-m..=self.cells as i64 + m).map(|i| self.coord(i)).collect()
    }

    /// Indices into [`nodes`](Self::nodes) of the free nodes.
    pub fn free_nodes(&self) -> Vec<usize> {
        let m = self.horizon_cells;
        (m + 1..m + self.cells).collect()
    }

    /// Coordinate of free node `p` (`0 ≤ p < N − 1`).
    pub fn free_coord(&self, p: usize) -> f64 {
        self.coord(p as i64 + 1)
    }

    /// Coordinates of the free nodes.
    pub fn free_coords(&self) -> Vec<f64> {
        (0..self.n_free()).map(|p| self.free_coord(p)).collect()
    }

    /// Coordinates of the closure of `Ω`, `a` and `b` included.
    pub fn omega_coords(&self) -> Vec<f64> {
        (0..=self.cells as i64).map(|i| self.coord(i)).collect()
    }

    /// Free-node vector padded with the constrained zeros at `a` and `b`.
    pub fn with_boundary(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n_free());
        let mut out = Vec::with_capacity(self.cells + 1);
        out.push(0.0);
        out.extend_from_slice(v);
        out.push(0.0);
        out
    }

    /// Value at `x` of the P1 function with free-node values `v`.
    pub fn evaluate(&self, v: &[f64], x: f64) -> f64 {
        if x <= self.a || x >= self.b {
            return 0.0;
        }
        let t = (x - self.a) / self.h();
        let cell = (t.floor() as usize).min(self.cells - 1);
        let local = t - cell as f64;
        let at = |i: usize| {
            if i == 0 || i == self.cells {
                0.0
            } else {
                v[i - 1]
            }
        };
        (1.0 - local) * at(cell) + local * at(cell + 1)
    }

    /// Integer refinement factor of `fine` over `self`, if the meshes nest.
    pub fn refinement_factor(&self, fine: &FeSpace1D) -> Result<usize> {
        if self.a != fine.a || self.b != fine.b {
            return Err(Error::config("spaces live on different domains"));
        }
        if fine.cells % self.cells != 0 {
            return Err(Error::config(format!(
                "{} cells do not refine {} cells",
                fine.cells, self.cells
            )));
        }
        if (self.delta() - fine.delta()).abs() > ALIGN_TOL * self.delta() {
            return Err(Error::config("spaces have different horizons"));
        }
        Ok(fine.cells / self.cells)
    }
}

/// Nodal interpolant of `f` on the free nodes.
pub fn interpolate_nodal<F: Fn(f64) -> f64>(space: &FeSpace1D, f: F) -> Result<Vec<f64>> {
    (0..space.n_free())
        .map(|p| {
            let x = space.free_coord(p);
            let y = f(x);
            if y.is_finite() {
                Ok(y)
            } else {
                Err(Error::Data(format!("non-finite value {y} at x = {x}")))
            }
        })
        .collect()
}

/// Nodal values on the fine mesh of the coarse P1 function `v_coarse`.
///
/// Exact on nested meshes.
pub fn prolong(coarse: &FeSpace1D, fine: &FeSpace1D, v_coarse: &[f64]) -> Result<Vec<f64>> {
    let r = coarse.refinement_factor(fine)?;
    if v_coarse.len() != coarse.n_free() {
        return Err(Error::config("coarse vector length does not match the space"));
    }
    let full = coarse.with_boundary(v_coarse);
    Ok((1..fine.cells)
        .map(|q| {
            let cell = q / r;
            let off = q % r;
            if off == 0 {
                full[cell]
            } else {
                let t = off as f64 / r as f64;
                (1.0 - t) * full[cell] + t * full[cell + 1]
            }
        })
        .collect())
}
