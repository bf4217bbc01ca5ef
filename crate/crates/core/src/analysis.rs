//! Error norms, convergence rates and the study driver.

use std::fmt::Write as _;

use crate::assembly::{assemble_load, assemble_operators, OperatorSet, Storage};
use crate::error::{Error, Result};
use crate::grid::{prolong, FeSpace1D};
use crate::kernels::{make_kernel, Horizon, KernelCase, KernelSpec, SigmaMode};
use crate::linear::solve_linear;
use crate::matrix::{Stiffness, Tridiagonal};
use crate::obstacle::{
    active_set_solve, ActiveSetOptions, KktResiduals, Obstacle, ObstacleProblem, VIResult,
};

/// Energy and `L²` norm of one error vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorPair {
    pub energy: f64,
    pub l2: f64,
}

/// `(sqrt(eᵀ A e), sqrt(eᵀ M e))`.
pub fn error_norms(e: &[f64], a: &Stiffness, m: &Tridiagonal) -> ErrorPair {
    ErrorPair {
        energy: a.quadratic_form(e).max(0.0).sqrt(),
        l2: m.quadratic_form(e).max(0.0).sqrt(),
    }
}

/// Norms of `P u_c − u_f` on the fine mesh, `P` the P1 prolongation.
pub fn error_vs_reference(
    space_c: &FeSpace1D,
    u_c: &[f64],
    space_f: &FeSpace1D,
    u_f: &[f64],
    a_f: &Stiffness,
    m_f: &Tridiagonal,
) -> Result<ErrorPair> {
    let up = prolong(space_c, space_f, u_c)?;
    if u_f.len() != up.len() {
        return Err(Error::config("reference vector does not match the fine space"));
    }
    let e: Vec<f64> = up.iter().zip(u_f).map(|(a, b)| a - b).collect();
    Ok(error_norms(&e, a_f, m_f))
}

/// Observed orders `log(e_i / e_{i+1}) / |log(p_{i+1} / p_i)|`; for dyadic
/// parameters this is `log₂(e_i / e_{i+1})`.
pub fn convergence_rates(params: &[f64], errors: &[f64]) -> Result<Vec<f64>> {
    if params.len() != errors.len() || errors.len() < 2 {
        return Err(Error::invalid("need at least two (parameter, error) pairs"));
    }
    if let Some(e) = errors.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::numerical(format!("error values must be positive, got {e}")));
    }
    params
        .windows(2)
        .zip(errors.windows(2))
        .map(|(p, e)| {
            let step = (p[1] / p[0]).ln().abs();
            if !(step > 0.0) {
                return Err(Error::invalid("consecutive parameters must differ"));
            }
            Ok((e[0] / e[1]).ln() / step)
        })
        .collect()
}

/// Which problem a study solves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProblemKind {
    Linear,
    Obstacle(Obstacle),
}

/// Kernel family and data shared by every row of a study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemSpec {
    pub case: KernelCase,
    pub s: Option<f64>,
    pub sigma_mode: SigmaMode,
    /// Constant right-hand side.
    pub f: f64,
    pub problem: ProblemKind,
}

impl ProblemSpec {
    pub fn kernel(&self, horizon: Horizon) -> Result<KernelSpec> {
        make_kernel(self.case, self.s, horizon, self.sigma_mode, 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StudyKind {
    /// Mesh refinement `h = 2^−l` for `l` in `levels`, against a reference
    /// on level `ref_level`.
    H {
        delta: f64,
        levels: Vec<u32>,
        ref_level: u32,
    },
    /// Growing horizons on a fixed mesh, against the infinite-horizon
    /// (fractional Laplacian) solution on the same mesh.
    Delta { deltas: Vec<f64>, level: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub spec: ProblemSpec,
    pub kind: StudyKind,
}

/// Iteration count and residuals of an obstacle solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverStats {
    pub iterations: usize,
    pub kkt: KktResiduals,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub param: f64,
    pub energy: f64,
    pub energy_rate: Option<f64>,
    pub l2: f64,
    pub l2_rate: Option<f64>,
    pub stats: Option<SolverStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    /// `h` or `delta`.
    pub param_name: String,
    pub rows: Vec<ReportRow>,
    /// Solver statistics of the reference solve (obstacle problems only).
    pub reference_stats: Option<SolverStats>,
    /// Human-readable description of the settings.
    pub settings: String,
}

/// Formats a float with 17 significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

impl ConvergenceReport {
    pub fn csv_header(&self) -> String {
        format!(
            "{},energy_error,energy_rate,l2_error,l2_rate",
            self.param_name
        )
    }

    /// Data lines without the header, each prefixed by `prefix`.
    fn csv_lines(&self, prefix: &str, out: &mut String) {
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{prefix}{},{},{},{},{}",
                fmt_num(r.param),
                fmt_num(r.energy),
                fmt_opt(r.energy_rate),
                fmt_num(r.l2),
                fmt_opt(r.l2_rate)
            );
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.csv_header();
        out.push('\n');
        self.csv_lines("", &mut out);
        out
    }

    pub fn energy_rates(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.energy_rate).collect()
    }

    pub fn l2_rates(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.l2_rate).collect()
    }

    /// Every solver record, rows first, then the reference.
    pub fn all_stats(&self) -> Vec<SolverStats> {
        self.rows
            .iter()
            .filter_map(|r| r.stats)
            .chain(self.reference_stats)
            .collect()
    }
}

/// Result of one solve inside a study.
#[derive(Debug, Clone)]
pub struct Solved {
    pub ops: OperatorSet,
    pub u: Vec<f64>,
    pub vi: Option<VIResult>,
}

/// Solves the problem of `spec` on given operators.
pub fn solve_on(ops: OperatorSet, spec: &ProblemSpec) -> Result<Solved> {
    let f = spec.f;
    match spec.problem {
        ProblemKind::Linear => {
            let b = assemble_load(&ops.space, |_| f)?;
            let u = solve_linear(&ops.stiffness, &b)?.u;
            Ok(Solved { ops, u, vi: None })
        }
        ProblemKind::Obstacle(psi) => {
            let pb = ObstacleProblem::new(ops, |_| f, |x| psi.eval(x))?;
            let res = active_set_solve(&pb, &ActiveSetOptions::default())?;
            Ok(Solved {
                u: res.u.clone(),
                vi: Some(res),
                ops: pb.ops,
            })
        }
    }
}

fn solve_level(spec: &ProblemSpec, space: &FeSpace1D, horizon: Horizon) -> Result<Solved> {
    let kernel = spec.kernel(horizon)?;
    let ops = assemble_operators(space, &kernel, Storage::Toeplitz)?;
    solve_on(ops, spec)
}

fn stats(s: &Solved) -> Option<SolverStats> {
    s.vi.as_ref().map(|r| SolverStats {
        iterations: r.iterations,
        kkt: r.kkt,
    })
}

fn with_rates(params: &[f64], errors: &[ErrorPair], stats: Vec<Option<SolverStats>>) -> Result<Vec<ReportRow>> {
    let energy: Vec<f64> = errors.iter().map(|e| e.energy).collect();
    let l2: Vec<f64> = errors.iter().map(|e| e.l2).collect();
    let (er, lr) = if errors.len() >= 2 {
        (convergence_rates(params, &energy)?, convergence_rates(params, &l2)?)
    } else {
        (Vec::new(), Vec::new())
    };
    Ok((0..errors.len())
        .map(|i| ReportRow {
            param: params[i],
            energy: energy[i],
            energy_rate: i.checked_sub(1).map(|j| er[j]),
            l2: l2[i],
            l2_rate: i.checked_sub(1).map(|j| lr[j]),
            stats: stats[i],
        })
        .collect())
}

/// Runs a study: assemble, solve, compare and compute rates per row.
pub fn run_study(config: &StudyConfig) -> Result<ConvergenceReport> {
    let spec = &config.spec;
    match &config.kind {
        StudyKind::H {
            delta,
            levels,
            ref_level,
        } => {
            if levels.iter().any(|l| l >= ref_level) {
                return Err(Error::config(format!(
                    "every level must be coarser than the reference level {ref_level}"
                )));
            }
            let horizon = Horizon::Finite(*delta);
            let fine_space = FeSpace1D::unit_interval(*ref_level, *delta)?;
            let fine = solve_level(spec, &fine_space, horizon)
                .map_err(|e| e.context("reference solve"))?;
            let mut params = Vec::new();
            let mut errors = Vec::new();
            let mut row_stats = Vec::new();
            for &l in levels {
                let space = FeSpace1D::unit_interval(l, *delta)?;
                let sol = solve_level(spec, &space, horizon)
                    .map_err(|e| e.context(&format!("level {l}")))?;
                errors.push(error_vs_reference(
                    &space,
                    &sol.u,
                    &fine_space,
                    &fine.u,
                    &fine.ops.stiffness,
                    &fine.ops.mass,
                )?);
                params.push(space.h());
                row_stats.push(stats(&sol));
            }
            Ok(ConvergenceReport {
                param_name: "h".into(),
                rows: with_rates(&params, &errors, row_stats)?,
                reference_stats: stats(&fine),
                settings: format!("{spec:?}, delta = {delta}, reference level {ref_level}"),
            })
        }
        StudyKind::Delta { deltas, level } => {
            // the surrogate lives on the smallest admissible collar, δ₀ = diam Ω
            let base = FeSpace1D::unit_interval(*level, 1.0)?;
            let reference = solve_level(spec, &base, Horizon::Infinite)
                .map_err(|e| e.context("fractional surrogate"))?;
            let mut params = Vec::new();
            let mut errors = Vec::new();
            let mut row_stats = Vec::new();
            for &d in deltas {
                let space = FeSpace1D::unit_interval(*level, d)?;
                let sol = solve_level(spec, &space, Horizon::Finite(d))
                    .map_err(|e| e.context(&format!("delta = {d}")))?;
                // same free nodes on both meshes; the norms are those of the
                // fractional operator, fixed across rows
                let e: Vec<f64> = sol.u.iter().zip(&reference.u).map(|(a, b)| a - b).collect();
                errors.push(error_norms(&e, &reference.ops.stiffness, &reference.ops.mass));
                params.push(d);
                row_stats.push(stats(&sol));
            }
            Ok(ConvergenceReport {
                param_name: "delta".into(),
                rows: with_rates(&params, &errors, row_stats)?,
                reference_stats: stats(&reference),
                settings: format!("{spec:?}, level {level}"),
            })
        }
    }
}

/// One h-study per value of `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub entries: Vec<(f64, ConvergenceReport)>,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,h,energy_error,energy_rate,l2_error,l2_rate\n");
        for (s, rep) in &self.entries {
            rep.csv_lines(&format!("{},", fmt_num(*s)), &mut out);
        }
        out
    }
}

/// Repeats `config` (an h-study of the fractional-type kernel) for each
/// order in `s_values`.
pub fn run_s_sweep(config: &StudyConfig, s_values: &[f64]) -> Result<SweepReport> {
    if config.spec.case != KernelCase::FractionalType {
        return Err(Error::invalid("an s-sweep needs the fractional-type kernel"));
    }
    let entries = s_values
        .iter()
        .map(|&s| {
            let mut c = config.clone();
            c.spec.s = Some(s);
            run_study(&c)
                .map(|r| (s, r))
                .map_err(|e| e.context(&format!("s = {s}")))
        })
        .collect::<Result<_>>()?;
    Ok(SweepReport { entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rates() {
        let r = convergence_rates(&[0.25, 0.125, 0.0625], &[4.0, 2.0, 1.0]).unwrap();
        assert_eq!(r, vec![1.0, 1.0]);
        let r = convergence_rates(&[8.0, 16.0], &[1.0, 1.0]).unwrap();
        assert_eq!(r, vec![0.0]);
        let r = convergence_rates(&[8.0, 16.0], &[9.7e-3, 4.8e-3]).unwrap();
        assert!((r[0] - 1.0149).abs() < 1e-3);
        assert!(convergence_rates(&[1.0, 0.5], &[1.0, 0.0]).is_err());
        assert!(convergence_rates(&[1.0], &[1.0]).is_err());
    }

    fn linear_spec() -> ProblemSpec {
        ProblemSpec {
            case: KernelCase::FractionalType,
            s: Some(0.5),
            sigma_mode: SigmaMode::Constant(1.0),
            f: 1.0,
            problem: ProblemKind::Linear,
        }
    }

    #[test]
    fn representable_error_vanishes() {
        let c = FeSpace1D::unit_interval(3, 0.5).unwrap();
        let f = FeSpace1D::unit_interval(5, 0.5).unwrap();
        let k = KernelSpec::fractional(0.5, 0.5, 1.0).unwrap();
        let ops = assemble_operators(&f, &k, Storage::Toeplitz).unwrap();
        let uc: Vec<f64> = c.free_coords().iter().map(|x| x * (1.0 - x)).collect();
        let uf = prolong(&c, &f, &uc).unwrap();
        let e = error_vs_reference(&c, &uc, &f, &uf, &ops.stiffness, &ops.mass).unwrap();
        assert_eq!(e.energy, 0.0);
        let zero = vec![0.0; f.n_free()];
        let e1 = error_vs_reference(&c, &uc, &f, &zero, &ops.stiffness, &ops.mass).unwrap();
        let uc2: Vec<f64> = uc.iter().map(|v| 2.0 * v).collect();
        let e2 = error_vs_reference(&c, &uc2, &f, &zero, &ops.stiffness, &ops.mass).unwrap();
        assert!((e2.energy - 2.0 * e1.energy).abs() < 1e-14);
        assert!((e2.l2 - 2.0 * e1.l2).abs() < 1e-14);
    }

    #[test]
    fn small_study_is_deterministic() {
        let cfg = StudyConfig {
            spec: linear_spec(),
            kind: StudyKind::H {
                delta: 0.5,
                levels: vec![2, 3, 4],
                ref_level: 6,
            },
        };
        let a = run_study(&cfg).unwrap();
        let b = run_study(&cfg).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.rows.len(), 3);
        assert!(a.rows[0].energy_rate.is_none());
        assert!(a.rows.windows(2).all(|w| w[1].energy < w[0].energy));
        let csv = a.to_csv();
        assert!(csv.starts_with("h,energy_error,energy_rate,l2_error,l2_rate\n"));
        assert!(csv.lines().nth(1).unwrap().contains(",,"));
    }

    #[test]
    fn levels_must_be_coarser() {
        let cfg = StudyConfig {
            spec: linear_spec(),
            kind: StudyKind::H {
                delta: 0.5,
                levels: vec![3, 6],
                ref_level: 6,
            },
        };
        assert!(run_study(&cfg).is_err());
    }
}
