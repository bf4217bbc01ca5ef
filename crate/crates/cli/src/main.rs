//! `nonlocal-vi`: solve nonlocal linear and obstacle problems on `(0, 1)`
//! and run the convergence studies, writing CSV.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nonlocal_vi::analysis::{
    fmt_num, run_s_sweep, run_study, ProblemKind, ProblemSpec, StudyConfig, StudyKind,
};
use nonlocal_vi::assembly::{assemble_load, assemble_operators, Storage};
use nonlocal_vi::grid::{build_space, FeSpace1D};
use nonlocal_vi::kernels::{make_kernel, Horizon, KernelCase, SigmaMode};
use nonlocal_vi::linear::{solve_linear, solve_local_reference};
use nonlocal_vi::obstacle::{
    active_set_solve, kkt_residuals, penalty_continuation, solve_local_obstacle,
    ActiveSetOptions, Obstacle, ObstacleProblem, PenaltyOptions,
};
use nonlocal_vi::Error;

#[derive(Parser, Debug)]
#[command(name = "nonlocal-vi", version, about = "Nonlocal diffusion and obstacle problems in 1D")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one problem and write `x,u` or `x,u,lambda`.
    Solve(SolveArgs),
    /// Mesh refinement study against a fine reference solution.
    StudyH(StudyHArgs),
    /// Growing horizons against the fractional Laplacian solution.
    StudyDelta(StudyDeltaArgs),
    /// Mesh refinement study repeated for several orders `s`.
    StudyS(StudySArgs),
    /// Nonlocal profiles for several horizons next to the local solution.
    CompareLocal(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProblemArg {
    Linear,
    Obstacle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KernelArg {
    Fractional,
    Constant,
    Peridynamic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    ActiveSet,
    Penalty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AssemblyArg {
    Toeplitz,
    Dense,
}

/// Kernel and data shared by every subcommand.
#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long, value_enum, default_value = "linear")]
    problem: ProblemArg,
    #[arg(long, value_enum, default_value = "fractional")]
    kernel: KernelArg,
    /// Fractional order (fractional kernel only).
    #[arg(long, default_value_t = 0.5)]
    s: f64,
    /// `constant:<v>`, `fractional`, `local`, `laplacian` or `inv-two-delta-sq`.
    #[arg(long, default_value = "constant:1", value_parser = parse_sigma)]
    sigma: SigmaMode,
    /// Constant right-hand side.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    f: f64,
    /// `smooth`, `kink`, `const:<v>` or `none`.
    #[arg(long, default_value = "smooth", value_parser = parse_psi, allow_hyphen_values = true)]
    psi: PsiArg,
    /// Output file; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    /// Horizon, a multiple of 1/cells, or `inf` for the fractional Laplacian.
    #[arg(long, value_parser = parse_horizon)]
    delta: Horizon,
    #[arg(long)]
    cells: usize,
    #[arg(long, value_enum, default_value = "active-set")]
    method: MethodArg,
    /// Final penalty parameter (reached by a continuation from 1e-2).
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    #[arg(long, value_enum, default_value = "toeplitz")]
    assembly: AssemblyArg,
}

#[derive(Args, Debug)]
struct StudyHArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    delta: f64,
    /// Inclusive level range `a:b`, meaning `h = 2^-a, ..., 2^-b`.
    #[arg(long, value_parser = parse_levels)]
    levels: Levels,
    #[arg(long)]
    ref_level: u32,
}

#[derive(Args, Debug)]
struct StudyDeltaArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated horizons, each at least 1.
    #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
    deltas: Vec<f64>,
    /// Mesh level, `h = 2^-level`.
    #[arg(long, default_value_t = 9)]
    level: u32,
}

#[derive(Args, Debug)]
struct StudySArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    delta: f64,
    #[arg(long, value_parser = parse_levels)]
    levels: Levels,
    #[arg(long)]
    ref_level: u32,
    /// Comma-separated orders.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.25,0.5,0.75")]
    s_values: Vec<f64>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated horizons, each a multiple of 1/cells.
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.125,0.0625")]
    deltas: Vec<f64>,
    #[arg(long)]
    cells: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Levels {
    first: u32,
    last: u32,
}

impl Levels {
    fn list(self) -> Vec<u32> {
        (self.first..=self.last).collect()
    }
}

fn parse_levels(s: &str) -> Result<Levels, String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected a range `a:b`, got `{s}`"))?;
    let first: u32 = a.trim().parse().map_err(|e| format!("bad level `{a}`: {e}"))?;
    let last: u32 = b.trim().parse().map_err(|e| format!("bad level `{b}`: {e}"))?;
    if first > last || last > 20 {
        return Err(format!("levels must satisfy a <= b <= 20, got {first}:{last}"));
    }
    Ok(Levels { first, last })
}

fn parse_sigma(s: &str) -> Result<SigmaMode, String> {
    match s {
        "fractional" => Ok(SigmaMode::FractionalNormalization),
        "local" => Ok(SigmaMode::LocalScaling),
        "laplacian" => Ok(SigmaMode::LaplacianLimit),
        "inv-two-delta-sq" => Ok(SigmaMode::InverseTwoDeltaSq),
        other => match other.strip_prefix("constant:") {
            Some(v) => v
                .parse()
                .map(SigmaMode::Constant)
                .map_err(|e| format!("bad sigma value `{v}`: {e}")),
            None => Err(format!(
                "unknown sigma `{other}` (constant:<v>, fractional, local, laplacian, inv-two-delta-sq)"
            )),
        },
    }
}

/// Obstacle selector; `None` means no obstacle.
#[derive(Debug, Clone, Copy, PartialEq)]
struct PsiArg(Option<Obstacle>);

fn parse_psi(s: &str) -> Result<PsiArg, String> {
    match s {
        "smooth" => Ok(PsiArg(Some(Obstacle::Smooth))),
        "kink" => Ok(PsiArg(Some(Obstacle::Kink))),
        "none" => Ok(PsiArg(None)),
        other => match other.strip_prefix("const:") {
            Some(v) => {
                let v: f64 = v.parse().map_err(|e| format!("bad obstacle value `{v}`: {e}"))?;
                if v.is_finite() {
                    Ok(PsiArg(Some(Obstacle::Constant(v))))
                } else {
                    Err("obstacle value must be finite".into())
                }
            }
            None => Err(format!("unknown obstacle `{other}` (smooth, kink, const:<v>, none)")),
        },
    }
}

fn parse_horizon(s: &str) -> Result<Horizon, String> {
    match s {
        "inf" | "infinite" => Ok(Horizon::Infinite),
        v => v
            .parse()
            .map(Horizon::Finite)
            .map_err(|e| format!("bad horizon `{v}`: {e}")),
    }
}

impl Common {
    fn case(&self) -> KernelCase {
        match self.kernel {
            KernelArg::Fractional => KernelCase::FractionalType,
            KernelArg::Constant => KernelCase::ConstantIntegrable,
            KernelArg::Peridynamic => KernelCase::Peridynamic,
        }
    }

    fn s(&self) -> Option<f64> {
        (self.kernel == KernelArg::Fractional).then_some(self.s)
    }

    fn problem_kind(&self) -> Result<ProblemKind, Error> {
        match (self.problem, self.psi.0) {
            (ProblemArg::Linear, _) => Ok(ProblemKind::Linear),
            (ProblemArg::Obstacle, Some(psi)) => Ok(ProblemKind::Obstacle(psi)),
            (ProblemArg::Obstacle, None) => Err(Error::InvalidParameter(
                "the obstacle problem needs --psi smooth, kink or const:<v>".into(),
            )),
        }
    }

    fn spec(&self) -> Result<ProblemSpec, Error> {
        if !self.f.is_finite() {
            return Err(Error::InvalidParameter("f must be finite".into()));
        }
        Ok(ProblemSpec {
            case: self.case(),
            s: self.s(),
            sigma_mode: self.sigma,
            f: self.f,
            problem: self.problem_kind()?,
        })
    }
}

/// Nodes of `[a, b]` with the solution padded by the boundary zeros.
fn profile_rows(space: &FeSpace1D, columns: &[&[f64]]) -> Vec<String> {
    let n = space.cells();
    (0..=n)
        .map(|i| {
            let mut line = fmt_num(space.coord(i as i64));
            for c in columns {
                let v = if i == 0 || i == n { 0.0 } else { c[i - 1] };
                line.push(',');
                line.push_str(&fmt_num(v));
            }
            line
        })
        .collect()
}

fn solve(args: &SolveArgs) -> Result<String, Error> {
    let spec = args.common.spec()?;
    let kernel = make_kernel(spec.case, spec.s, args.delta, spec.sigma_mode, 1)?;
    // an infinite horizon is handled on the collar δ₀ = diam Ω
    let collar = match args.delta {
        Horizon::Finite(d) => d,
        Horizon::Infinite => 1.0,
    };
    let space = build_space(0.0, 1.0, args.cells, collar)?;
    let storage = match args.assembly {
        AssemblyArg::Toeplitz => Storage::Toeplitz,
        AssemblyArg::Dense => Storage::Dense,
    };
    let ops = assemble_operators(&space, &kernel, storage)?;
    let f = spec.f;
    let (header, rows) = match spec.problem {
        ProblemKind::Linear => {
            let b = assemble_load(&space, |_| f)?;
            let sol = solve_linear(&ops.stiffness, &b)?;
            eprintln!("linear solve: residual {:.3e}", sol.residual_norm);
            ("x,u", profile_rows(&space, &[&sol.u]))
        }
        ProblemKind::Obstacle(psi) => {
            let pb = ObstacleProblem::new(ops, |_| f, |x| psi.eval(x))?;
            let (u, lambda) = match args.method {
                MethodArg::ActiveSet => {
                    let r = active_set_solve(&pb, &ActiveSetOptions::default())?;
                    eprintln!("active set: {} iterations, {:?}", r.iterations, r.kkt);
                    (r.u, r.lambda)
                }
                MethodArg::Penalty => {
                    let eps = penalty_schedule(args.epsilon)?;
                    let sols = penalty_continuation(&pb, &eps, &PenaltyOptions::default())?;
                    let last = sols.into_iter().last().expect("schedule is never empty");
                    let kkt = kkt_residuals(&pb, &last.u, &last.lambda);
                    eprintln!(
                        "penalty: epsilon {:e}, {} Newton steps in the last solve, {kkt:?}",
                        args.epsilon, last.iterations
                    );
                    (last.u, last.lambda)
                }
            };
            ("x,u,lambda", profile_rows(&space, &[&u, &lambda]))
        }
    };
    Ok(csv(header, &rows))
}

/// `1e-2, 1e-3, …` down to `eps`, ending exactly at `eps`.
fn penalty_schedule(eps: f64) -> Result<Vec<f64>, Error> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {eps}")));
    }
    let mut out = Vec::new();
    let mut e = 1e-2;
    while e > eps * 1.0001 {
        out.push(e);
        e /= 10.0;
    }
    out.push(eps);
    Ok(out)
}

fn csv(header: &str, rows: &[String]) -> String {
    let mut out = String::with_capacity(rows.len() * 64);
    out.push_str(header);
    out.push('\n');
    for r in rows {
        out.push_str(r);
        out.push('\n');
    }
    out
}

fn study_h(args: &StudyHArgs) -> Result<String, Error> {
    let config = StudyConfig {
        spec: args.common.spec()?,
        kind: StudyKind::H {
            delta: args.delta,
            levels: args.levels.list(),
            ref_level: args.ref_level,
        },
    };
    let rep = run_study(&config)?;
    report_stats(&rep.all_stats());
    Ok(rep.to_csv())
}

fn study_delta(args: &StudyDeltaArgs) -> Result<String, Error> {
    let spec = args.common.spec()?;
    if spec.case != KernelCase::FractionalType {
        return Err(Error::InvalidParameter(
            "the horizon study needs the fractional kernel".into(),
        ));
    }
    if let Some(d) = args.deltas.iter().find(|&&d| d < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "horizons of the study must be at least diam = 1, got {d}"
        )));
    }
    let rep = run_study(&StudyConfig {
        spec,
        kind: StudyKind::Delta {
            deltas: args.deltas.clone(),
            level: args.level,
        },
    })?;
    report_stats(&rep.all_stats());
    Ok(rep.to_csv())
}

fn study_s(args: &StudySArgs) -> Result<String, Error> {
    let config = StudyConfig {
        spec: args.common.spec()?,
        kind: StudyKind::H {
            delta: args.delta,
            levels: args.levels.list(),
            ref_level: args.ref_level,
        },
    };
    let sweep = run_s_sweep(&config, &args.s_values)?;
    for (s, rep) in &sweep.entries {
        eprint!("s = {s}: ");
        report_stats(&rep.all_stats());
    }
    Ok(sweep.to_csv())
}

fn report_stats(stats: &[nonlocal_vi::analysis::SolverStats]) {
    if stats.is_empty() {
        eprintln!("linear solves only");
        return;
    }
    let iters: Vec<usize> = stats.iter().map(|s| s.iterations).collect();
    let worst = stats
        .iter()
        .map(|s| s.kkt.stationarity.max(s.kkt.complementarity))
        .fold(0.0, f64::max);
    eprintln!("active set iterations {iters:?}, worst KKT residual {worst:.2e}");
}

fn compare_local(args: &CompareArgs) -> Result<String, Error> {
    let spec = args.common.spec()?;
    let f = spec.f;
    let largest = args.deltas.iter().cloned().fold(f64::NAN, f64::max);
    if !(largest > 0.0) {
        return Err(Error::InvalidParameter("need at least one positive horizon".into()));
    }
    // one mesh for the output columns; every solve has the same free nodes
    let local_space = build_space(0.0, 1.0, args.cells, largest)?;
    let mut header = String::from("x");
    let mut columns: Vec<Vec<f64>> = Vec::new();
    match spec.problem {
        ProblemKind::Linear => {
            header.push_str(",u_local");
            columns.push(solve_local_reference(&local_space, |_| f)?);
        }
        ProblemKind::Obstacle(psi) => {
            header.push_str(",u_local,lambda_local");
            let r = solve_local_obstacle(&local_space, |_| f, |x| psi.eval(x))?;
            columns.push(r.u);
            columns.push(r.lambda);
        }
    }
    for &d in &args.deltas {
        let space = build_space(0.0, 1.0, args.cells, d)?;
        let kernel = spec.kernel(Horizon::Finite(d))?;
        let ops = assemble_operators(&space, &kernel, Storage::Toeplitz)?;
        let tag = fmt_num(d);
        match spec.problem {
            ProblemKind::Linear => {
                let b = assemble_load(&space, |_| f)?;
                let _ = write!(header, ",u_delta_{tag}");
                columns.push(solve_linear(&ops.stiffness, &b)?.u);
            }
            ProblemKind::Obstacle(psi) => {
                let pb = ObstacleProblem::new(ops, |_| f, |x| psi.eval(x))?;
                let r = active_set_solve(&pb, &ActiveSetOptions::default())?;
                let _ = write!(header, ",u_delta_{tag},lambda_delta_{tag}");
                columns.push(r.u);
                columns.push(r.lambda);
            }
        }
    }
    let refs: Vec<&[f64]> = columns.iter().map(|c| c.as_slice()).collect();
    Ok(csv(&header, &profile_rows(&local_space, &refs)))
}

fn run(cli: &Cli) -> Result<(String, Option<PathBuf>), Error> {
    Ok(match &cli.command {
        Command::Solve(a) => (solve(a)?, a.common.out.clone()),
        Command::StudyH(a) => (study_h(a)?, a.common.out.clone()),
        Command::StudyDelta(a) => (study_delta(a)?, a.common.out.clone()),
        Command::StudyS(a) => (study_s(a)?, a.common.out.clone()),
        Command::CompareLocal(a) => (compare_local(a)?, a.common.out.clone()),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((text, None)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Ok((text, Some(path))) => match std::fs::write(&path, text) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: cannot write {}: {e}", path.display());
                ExitCode::from(1)
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
