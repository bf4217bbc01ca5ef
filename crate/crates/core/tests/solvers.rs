use nonlocal_vi::assembly::{assemble_operators, OperatorSet, Storage};
use nonlocal_vi::grid::FeSpace1D;
use nonlocal_vi::kernels::KernelSpec;
use nonlocal_vi::linear::{l2_norm, solve_linear};
use nonlocal_vi::obstacle::{
    active_set_solve, kkt_residuals, lewy_stampacchia_margin, penalty_continuation,
    penalty_solve, ActiveSetOptions, Obstacle, ObstacleProblem, PenaltyOptions,
};

fn ops(level: u32, s: f64, delta: f64) -> OperatorSet {
    let sp = FeSpace1D::unit_interval(level, delta).unwrap();
    let k = KernelSpec::fractional(s, delta, 1.0).unwrap();
    assemble_operators(&sp, &k, Storage::Toeplitz).unwrap()
}

#[test]
fn penalty_agrees_with_active_set() {
    for s in [0.25, 0.5, 0.75] {
        for delta in [0.25, 1.0] {
            for (psi, f) in [(Obstacle::Smooth, 0.0), (Obstacle::Smooth, -1.0), (Obstacle::Kink, 0.0)] {
                let pb = ObstacleProblem::new(ops(6, s, delta), move |_| f, move |x| psi.eval(x))
                    .unwrap();
                let exact = active_set_solve(&pb, &ActiveSetOptions::default()).unwrap();
                assert!(exact.kkt.within(1e-10), "{:?}", exact.kkt);
                let eps = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
                let sols = penalty_continuation(&pb, &eps, &PenaltyOptions::default()).unwrap();
                let last = sols.last().unwrap();
                let e: Vec<f64> = last.u.iter().zip(&exact.u).map(|(a, b)| a - b).collect();
                let d = l2_norm(&pb.ops.space, &e);
                assert!(d <= 1e-4, "s = {s}, δ = {delta}, {psi:?}, f = {f}: {d:e}");
                for sol in &sols {
                    let m = lewy_stampacchia_margin(&pb, &sol.lambda);
                    assert!(m.iter().all(|&v| v >= -1e-12));
                }
            }
        }
    }
}

#[test]
fn active_set_respects_the_multiplier_bound() {
    let pb = ObstacleProblem::new(ops(7, 0.5, 1.0), |_| 0.0, |x| Obstacle::Smooth.eval(x)).unwrap();
    let sol = active_set_solve(&pb, &ActiveSetOptions::default()).unwrap();
    let gmax = pb.g_plus_vec.iter().cloned().fold(0.0, f64::max);
    let m = lewy_stampacchia_margin(&pb, &sol.lambda);
    assert!(m.iter().all(|&v| v >= -1e-6 * gmax));
    assert!(sol.iterations <= 25);
}

#[test]
fn inactive_obstacle_gives_the_linear_solution() {
    let pb = ObstacleProblem::new(ops(5, 0.5, 0.5), |_| 1.0, |_| -1e6).unwrap();
    assert!(pb.g_plus_vec.iter().all(|&g| g == 0.0));
    let lin = solve_linear(&pb.ops.stiffness, &pb.f_vec).unwrap().u;
    for eps in [1e-2, 1e-4] {
        let sol = penalty_solve(&pb, eps, &PenaltyOptions::default(), None).unwrap();
        for (a, b) in sol.u.iter().zip(&lin) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(sol.lambda.iter().all(|&l| l == 0.0));
    }
    let m = lewy_stampacchia_margin(&pb, &vec![0.0; pb.n_free()]);
    assert!(m.iter().all(|&v| v == 0.0));
}

#[test]
fn complementarity_detects_a_lifted_contact_node() {
    let pb = ObstacleProblem::new(ops(6, 0.5, 1.0), |_| 0.0, |x| Obstacle::Smooth.eval(x)).unwrap();
    let sol = active_set_solve(&pb, &ActiveSetOptions::default()).unwrap();
    let p = *sol.active_set.iter().find(|&&p| sol.lambda[p] > 0.0).unwrap();
    let mut u = sol.u.clone();
    u[p] += 1e-3;
    let k = kkt_residuals(&pb, &u, &sol.lambda);
    let h = pb.ops.space.h();
    let want = h * sol.lambda[p] * 1e-3;
    assert!((k.complementarity - want).abs() <= 1e-9 * want, "{} vs {want}", k.complementarity);
}
