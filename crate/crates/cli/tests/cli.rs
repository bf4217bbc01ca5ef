use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nonlocal-vi"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn parse_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap_or(f64::NAN)).collect())
        .collect()
}

#[test]
fn solve_obstacle_writes_padded_profile() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sol.csv");
    let o = run(&[
        "solve", "--problem", "obstacle", "--s", "0.5", "--delta", "1", "--cells", "64",
        "--sigma", "constant:1", "--f", "0", "--psi", "smooth", "--method", "active-set",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&out);
    assert!(text.starts_with("x,u,lambda\n"));
    let rows = parse_rows(&text);
    assert_eq!(rows.len(), 65);
    assert_eq!(rows[0], vec![0.0, 0.0, 0.0]);
    assert_eq!(rows[64], vec![1.0, 0.0, 0.0]);
    // contact at the obstacle's peak
    assert!((rows[32][1] - 0.25).abs() < 1e-14);
    assert!(rows[32][2] > 0.0);
    assert!(rows.iter().all(|r| r[2] >= 0.0 && r[1] >= 0.0));
}

#[test]
fn penalty_and_active_set_agree() {
    let dir = tempfile::tempdir().unwrap();
    let mut profiles = Vec::new();
    for method in ["active-set", "penalty"] {
        let out = dir.path().join(format!("{method}.csv"));
        let o = run(&[
            "solve", "--problem", "obstacle", "--delta", "0.25", "--cells", "32", "--f", "0",
            "--method", method, "--epsilon", "1e-7", "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        profiles.push(parse_rows(&read(&out)));
    }
    for (a, b) in profiles[0].iter().zip(&profiles[1]) {
        assert!((a[1] - b[1]).abs() < 1e-5);
    }
}

#[test]
fn solve_is_deterministic_and_routes_agree() {
    let args = ["solve", "--delta", "0.25", "--cells", "16", "--s", "0.75"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("x,u\n"));
    assert_eq!(text.lines().count(), 18);
    let dense = run(&[
        "solve", "--delta", "0.25", "--cells", "16", "--s", "0.75", "--assembly", "dense",
    ]);
    let dense = parse_rows(&String::from_utf8(dense.stdout).unwrap());
    for (x, y) in parse_rows(&text).iter().zip(&dense) {
        assert!((x[1] - y[1]).abs() < 1e-12);
    }
}

#[test]
fn fractional_laplacian_solve() {
    let o = run(&["solve", "--delta", "inf", "--cells", "16", "--sigma", "fractional"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = parse_rows(&String::from_utf8(o.stdout).unwrap());
    let mid = rows[8][1];
    // the exact solution is √(x(1−x)) for this normalization; the coarse
    // P1 value sits close below 1/2
    assert!(mid > 0.45 && mid < 0.5, "{mid}");
}

#[test]
fn study_h_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t2.csv");
    let o = run(&[
        "study-h", "--problem", "linear", "--s", "0.5", "--delta", "0.5", "--sigma",
        "constant:1", "--f", "1", "--levels", "3:5", "--ref-level", "7",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("h,energy_error,energy_rate,l2_error,l2_rate"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 5);
    assert_eq!(first[2], "");
    assert_eq!(first[4], "");
    let rows = parse_rows(&text);
    assert_eq!(rows.len(), 3);
    assert!(rows[1][2] > 0.3 && rows[1][2] < 0.8);
}

#[test]
fn study_delta_report() {
    let o = run(&[
        "study-delta", "--sigma", "fractional", "--f", "1", "--deltas", "2,4,8", "--level", "5",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("delta,energy_error,energy_rate,l2_error,l2_rate\n"));
    let rows = parse_rows(&text);
    assert!(rows[2][2] > 0.9 && rows[2][2] < 1.1, "{text}");
    let bad = run(&["study-delta", "--deltas", "0.5", "--level", "4"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn study_s_report() {
    let o = run(&[
        "study-s", "--problem", "obstacle", "--f", "0", "--delta", "1", "--levels", "4:5",
        "--ref-level", "6", "--s-values", "0.25,0.75",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("s,h,energy_error,energy_rate,l2_error,l2_rate\n"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn compare_local_profiles() {
    let o = run(&[
        "compare-local", "--problem", "obstacle", "--f", "-1", "--sigma", "laplacian",
        "--deltas", "0.25,0.125", "--cells", "32",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(header.split(',').count(), 7);
    assert!(header.starts_with("x,u_local,lambda_local,u_delta_"));
    assert_eq!(parse_rows(&text).len(), 33);
}

#[test]
fn usage_errors_exit_with_two() {
    let o = run(&["solve", "--s", "1.5", "--delta", "1", "--cells", "8"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("s must lie in (0,1)"));

    let o = run(&["solve", "--delta", "0.3", "--cells", "8"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("0.25"));

    let o = run(&["solve", "--delta", "1", "--cells", "8", "--sigma", "bogus"]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["solve", "--problem", "obstacle", "--psi", "none", "--delta", "1", "--cells", "8"]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["study-h", "--delta", "0.5", "--levels", "3:5", "--ref-level", "4"]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["solve", "--kernel", "peridynamic", "--delta", "inf", "--cells", "8"]);
    assert_eq!(o.status.code(), Some(2));
}
