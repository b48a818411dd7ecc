use std::path::Path;
use std::process::{Command, Output};

fn fpt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpt")).args(args).output().expect("binary runs")
}

fn with_config(dir: &Path, text: &str, cmd: &str) -> Output {
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, text).unwrap();
    let out = dir.join("out");
    fpt(&[cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join("out").join(name)).unwrap()
}

#[test]
fn selftest_passes() {
    let o = fpt(&["selftest"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(!String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn convergence_csv_contract() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "model = linear_drift\nh = 2^-3, 2^-4, 2^-5\nrho = 0,0,0; 0.5,0.5,0.5\n";
    let o = with_config(dir.path(), cfg, "convergence");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(dir.path(), "convergence.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("model,rho,h,err_xnorm"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 9);
    // zero drift at the centre: the correction vanishes on every mesh
    for r in rows.iter().filter(|r| r[1] == "0;0;0") {
        assert_eq!(r[3].parse::<f64>().unwrap(), 0.0);
    }
    let errs: Vec<f64> = rows.iter().filter(|r| r[1] == "0.5;0.5;0.5").map(|r| r[3].parse().unwrap()).collect();
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.7..=2.5).contains(&ratio), "{ratio}");
    }
    let maxes: Vec<f64> = rows.iter().filter(|r| r[1] == "max").map(|r| r[3].parse().unwrap()).collect();
    assert_eq!(maxes, errs);
    assert!(dir.path().join("out/config.resolved").exists());

    // byte-identical on rerun
    let again = with_config(dir.path(), cfg, "convergence");
    assert!(again.status.success());
    assert_eq!(read(dir.path(), "convergence.csv"), csv);
}

#[test]
fn interpolation_csv_contract() {
    let dir = tempfile::tempdir().unwrap();
    let o = with_config(dir.path(), "model = linear_drift\nh = 2^-3\nq = 3, 4\nrho = 0,0,0; 1,0,0\n", "interpolate");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(dir.path(), "interpolation.csv");
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(csv.lines().next(), Some("model,h,q,points,max_err"));
    assert_eq!(rows.iter().map(|r| r[3]).collect::<Vec<_>>(), vec!["1", "7"]);
    // both test points are sparse-grid points at q = 4
    assert!(rows[1][4].parse::<f64>().unwrap() <= 1e-12);
    assert!(dir.path().join("out/interpolant_k3_q4.json").exists());
}

#[test]
fn probability_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "model = linear_drift\nrange.mu0 = -0.5, 0.5\nrange.mu1 = -0.5, 0.5\nh = 2^-5\ny = 0.625\n\
               mc_paths = 20000\nmc_dt = 1e-3\n";
    let o = with_config(dir.path(), cfg, "probability");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(dir.path(), "probability.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap().split(',').count(), 3 + 5);
    let row: Vec<f64> = lines.next().unwrap().split(',').skip(1).map(|v| v.parse().unwrap()).collect();
    let (p, pmc, se) = (row[4], row[5], row[6]);
    assert!((p - 0.5).abs() < 5e-3, "{p}");
    assert!((p - pmc).abs() <= 3.0 * se + 2.0 / 32.0);
}

#[test]
fn plot_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("convergence.csv");
    std::fs::write(&csv, "model,rho,h,err_xnorm\nm,max,0.125,0.4\nm,max,0.0625,0.2\n").unwrap();
    let run = || {
        let o = fpt(&["plot", csv.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(dir.path().join("convergence.svg")).unwrap()
    };
    let a = run();
    assert_eq!(a, run());
    assert!(String::from_utf8(a).unwrap().starts_with("<svg"));

    std::fs::write(&csv, "model,rho,h,err_xnorm\n").unwrap();
    assert_eq!(fpt(&["plot", csv.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(with_config(dir.path(), "colour = blue\n", "convergence").status.code(), Some(2));
    assert_eq!(with_config(dir.path(), "h = 0.3\n", "convergence").status.code(), Some(2));
    // the horizon outlives the collapse of the boundaries
    let o =
        with_config(dir.path(), "model = collapsing\nrange.tau = 0.1, 30\nh = 2^-2\nrho = 0,0,-1,1\n", "convergence");
    assert_eq!(o.status.code(), Some(3));
    let csv = read(dir.path(), "convergence.csv");
    assert!(csv.lines().last().unwrap().contains("FAILED"));
    let missing = fpt(&["convergence", "--config", dir.path().join("nope.cfg").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(1));
}
