use std::fs;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_local-time-lab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn kernel_eval_prints_one_row() {
    let o = run(&["kernel-eval", "--family", "phi1d", "--m", "2", "--h", "0.01", "--t1", "0.3", "--t2", "0.7"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("m[1]@chaos-kernels,"));
    let v: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
    let q = local_time_lab::quad::QuadratureConfig::with_tolerances(1e-300, 1e-10);
    let lib = local_time_lab::chaos::phi_1d(2, 0.01, 0.3, 0.7, &q).unwrap().value;
    assert_eq!(v, lib);
}

#[test]
fn phi2d_and_contraction_families() {
    let o = run(&["kernel-eval", "--family", "phi2d", "--indices", "1,2,1,2", "--h", "0.1", "--h2", "0.05"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["kernel-eval", "--family", "contraction", "--m", "2", "--r", "1", "--h", "0.05", "--samples", "2000"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 2);
}

#[test]
fn run_writes_reproducible_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    let out = dir.path().join("out/riesz");
    fs::write(
        &cfg,
        format!(
            "experiment = riesz-scaling\noutput = {}\npaths = 40\nsteps = 1024\nh = 0.4, 0.2, 0.1, 0.05\nseed = 9\n",
            out.display()
        ),
    )
    .unwrap();
    let cfg_s = cfg.to_str().unwrap();
    assert!(run(&["run", "--config", cfg_s]).status.success());
    let csv1 = fs::read(dir.path().join("out/riesz.csv")).unwrap();
    let json1 = fs::read(dir.path().join("out/riesz.json")).unwrap();
    assert!(dir.path().join("out/riesz.timing.json").exists());
    let o = bin().env("LTL_THREADS", "1").args(["run", "--config", cfg_s]).output().unwrap();
    assert!(o.status.success());
    assert_eq!(csv1, fs::read(dir.path().join("out/riesz.csv")).unwrap());
    assert_eq!(json1, fs::read(dir.path().join("out/riesz.json")).unwrap());

    let report: serde_json::Value = serde_json::from_slice(&json1).unwrap();
    assert_eq!(report["experiment"], "riesz-scaling");
    assert_eq!(report["seeds"][0], 9);
    assert_eq!(report["config"]["paths"], "40");
    assert!(report["build"].is_string());
    let header = String::from_utf8(csv1).unwrap();
    assert!(header.starts_with("h[space]@experiment-runner,variance[1]@brownian-lab"));
}

#[test]
fn bad_configs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "experiment = riesz-scaling\nh = 0.1, 0.2, 0.05, 0.01\n").unwrap();
    let o = run(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("strictly decreasing"));
    fs::write(&cfg, "experiment = riesz-scaling\nwidth = 3\n").unwrap();
    assert!(!run(&["run", "--config", cfg.to_str().unwrap()]).status.success());
    let o = bin().env("LTL_THREADS", "zero").args(["appendix-check", "--integral", "sing1", "--delta", "0.5"]).output().unwrap();
    assert!(!o.status.success());
}

#[test]
fn appendix_check_diverges_above_quarter() {
    let o = run(&["appendix-check", "--integral", "sing2", "--delta", "0.5"]);
    assert!(o.status.success());
    let row = stdout(&o).lines().nth(1).unwrap().to_string();
    assert_eq!(row.split(',').nth(2), Some("D"));
    assert!(!run(&["appendix-check", "--integral", "sing9", "--delta", "0.5"]).status.success());
}

#[test]
fn simulate_and_variance_table() {
    let o = run(&["simulate", "--functional", "alpha", "--paths", "5", "--steps", "512"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 6);
    let o = run(&["simulate", "--functional", "H", "--paths", "3", "--steps", "512", "--h", "0.1"]);
    assert!(o.status.success());
    let o = run(&["variance-table", "--dim", "2", "--m-list", "1"]);
    assert!(o.status.success());
    let v: f64 = stdout(&o).lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!((v - 12.3577).abs() < 1e-3);
}
