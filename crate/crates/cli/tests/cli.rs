use std::fs;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kkmono")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn tmp(name: &str, text: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("kkmono-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn spectrum_json_matches_table() {
    let args = ["spectrum", "--q", "1", "--n", "3", "--routes", "spherical,algebraic"];
    let t = run(&args);
    let j = run(&[&args[..], &["--format", "json"]].concat());
    assert!(t.status.success() && j.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&j)).unwrap();
    let rows = v["rows"].as_array().unwrap();
    let table = stdout(&t);
    let lines: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), lines.len());
    for (row, line) in rows.iter().zip(&lines) {
        let cells: Vec<&str> = line.split_whitespace().collect();
        let e = row["energy_spherical"].as_f64().unwrap();
        assert_eq!(cells[4].parse::<f64>().unwrap(), e);
    }
    assert_eq!(v["meta"]["mode"], "reconciled");
}

#[test]
fn flags_override_config_file() {
    let cfg = tmp("run.conf", "# test\nmu = 2\nq = 1\nn = 2\nformat = csv\n");
    let cfg = cfg.to_str().unwrap();
    let a = stdout(&run(&["spectrum", "--config", cfg, "--routes", "spherical"]));
    let b = stdout(&run(&["spectrum", "--config", cfg, "--mu", "1", "--routes", "spherical"]));
    assert!(a.starts_with("q,m,n,branch,"));
    let energy = |s: &str| s.lines().nth(1).unwrap().split(',').nth(4).unwrap().parse::<f64>().unwrap();
    // Coulomb-like scaling: E ~ 1/mu^2 in the pure monopole limit.
    assert!((energy(&a) * 4.0 - energy(&b)).abs() < 1e-12 * energy(&b).abs());
}

#[test]
fn bad_input_exits_two() {
    assert_eq!(run(&["spectrum", "--c", "1,2"]).status.code(), Some(2));
    assert_eq!(run(&["spectrum", "--mu", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["spectrum", "--q", "1", "--m", "0", "--n", "1"]).status.code(), Some(2));
    let cfg = tmp("bad.conf", "colour = red\n");
    assert_eq!(run(&["spectrum", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn printed_spherical_neutral_spectrum_is_empty() {
    let o = run(&["spectrum", "--mode", "printed", "--routes", "spherical", "--q", "0", "--c", "0,0,0,0"]);
    assert_eq!(o.status.code(), Some(3));
    let o = run(&["spectrum", "--q", "0", "--c", "0,0,0,0", "--routes", "spherical"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn corrupted_calibration_fails_verification() {
    let text = kkmono::calibration::SHIPPED.replace("alpha_sign = -1", "alpha_sign = 1");
    assert_ne!(text, kkmono::calibration::SHIPPED);
    let cal = tmp("flipped.cal", &text);
    let o = run(&["verify", "--calibration", cal.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("kk-limit"));
    let o = run(&["verify", "--recalibrate", "--calibration", cal.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha_sign"));
}

#[test]
fn paper_as_printed_reports_without_failing() {
    let o = run(&["verify", "--paper-as-printed"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("mode printed"));
    assert!(s.contains("FAIL"));
    assert!(s.contains("DEFECT"));
}

#[test]
fn radial_ground_state_is_normalized() {
    let o = run(&["wavefunction", "--q", "1", "--m", "0", "--n", "2"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert_eq!(s.lines().filter(|l| l.starts_with("coordinate")).count(), 1);
    let pts: Vec<(f64, f64)> = s
        .lines()
        .skip(1)
        .map(|l| {
            let (x, y) = l.split_once(',').unwrap();
            (x.parse().unwrap(), y.parse().unwrap())
        })
        .collect();
    assert_eq!(pts.len(), 1000);
    let norm: f64 = pts.windows(2).map(|w| (w[1].0 - w[0].0) * (w[0].1 * w[0].1 + w[1].1 * w[1].1) / 2.0).sum();
    assert!((norm - 1.0).abs() < 1e-6, "{norm}");
    let nodes = pts.windows(2).filter(|w| w[0].1 * w[1].1 < 0.0).count();
    assert_eq!(nodes, 0);
}

#[test]
fn algebra_table_and_matrices() {
    let o = run(&["algebra", "--q", "1", "--m", "0", "--p", "1", "--format", "csv"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.starts_with("p,branch,energy,u,quantity,index,value\n"));
    for line in s.lines().filter(|l| l.contains(",residual_")) {
        let v: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(v.abs() < 1e-9, "{line}");
    }
    let m = stdout(&run(&["algebra", "--q", "1", "--m", "0", "--p", "1", "--matrices"]));
    assert!(m.contains("raise") && m.contains("lower"));
}
