//! End-to-end runs of the `netform` binary on the bundled configs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(format!("{name}.toml"))
}

fn netform(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netform"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("NETFORM_THREADS")
        .output()
        .expect("binary runs")
}

fn run(cmd: &str, cfg: &str, out: &Path) -> Output {
    netform(&[cmd, "--config", config(cfg).to_str().unwrap()], out)
}

/// Data rows of a CSV, without comment lines and the column header.
fn rows(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn summary(path: &Path, key: &str) -> String {
    rows(path).into_iter().find(|r| r[0] == key).unwrap_or_else(|| panic!("{key} missing"))[1].clone()
}

#[test]
fn gibbs_and_stationary_agree() {
    for cfg in ["isolated_logit", "random_isolated", "cauchy_linear", "epsilon", "planner"] {
        let dir = tempfile::tempdir().unwrap();
        assert!(run("gibbs", cfg, dir.path()).status.success(), "{cfg}");
        assert!(run("stationary", cfg, dir.path()).status.success(), "{cfg}");
        let g = rows(&dir.path().join("gibbs.csv"));
        let s = rows(&dir.path().join("stationary.csv"));
        assert_eq!(g.len(), 64);
        for (a, b) in g.iter().zip(&s) {
            assert_eq!(a[1], b[1]);
            let (pa, pb): (f64, f64) = (a[4].parse().unwrap(), b[3].parse().unwrap());
            assert!((pa - pb).abs() < 1e-8, "{cfg} {}: {pa} vs {pb}", a[1]);
        }
    }
}

#[test]
fn switching_costs_are_reported_not_conservative() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("check", "switching_cost", dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(summary(&dir.path().join("check_summary.csv"), "verdict"), "not_conservative");
    let witnesses = rows(&dir.path().join("check.csv"));
    assert_eq!(witnesses.len(), 1);
    let (lhs, rhs): (f64, f64) = (witnesses[0][5].parse().unwrap(), witnesses[0][6].parse().unwrap());
    assert!((lhs - rhs).abs() > 1e-9);

    let out = run("gibbs", "switching_cost", dir.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("not_conservative") && stderr.contains("path sums differ"), "{stderr}");
    assert!(!dir.path().join("gibbs.csv").exists());
}

#[test]
fn non_logit_additive_model_is_an_ordinal_potential_only() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run("check", "cauchy_linear", dir.path()).status.success());
    let path = dir.path().join("check_summary.csv");
    assert_eq!(summary(&path, "verdict"), "conservative");
    assert_eq!(summary(&path, "ordinal_potential"), "true");
    assert_eq!(summary(&path, "exact_potential"), "false");
}

#[test]
fn bad_configs_exit_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[model]\nnodes = 3\nutility = { family = \"out_degree\", a = 1.0 }\ncolour = \"red\"\n").unwrap();
    let out = netform(&["check", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));

    std::fs::write(&bad, "[model]\nnodes = 9\nutility = { family = \"out_degree\", a = 1.0 }\n").unwrap();
    assert_eq!(netform(&["gibbs", "--config", bad.to_str().unwrap()], dir.path()).status.code(), Some(2));

    let missing = dir.path().join("missing.toml");
    assert_eq!(netform(&["check", "--config", missing.to_str().unwrap()], dir.path()).status.code(), Some(1));
}

#[test]
fn overrides_are_recorded_in_the_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("isolated_logit");
    let out = netform(&["gibbs", "--config", cfg.to_str().unwrap(), "--seed", "77", "--threads", "2"], dir.path());
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("gibbs.csv")).unwrap();
    assert!(text.contains("# seed: 77\n"));
    assert!(text.contains("# threads: 2 (flag)\n"));
    assert!(text.contains("#   seed = 77\n"));
    assert!(text.contains("# rng: chacha8\n"));

    let env_dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_netform"))
        .args(["gibbs", "--config", cfg.to_str().unwrap(), "--out"])
        .arg(env_dir.path())
        .env("NETFORM_THREADS", "3")
        .output()
        .unwrap();
    assert!(out.status.success());
    let env_text = std::fs::read_to_string(env_dir.path().join("gibbs.csv")).unwrap();
    assert!(env_text.contains("# threads: 3 (env NETFORM_THREADS)\n"));
    // the thread count changes only the provenance line
    let strip = |t: &str| t.lines().filter(|l| !l.starts_with("# threads") && !l.starts_with("# seed") && !l.contains("seed =") && !l.starts_with("# config_sha256")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&text), strip(&env_text));
}

#[test]
fn mpe_flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("mpe");
    let out = netform(&["mpe", "--config", cfg.to_str().unwrap(), "--rho", "1000", "--damping", "0.3"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let path = dir.path().join("mpe_summary.csv");
    assert_eq!(summary(&path, "rho").parse::<f64>().unwrap(), 1000.0);
    assert_eq!(summary(&path, "damping").parse::<f64>().unwrap(), 0.3);
    // three iterations cannot reach the tolerance: outputs are kept, exit code 2
    let out = netform(&["mpe", "--config", cfg.to_str().unwrap(), "--max-iters", "3"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(summary(&path, "converged"), "false");
}

#[test]
fn sweep_grid_flags_and_cell_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("sweep_heterophilous");
    let out = netform(&["sweep", "--config", cfg.to_str().unwrap(), "--v0-steps", "3", "--gamma-steps", "2"], dir.path());
    assert!(out.status.success());
    let r = rows(&dir.path().join("sweep.csv"));
    assert_eq!(r.len(), 6);
    let seeds: Vec<u64> = r.iter().map(|row| row[1].parse().unwrap()).collect();
    for (cell, seed) in seeds.iter().enumerate() {
        assert_eq!(*seed, netform_cli::commands::cell_seed(2024, cell as u64));
    }
}
