use std::process::Command;

use fogswipt_cli::output::{mask_timing, CONVERGENCE_HEADER, RESULT_HEADER, SCHEMA_VERSION};

fn fogswipt(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_fogswipt")).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

#[test]
fn headers_are_pinned() {
    assert_eq!(SCHEMA_VERSION, 1, "bump the golden headers together with the schema version");
    assert_eq!(
        RESULT_HEADER.join(","),
        "seed,param_name,param_value,mode,design,objective_j,iterations,wall_time_s,converged,max_rank_ratio"
    );
    assert_eq!(CONVERGENCE_HEADER.join(","), "seed,k,q,eps_tilde");
}

#[test]
fn fot_writes_one_row_per_mode() {
    let (code, out, err) = fogswipt(&["fot", "--seed", "4"]);
    assert_eq!(code, 0, "{err}");
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], RESULT_HEADER.join(","));
    assert_eq!(lines.len(), 4);
    for (line, mode) in lines[1..].iter().zip(["partial", "local_only", "offload_only"]) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!((f[0], f[3], f[4], f[8]), ("4", mode, "fot", "true"));
    }
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "gamma_grid_db = [0.0, 6.0]\nseeds = [1, 2, 3]\n").unwrap();
    let csv = dir.path().join("out.csv");
    let (code, out, err) = fogswipt(&[
        "sweep-gamma",
        "--config",
        cfg.to_str().unwrap(),
        "--seeds",
        "5..7",
        "--modes",
        "partial,local_only",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.is_empty());
    let text = std::fs::read_to_string(&csv).unwrap();
    let keys: Vec<(String, String, String)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[2].to_string(), f[3].to_string())
        })
        .collect();
    let expected: Vec<(String, String, String)> = ["5", "6"]
        .iter()
        .flat_map(|s| ["0", "6"].iter().flat_map(move |g| ["partial", "local_only"].iter().map(move |m| (s.to_string(), g.to_string(), m.to_string()))))
        .collect();
    assert_eq!(keys, expected);
}

#[test]
fn infeasible_cells_set_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("hard.toml");
    std::fs::write(&cfg, "circuit_power_w = 1e6\n").unwrap();
    let (code, out, _) = fogswipt(&["fot", "--config", cfg.to_str().unwrap(), "--modes", "partial"]);
    assert_eq!(code, 2);
    assert!(out.lines().nth(1).unwrap().contains(",false,"));
    let (code, _, _) = fogswipt(&["fot", "--config", cfg.to_str().unwrap(), "--modes", "partial", "--allow-infeasible"]);
    assert_eq!(code, 0);
}

#[test]
fn bad_input_is_an_error() {
    assert_eq!(fogswipt(&["fot", "--modes", "remote"]).0, 1);
    assert_eq!(fogswipt(&["fot", "--tu-frac", "1.5"]).0, 1);
    assert_eq!(fogswipt(&["fot", "--config", "/nonexistent.toml"]).0, 1);
    assert_ne!(fogswipt(&["fot", "--seed", "1", "--seeds", "2"]).0, 0);
}

#[test]
fn repeated_runs_are_byte_identical_without_timing() {
    let run = |jobs: &str| mask_timing(&fogswipt(&["sweep-task", "--seeds", "0..2", "--jobs", jobs]).1);
    let a = run("1");
    assert_eq!(a, run("1"));
    assert_eq!(a, run("2"));
}

#[test]
fn convergence_trace_ends_below_tolerance() {
    let (code, out, err) = fogswipt(&["convergence", "--seeds", "0,1"]);
    assert_eq!(code, 0, "{err}");
    let mut lines = out.lines();
    assert_eq!(lines.next().unwrap(), CONVERGENCE_HEADER.join(","));
    for seed in ["0", "1"] {
        let rows: Vec<Vec<&str>> = out.lines().skip(1).map(|l| l.split(',').collect()).filter(|f: &Vec<&str>| f[0] == seed).collect();
        assert!(!rows.is_empty() && rows.len() <= 30);
        let eps: f64 = rows.last().unwrap()[3].parse().unwrap();
        assert!(eps <= 1e-6);
    }
}
