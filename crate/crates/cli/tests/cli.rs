use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn projnorm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_projnorm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// `key=value` fields of the first line starting with `norm=`.
fn field(o: &Output, key: &str) -> String {
    let out = stdout(o);
    let line = out
        .lines()
        .find(|l| l.starts_with("norm="))
        .expect("summary line");
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in `{line}`"))
        .to_string()
}

fn norm(o: &Output) -> f64 {
    field(o, "norm").parse().unwrap()
}

fn verdict(o: &Output) -> String {
    stdout(o)
        .lines()
        .find_map(|l| l.strip_prefix("verdict="))
        .expect("verdict line")
        .to_string()
}

fn export(dir: &Path, args: &[&str]) -> String {
    let mut a = vec!["export-state"];
    a.extend_from_slice(args);
    a.extend_from_slice(&["--out", dir.to_str().unwrap()]);
    assert!(projnorm(&a).status.success());
    dir.join("state.json").to_str().unwrap().to_string()
}

#[test]
fn bell_over_complex() {
    let o = projnorm(&[
        "norm",
        "--state",
        "bell",
        "--field",
        "complex",
        "--restarts",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!((norm(&o) - 2f64.sqrt()).abs() < 1e-2);
    assert_eq!(field(&o, "rank"), "2");
    assert_eq!(field(&o, "converged"), "true");
}

#[test]
fn product_over_real() {
    let o = projnorm(&[
        "norm",
        "--state",
        "product",
        "--field",
        "real",
        "--restarts",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!((norm(&o) - 1.0).abs() < 1e-2);
    assert_eq!(field(&o, "rank"), "1");
}

#[test]
fn file_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let file = export(
        tmp.path(),
        &[
            "--state", "random", "--param", "m=3", "--param", "seed=4", "--field", "complex",
        ],
    );
    let run = |sub: &str| {
        let out = tmp.path().join(sub);
        let o = projnorm(&[
            "norm",
            "--file",
            &file,
            "--restarts",
            "3",
            "--seed",
            "7",
            "--epochs",
            "3000",
            "--out",
            out.to_str().unwrap(),
            "--trace",
        ]);
        assert!(matches!(o.status.code(), Some(0) | Some(3)));
        (
            o.stdout,
            fs::read(out.join("result.json")).unwrap(),
            fs::read(out.join("trace.csv")).unwrap(),
        )
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    let result: serde_json::Value = serde_json::from_slice(&a.1).unwrap();
    for key in [
        "norm_estimate",
        "nuclear_rank",
        "recon_error",
        "converged",
        "restart_index",
        "coeffs_abs",
    ] {
        assert!(result.get(key).is_some(), "{key}");
    }
    let trace = String::from_utf8(a.2).unwrap();
    let mut lines = trace.lines();
    assert_eq!(
        lines.next(),
        Some("epoch,total_loss,recon_error,rank_count,norm_sum")
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let mantissa = row[1].split('e').next().unwrap().replace(['.', '-'], "");
    assert!(mantissa.len() >= 12, "{}", row[1]);
}

#[test]
fn input_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"shape":[2,2],"field":"real","re":[1,2,3]}"#).unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["norm", "--file", bad.to_str().unwrap()],
        vec!["norm", "--file", "/nonexistent/t.json"],
        vec!["norm", "--state", "bell", "--file", bad.to_str().unwrap()],
        vec!["norm"],
        vec!["norm", "--state", "nope"],
        vec!["norm", "--state", "dps3", "--param", "beta=1"],
        vec!["norm", "--state", "dps3"],
        vec!["norm", "--state", "bell", "--param", "alpha"],
        vec![
            "norm",
            "--state",
            "ghz",
            "--param",
            "n=3",
            "--symmetric",
            "--lr",
            "-1",
        ],
        vec!["sweep", "--state", "dps3", "--grid", "alpha=0:5"],
    ];
    for args in cases {
        let o = projnorm(&args);
        assert_eq!(
            o.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn density_norm_rejects_vector_files() {
    let tmp = tempfile::tempdir().unwrap();
    let file = export(tmp.path(), &["--state", "ghz"]);
    let o = projnorm(&["density-norm", "--file", &file, "--restarts", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unconverged_exits_3_and_still_writes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = projnorm(&[
        "norm",
        "--state",
        "ghz",
        "--epochs",
        "20",
        "--restarts",
        "1",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(field(&o, "converged"), "false");
    assert!(tmp.path().join("result.json").exists());
}

#[test]
fn dps3_verdicts() {
    let run = |alpha: &str| {
        projnorm(&[
            "density-norm",
            "--state",
            "dps3",
            "--param",
            &format!("alpha={alpha}"),
            "--rank",
            "27",
            "--restarts",
            "2",
        ])
    };
    let o = run("2.5");
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(verdict(&o), "separable");
    let o = run("0");
    assert_eq!(verdict(&o), "entangled");
}

#[test]
fn bell_density_via_pure_state() {
    let o = projnorm(&["density-norm", "--state", "bell", "--restarts", "2"]);
    assert!((norm(&o) - 2.0).abs() < 3e-2);
    assert_eq!(verdict(&o), "entangled");
}

#[test]
fn sweep_grid_rows_and_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out = tmp.path().join(sub);
        let o = projnorm(&[
            "sweep",
            "--state",
            "zzzg",
            "--grid",
            "a=0.1:0.9:5",
            "--grid",
            "p=0:1:5",
            "--epochs",
            "100",
            "--restarts",
            "1",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(matches!(o.status.code(), Some(0) | Some(3)));
        fs::read_to_string(out.join("sweep.csv")).unwrap()
    };
    let csv = run("a");
    assert_eq!(csv, run("b"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "param1,param2,norm,rank,recon_error,converged");
    assert_eq!(lines.len(), 26);
    assert!(lines[1].starts_with("0.1,0,"));
    assert!(lines[25].starts_with("0.9,1,"));
}

#[test]
fn sweep_to_stdout() {
    let o = projnorm(&[
        "sweep",
        "--state",
        "ghz",
        "--grid",
        "n=2:3:2",
        "--epochs",
        "100",
        "--restarts",
        "1",
    ]);
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 3);
    assert!(out.lines().nth(2).unwrap().starts_with("3,,"));
}

#[test]
fn oracle_order2_file() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("m.json");
    fs::write(
        &file,
        r#"{"shape":[2,2],"field":"real","re":[0.6,0,0,0.8]}"#,
    )
    .unwrap();
    let o = projnorm(&["oracle", "--file", file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "svd_nuclear_norm=1.400000000000");
}

#[test]
fn oracle_multi_start() {
    let o = projnorm(&[
        "oracle",
        "--state",
        "ghz",
        "--starts",
        "2",
        "--epoch-factor",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let n: f64 = out
        .split_whitespace()
        .find_map(|kv| kv.strip_prefix("norm="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((n - 2f64.sqrt()).abs() < 2e-2);
}

#[test]
fn verify_suites() {
    let o = projnorm(&["verify", "--suite", "gradients", "--seeds", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("passed=16/16"));
    let o = projnorm(&[
        "verify",
        "--suite",
        "order2",
        "--seeds",
        "3",
        "--restarts",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn verify_failure_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("fx.json");
    fs::write(
        &file,
        r#"[{"state":"ghz","field":"real","norm":2.0,"rank":2,"oracle_seed":0,"n_starts":64}]"#,
    )
    .unwrap();
    let o = projnorm(&[
        "verify",
        "--suite",
        "fixtures",
        "--fixtures",
        file.to_str().unwrap(),
        "--restarts",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).starts_with("FAIL"));
}

#[test]
fn export_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let file = export(tmp.path(), &["--state", "dps3", "--param", "alpha=1"]);
    let t = projnorm::Tensor64::from_json(&fs::read_to_string(&file).unwrap()).unwrap();
    assert_eq!(t.shape(), &[3, 3, 3, 3]);
    let o = projnorm(&["export-state", "--state", "dps3", "--param", "alpha=1"]);
    assert_eq!(o.stdout, fs::read(&file).unwrap());
}

#[test]
fn help_lists_flags_with_defaults() {
    let o = projnorm(&["norm", "--help"]);
    let help = stdout(&o);
    for flag in [
        "--state",
        "--param",
        "--file",
        "--field",
        "--symmetric",
        "--restarts",
        "--epochs",
        "--lr",
        "--k1",
        "--k2",
        "--k3",
        "--eps",
        "--tolerance",
        "--seed",
        "--out",
        "--trace",
        "--rank",
    ] {
        assert!(help.contains(flag), "{flag}");
    }
    for default in [
        "[default: 8]",
        "[default: 20000]",
        "[default: 0.01]",
        "[default: 100]",
        "[default: 10]",
    ] {
        assert!(help.contains(default), "{default}");
    }
    assert!(stdout(&projnorm(&["sweep", "--help"])).contains("--grid"));
}
