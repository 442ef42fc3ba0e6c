//! End-to-end tests of the `tskf` binary: exit codes and artifacts.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tskf(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tskf"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn unknown_config_key_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    let (text, _) = {
        let o = Command::new(env!("CARGO_BIN_EXE_tskf"))
            .args(["scenarios", "ref-t2"])
            .output()
            .unwrap();
        assert!(o.status.success());
        (String::from_utf8(o.stdout).unwrap(), ())
    };
    fs::write(&cfg, format!("{text}\n[extra]\nfoo = 1\n")).unwrap();
    let o = tskf(&["run", cfg.to_str().unwrap()], &tmp.path().join("o"));
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));

    let o = tskf(&["run", "no-such-scenario"], &tmp.path().join("o"));
    assert_eq!(code(&o), 2);

    let o = tskf(&["run", "ref-t2", "--override", "sampling.hh=1"], &tmp.path().join("o"));
    assert_eq!(code(&o), 2);
}

#[test]
fn builtin_scenario_round_trips_through_file() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_tskf"))
        .args(["scenarios", "owc-td"])
        .output()
        .unwrap();
    let cfg = tmp.path().join("owc.toml");
    fs::write(&cfg, &o.stdout).unwrap();
    let a = tskf(&["run", cfg.to_str().unwrap(), "--seed", "3"], &tmp.path().join("a"));
    let b = tskf(&["run", "owc-td", "--seed", "3"], &tmp.path().join("b"));
    assert!(a.status.success() && b.status.success());
    assert_eq!(
        fs::read(tmp.path().join("a/trace.csv")).unwrap(),
        fs::read(tmp.path().join("b/trace.csv")).unwrap()
    );
}

#[test]
fn oracle_check_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tskf(&["oracle-check", "ref-t2"], &tmp.path().join("ok"));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(tmp.path().join("ok/oracle_report.json").exists());

    let o = tskf(&["oracle-check", "ref-t2", "--ode-tol", "1e-12"], &tmp.path().join("bad"));
    assert_eq!(code(&o), 4);
    assert!(!o.stderr.is_empty());
}

#[test]
fn overflowing_filter_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tskf(
        &[
            "run",
            "owc-td",
            "--override",
            "sampling.truth_boundary={mode=\"free\"}",
            "--override",
            "model.a=1e6",
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn same_seed_replicates_are_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tskf(
        &["mc", "ref-t2", "-n", "2", "--same-seed", "--keep-traces"],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let a = fs::read(tmp.path().join("replicate_0000.csv")).unwrap();
    let b = fs::read(tmp.path().join("replicate_0001.csv")).unwrap();
    assert_eq!(a, b);
    assert!(tmp.path().join("aggregate.csv").exists());
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seeds"], serde_json::json!([1, 1]));
}

#[test]
fn mc_requires_two_replicates() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tskf(&["mc", "ref-t2", "-n", "1"], tmp.path());
    assert_ne!(code(&o), 0);
}

#[test]
fn step_size_is_irrelevant_on_purely_discrete_scale() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tskf(&["run", "ref-t1", "--override", "sampling.h=0.5"], &tmp.path().join("a"));
    let b = tskf(&["run", "ref-t1", "--override", "sampling.h=0.25"], &tmp.path().join("b"));
    assert!(a.status.success() && b.status.success());
    assert_eq!(
        fs::read(tmp.path().join("a/trace.csv")).unwrap(),
        fs::read(tmp.path().join("b/trace.csv")).unwrap()
    );
}

#[test]
fn plot_subcommand_renders_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    assert!(tskf(&["run", "ref-t4"], &run).status.success());
    let trace = run.join("trace.csv");
    let plots = tmp.path().join("plots");
    for (mode, format) in [("timescale", "svg"), ("iteration", "svg"), ("timescale", "data")] {
        let o = tskf(
            &["plot", trace.to_str().unwrap(), "--mode", mode, "--format", format],
            &plots,
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let names: Vec<String> = fs::read_dir(&plots)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(names.iter().any(|n| n.ends_with("_timescale.svg")));
    assert!(names.iter().any(|n| n.ends_with("_iteration.svg")));
    assert!(names.iter().any(|n| n.ends_with(".csv")));
}

#[test]
fn extract_ts_prints_spec() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("valid.csv");
    let mut text = String::from("t,valid\n");
    for t in 0..12 {
        let valid = matches!(t, 0..=4 | 7 | 9..=11);
        text.push_str(&format!("{t},{}\n", u8::from(valid)));
    }
    fs::write(&csv, text).unwrap();
    let spec_file = tmp.path().join("spec.txt");
    let o = Command::new(env!("CARGO_BIN_EXE_tskf"))
        .args(["extract-ts", csv.to_str().unwrap(), "--out", spec_file.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let spec = String::from_utf8(o.stdout).unwrap();
    let spec = spec.trim();
    assert!(!spec.is_empty());
    assert_eq!(fs::read_to_string(&spec_file).unwrap().trim(), spec);
    let parsed: tskf::timescale::ScaleSpec = spec.parse().unwrap();
    let ts = parsed.build().unwrap();
    assert_eq!(ts.min_time(), 0.0);
    assert_eq!(ts.max_time(), 11.0);
    assert!(ts.contains(7.0));
    assert!(!ts.contains(5.5));
}

#[test]
fn sweep_on_stable_model_reports_no_sign_change() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tskf(&["sweep", "ref-t2", "1.0", "5.0"], tmp.path());
    assert_eq!(code(&o), 1);
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("bound.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "no_sign_change");
    assert!(tmp.path().join("bound.csv").exists());
}
