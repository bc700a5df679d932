use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn uavbs(args: &[&str], envs: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_uavbs"));
    cmd.args(args).env_remove("UAVBS_OUT_DIR").env("RUST_LOG", "warn");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn short_config(dir: &Path) -> String {
    let path = dir.join("short.toml");
    fs::write(&path, "horizon_s = 60.0\nrecluster_period_s = 30.0\nk_max = 8\n").unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn plan_writes_deployment_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("plan");
    let o = uavbs(&["plan", "--scenario", "small-60", "--out", out.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "assignment.csv",
        "link_trace.csv",
        "deployment.csv",
        "deployment.json",
        "sweep.json",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let assignment = fs::read_to_string(out.join("assignment.csv")).unwrap();
    assert!(assignment.starts_with("node_id,x_m,y_m,label\n"));
    assert_eq!(assignment.lines().count(), 61);
    let doc: serde_json::Value = serde_json::from_slice(&fs::read(out.join("deployment.json")).unwrap()).unwrap();
    let k = doc["summary"]["k"].as_u64().unwrap() as usize;
    let trace = fs::read_to_string(out.join("link_trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1 + 60 * k);
}

#[test]
fn out_dir_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("from-env");
    let o = uavbs(&["elbow", "--scenario", "small-40"], &[("UAVBS_OUT_DIR", &out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("elbow.csv")).unwrap();
    assert!(text.starts_with("scenario_id,k,wcss\n"));
}

#[test]
fn run_and_compare_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path());
    let out = dir.path().join("run");
    let o = uavbs(
        &[
            "run",
            "--config",
            &cfg,
            "--seed",
            "7",
            "--reps",
            "2",
            "--scenario",
            "small-40",
            "--scenario",
            "medium-40",
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["master_seed"], 7);
    assert_eq!(manifest["scenarios"], serde_json::json!(["small-40", "medium-40"]));
    let reps = fs::read_to_string(out.join("replications.csv")).unwrap();
    assert_eq!(reps.lines().count(), 1 + 2 * 2);

    let o = uavbs(
        &[
            "compare",
            "--config",
            &cfg,
            "--reps",
            "2",
            "--scenario",
            "small-40",
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert!(o.status.success());
    let cmp = fs::read_to_string(out.join("compare.csv")).unwrap();
    assert!(cmp.starts_with("scenario_id,replication,kmeans_k,kmeans_served,crp_k,crp_served,efficiency_ratio\n"));
}

#[test]
fn errors_exit_nonzero_with_a_structured_message() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "coverage_target = 1.5\n").unwrap();
    let o = uavbs(
        &[
            "plan",
            "--config",
            bad.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ],
        &[],
    );
    assert!(!o.status.success());
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&o.stderr).lines().last().unwrap()).unwrap();
    assert_eq!(err["error"]["kind"], "validation");
    assert!(err["error"]["message"].as_str().unwrap().contains("coverage_target"));

    let o = uavbs(
        &["plan", "--scenario", "tiny-10", "--out", dir.path().to_str().unwrap()],
        &[],
    );
    assert!(!o.status.success());

    let o = uavbs(
        &["plan", "--config", dir.path().join("missing.toml").to_str().unwrap()],
        &[],
    );
    assert!(!o.status.success());
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&o.stderr).lines().last().unwrap()).unwrap();
    assert_eq!(err["error"]["kind"], "io");

    let o = uavbs(&["frobnicate"], &[]);
    assert!(!o.status.success());
}
