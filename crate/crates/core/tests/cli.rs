use std::fs;
use std::path::Path;

use rieszgas::cli::{execute, main_with_args, parse_config, Args, ExperimentKind};

fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn args(experiment: ExperimentKind, config: std::path::PathBuf, out: &Path, threads: usize) -> Args {
    Args {
        experiment,
        config,
        seed: None,
        replicas: None,
        out: Some(out.to_path_buf()),
        threads: Some(threads),
    }
}

#[test]
fn schema_examples() {
    let ok = parse_config(
        r#"{"experiment":"stationary","model":{"N":8,"alpha":1,"lambda":1,"sigma_rule":"zero"},"replicas":2}"#,
        None,
    )
    .unwrap();
    assert_eq!(ok.experiment, ExperimentKind::Stationary);
    assert_eq!(ok.params.n, 8);

    let err = parse_config(r#"{"experiment":"moments","model":{"alpha":0.5}}"#, None).unwrap_err();
    assert!(err.to_string().contains("alpha must be ≥ 1"), "{err}");

    let warned = parse_config(
        r#"{"experiment":"simulate","model":{"alpha":1,"sigma_rule":"constant","sigma":0.5}}"#,
        None,
    )
    .unwrap();
    assert!(!warned.warnings.is_empty());

    let err = parse_config(r#"{"experiment":"moments","model":{"N":8,"beta":2}}"#, None).unwrap_err();
    assert!(err.to_string().contains("beta"), "{err}");
    let err = parse_config(r#"{"experiment":"moments","colour":"red"}"#, None).unwrap_err();
    assert!(err.to_string().contains("colour"), "{err}");
}

#[test]
fn report_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "moments.json",
        r#"{"model":{"N":16,"alpha":1.5},"replicas":6,"t_end":0.5,"sample_dt":0.125,"seed":3}"#,
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(main_with_args(args(ExperimentKind::Moments, config.clone(), &a, 1)), 0);
    assert_eq!(main_with_args(args(ExperimentKind::Moments, config, &b, 3)), 0);
    let ra = fs::read(a.join("report.json")).unwrap();
    let rb = fs::read(b.join("report.json")).unwrap();
    assert_eq!(ra, rb);
    assert_eq!(ra.last(), Some(&b'\n'));
    let csv = fs::read_to_string(a.join("Hcal.csv")).unwrap();
    assert!(csv.starts_with("t,value,stderr,bound\n"));
    assert!(csv.ends_with('\n'));
    assert_eq!(csv.lines().count(), 1 + 5);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "completed");
    assert_eq!(manifest["all_pass"], true);
    assert!(manifest["wall_time_seconds"].is_number());
}

#[test]
fn exit_status_tracks_pass_flags() {
    let dir = tempfile::tempdir().unwrap();
    let same = write_config(
        dir.path(),
        "same.json",
        r#"{"model":{"N":8},"replicas":2,"t_end":0.5,"initial_alt":{"kind":"grid","a":-0.5,"b":0.5}}"#,
    );
    let out = dir.path().join("same");
    assert_eq!(main_with_args(args(ExperimentKind::Contraction, same, &out, 1)), 0);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report["observed"]["D"]["value"].as_array().unwrap().iter().all(|v| v.as_f64() == Some(0.0)));

    let strict = write_config(
        dir.path(),
        "strict.json",
        r#"{"model":{"N":8},"replicas":4,"sizes":[4,8],"t_end":0.25,"sample_dt":0.125,"tolerances":{"tol_pde":1e-12}}"#,
    );
    let out = dir.path().join("strict");
    assert_eq!(main_with_args(args(ExperimentKind::PdeResidual, strict, &out, 1)), 1);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"]["residual_small_tanh"], false);
}

#[test]
fn failures_exit_two_and_leave_a_marked_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.json", r#"{"model":{"alpha":1.5},"replicas":1}"#);
    let out = dir.path().join("bad");
    assert_eq!(main_with_args(args(ExperimentKind::Cauchy, bad, &out, 1)), 2);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "failed");
    assert!(manifest["error"].as_str().unwrap().contains("alpha"));

    let unknown = write_config(dir.path(), "unknown.json", r#"{"replica":3}"#);
    assert_eq!(main_with_args(args(ExperimentKind::Moments, unknown, &dir.path().join("u"), 1)), 2);
    assert!(!dir.path().join("u").exists());
}

#[test]
fn execute_honours_overrides_in_the_echo() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        r#"{{"experiment":"simulate","model":{{"N":4}},"replicas":1,"t_end":0.25,"seed":42,"output_dir":{:?}}}"#,
        dir.path().join("sim")
    );
    let v = parse_config(&text, None).unwrap();
    let outcome = execute(&v).unwrap();
    assert_eq!(outcome.exit_code(), 0);
    assert_eq!(outcome.report.seed, 42);
    assert!(outcome.files.iter().any(|f| f == "positions.csv"));
    assert_eq!(outcome.report.params_echo["config"]["model"]["N"], 4);
    assert!(outcome.report.params_echo["config"].get("output_dir").is_none());
}
