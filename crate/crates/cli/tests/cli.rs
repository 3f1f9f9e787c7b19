use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn dilab() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_dilab"));
    for (k, _) in std::env::vars() {
        if k.starts_with("DILAB_") {
            c.env_remove(k);
        }
    }
    c
}

fn spec(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs").join(name)
}

fn run(c: &mut Command) -> (i32, Output) {
    let out = c.output().expect("dilab runs");
    (out.status.code().expect("exit code"), out)
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json report on stdout")
}

#[test]
fn counterexample_spec_fails_at_full_subset() {
    let (code, out) = run(dilab().args(["analyze", "--spec"]).arg(spec("counterexample_d2.json")));
    assert_eq!(code, 1);
    let r = json_of(&out);
    for col in ["complete_dissipativity", "pk_scan", "approximants", "polynomial_bounds", "gram"] {
        assert_eq!(r["verdicts"][col], "fail", "{col}");
        assert!(r["witnesses"].get(col).is_some(), "{col}");
    }
    assert_eq!(r["witnesses"]["complete_dissipativity"]["subset"], serde_json::json!([1, 2]));
    assert_eq!(r["subset_monotonicity"], true);
    assert_eq!(r["agreement"]["consistent"], true);
}

#[test]
fn passing_specs_exit_zero() {
    for name in ["tensor_d2.json", "explicit_d1.json"] {
        let (code, out) = run(dilab().args(["analyze", "--spec"]).arg(spec(name)));
        assert_eq!(code, 0, "{name}: {}", String::from_utf8_lossy(&out.stderr));
        let r = json_of(&out);
        for key in ["spec_digest", "verdicts", "witnesses", "timings", "seeds", "tool_version"] {
            assert!(r.get(key).is_some(), "{key}");
        }
    }
}

#[test]
fn reports_are_deterministic_apart_from_timings() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for (i, threads) in ["1", "2"].iter().enumerate() {
        let out = dir.path().join(format!("r{i}.json"));
        let (code, _) = run(dilab().args(["analyze", "--threads", threads, "--spec"]).arg(spec("tensor_d2.json")).arg("--out").arg(&out));
        assert_eq!(code, 0);
        let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("timings");
        texts.push(serde_json::to_string_pretty(&v).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn csv_tables_have_headers_and_lf_endings() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run(dilab().args(["analyze", "--spec"]).arg(spec("tensor_d2.json")).arg("--csv").arg(dir.path()));
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(dir.path().join("verdicts.csv")).unwrap();
    assert!(text.starts_with("name,d,dim,complete_dissipativity,"));
    assert!(!text.contains('\r') && text.ends_with('\n'));
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn stochastic_aux_poisson() {
    let (code, out) = run(dilab().args(["stochastic", "--law", "aux-poisson", "--lambda", "5", "--t", "2", "--n", "1000000", "--seed", "42"]));
    assert_eq!(code, 0);
    let r = json_of(&out);
    assert_eq!(r["moments"]["exact_mean"], 2.0);
    assert_eq!(r["moments"]["exact_variance"], 0.8);
    assert_eq!(r["characteristic_function"].as_array().unwrap().len(), 6);
}

#[test]
fn monoid_commands() {
    let (code, out) = run(dilab().args(["monoid", "--variant", "heisenberg-c", "--samples", "1000"]));
    assert_eq!(code, 0);
    assert_eq!(json_of(&out)["axioms"]["all_pass"], true);
    let (code, out) = run(dilab().arg("monoid").arg("--spec").arg(spec("ccr_m2.json")));
    assert_eq!(code, 0);
    assert!(json_of(&out)["relation_residual"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn counterexample_command_confirms_sharpness() {
    let dir = tempfile::tempdir().unwrap();
    let emitted = dir.path().join("cx.json");
    let (code, out) = run(dilab().args(["counterexample", "--d", "3", "--alpha", "0.65", "--emit-spec"]).arg(&emitted));
    assert_eq!(code, 0);
    let r = json_of(&out);
    assert_eq!(r["counterexample"]["sharp"], true);
    assert_eq!(r["verdicts"]["complete_dissipativity"], "fail");
    assert!(emitted.exists());
    // Outside the admissible interval.
    let (code, _) = run(dilab().args(["counterexample", "--d", "2", "--alpha", "0.5"]));
    assert_eq!(code, 2);
}

#[test]
fn approximants_command() {
    let (code, out) = run(dilab().args(["approximants", "--mc-n", "20000", "--spec"]).arg(spec("tensor_d2.json")));
    assert_eq!(code, 0);
    let r = json_of(&out);
    assert_eq!(r["expectation_identities"].as_array().unwrap().len(), 2 * 2 * 3 * 2);
}

#[test]
fn validation_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"schema_version\": 1,\n  \"family\": {\"source\": \"nope\"}\n}\n").unwrap();
    let (code, out) = run(dilab().args(["analyze", "--spec"]).arg(&bad));
    assert_eq!(code, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    let (code, _) = run(dilab().args(["analyze", "--spec", "/nonexistent/spec.json"]));
    assert_eq!(code, 2);
    let (code, _) = run(dilab().args(["analyze"]));
    assert_eq!(code, 2);
    let (code, _) = run(dilab().args(["analyze", "--tol-psd", "-1", "--spec"]).arg(spec("tensor_d2.json")));
    assert_eq!(code, 2);
    let (code, _) = run(dilab().arg("frobnicate"));
    assert_eq!(code, 2);
}

#[test]
fn environment_overrides() {
    let (code, out) = run(dilab().env("DILAB_SEED", "77").env("DILAB_GRID_MAX", "4").args(["analyze", "--spec"]).arg(spec("tensor_d2.json")));
    assert_eq!(code, 0);
    let r = json_of(&out);
    assert_eq!(r["seeds"]["monte_carlo"], 77);
    // Axis {0} ∪ {2^-10, …, 4}: 14 values, 196 grid points.
    assert_eq!(r["details"]["pk_points"], 196);
    // Flags win over the environment.
    let (_, out) = run(dilab().env("DILAB_SEED", "77").args(["analyze", "--seed", "5", "--spec"]).arg(spec("tensor_d2.json")));
    assert_eq!(json_of(&out)["seeds"]["monte_carlo"], 5);
}
