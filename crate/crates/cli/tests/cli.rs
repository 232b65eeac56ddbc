use std::fs;
use std::process::Command;

fn flatlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_flatlab"))
}

fn strip_timing(text: &str) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(text).unwrap();
    for c in v["checks"].as_array_mut().unwrap() {
        c["wall_time_ms"] = serde_json::Value::from(0.0);
    }
    v
}

#[test]
fn list_presets_names_all_presets() {
    let out = flatlab().arg("list-presets").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["hopf", "su2xsu2-diag-circle", "su3-circle-(1,1,-2)", "su3-circle-(1,1,-2)-eschenburg"] {
        assert!(text.contains(name), "{name}");
    }
    assert!(text.contains("fibers totally geodesic"));
}

#[test]
fn list_presets_json_parses() {
    let out = flatlab().args(["list-presets", "--json"]).output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 4);
}

#[test]
fn report_schema_is_json() {
    let out = flatlab().arg("report-schema").output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["title"], "flatlab scenario report");
}

#[test]
fn hopf_holonomy_run_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = flatlab()
        .args(["run", "--preset", "hopf", "--check", "holonomy", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(dir.path().join("report.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(v["passed"], true);
    assert!(v["checks"][0]["measured"]["max_relative_t_term"].as_f64().unwrap() < 1e-12);
}

#[test]
fn config_file_run_with_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scenario.toml");
    fs::write(
        &cfg,
        "schema_version = 1\npreset = \"su2xsu2-diag-circle\"\nchecks = [\"flats\", \"example-e\"]\nseed = 3\n\n[output]\ncsv = true\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = flatlab()
        .args(["run", "--quiet", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let csv = fs::read_to_string(out_dir.join("example-e.csv")).unwrap();
    assert!(csv.starts_with("t,value,residual"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "schema_version = 1\npreset = \"hopf\"\nunknown_key = 1\n").unwrap();
    let out = flatlab().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = flatlab().args(["run", "--preset", "no-such"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = flatlab().args(["run", "--preset", "hopf", "--check", "nonsense"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = flatlab().args(["run", "--preset", "hopf", "--t-max", "-3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failing_check_exits_1_and_writes_report() {
    // su(2) with no action: horizontal space is all of su(2), which has no
    // commuting orthonormal pair, and dim 3 gives no certificate
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("su2.toml");
    fs::write(
        &cfg,
        "schema_version = 1\nchecks = [\"flats\"]\n\n[params]\nrestarts = 2\n\n[custom]\nname = \"su2-trivial\"\ngroup = \"su(2)\"\ngenerators = []\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = flatlab()
        .args(["run", "--quiet", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(v["passed"], false);
    assert_eq!(v["checks"][0]["measured"]["found"], false);
}

#[test]
fn runs_are_reproducible() {
    let run = || {
        let out = flatlab()
            .args(["run", "--preset", "su3-circle-(1,1,-2)", "--check", "holonomy", "--check", "flats", "--seed", "9"])
            .output()
            .unwrap();
        assert!(out.status.success());
        strip_timing(&String::from_utf8(out.stdout).unwrap())
    };
    assert_eq!(run(), run());
}
