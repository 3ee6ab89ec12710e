use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const MINIMAL: &str = r#"
name = "minimal"
seed = 5
n_cycles = 200

[trap]
ion_count = 130
omega_z_hz = 867e3
temperature_k = 0.5e-3

[drive]
force_per_ion_n = 2.88e-23
t_d_s = 1e-3
"#;

fn ionforce(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ionforce"))
        .args(args)
        .output()
        .unwrap()
}

fn write_spec(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run_ok(cmd: &str, spec: &Path, out: &Path, extra: &[&str]) {
    let mut args = vec![
        cmd,
        "--spec",
        spec.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let o = ionforce(&args);
    assert!(
        o.status.success(),
        "{cmd} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn invalid_spec_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("unknown_key.toml", format!("{MINIMAL}\nbogus = 1\n")),
        ("not_toml.toml", "seed = [".to_string()),
        (
            "negative_mass.toml",
            MINIMAL.replace("ion_count = 130", "ion_count = 130\nion_mass_kg = -1.0"),
        ),
        (
            "far_detuned.toml",
            MINIMAL.replace("t_d_s = 1e-3", "t_d_s = 1e-3\ndetuning_hz = 200e3"),
        ),
    ];
    for (name, text) in cases {
        let spec = write_spec(tmp.path(), name, &text);
        let o = ionforce(&[
            "simulate",
            "--spec",
            spec.to_str().unwrap(),
            "--out-dir",
            tmp.path().join("o").to_str().unwrap(),
        ]);
        assert_eq!(
            o.status.code(),
            Some(2),
            "{name}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let o = ionforce(&["simulate", "--spec", tmp.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), "s.toml", MINIMAL);
    let blocker = write_spec(tmp.path(), "file", "");
    let o = ionforce(&[
        "simulate",
        "--spec",
        spec.to_str().unwrap(),
        "--out-dir",
        blocker.join("sub").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn zero_rate_gives_empty_events_and_a_valid_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(
        tmp.path(),
        "dark.toml",
        &format!("{MINIMAL}\n[detection]\nbase_rate_per_s = 0.0\n"),
    );
    let out = tmp.path().join("out");
    run_ok("simulate", &spec, &out, &[]);
    let events = std::fs::read_to_string(out.join("events.csv")).unwrap();
    assert_eq!(events.lines().count(), 1, "header only");
    let m = manifest(&out);
    assert_eq!(m["command"], "simulate");
    assert_eq!(m["seed"], 5);
    for f in m["outputs"].as_array().unwrap() {
        let path = out.join(f["path"].as_str().unwrap());
        assert_eq!(std::fs::metadata(&path).unwrap().len(), f["bytes"].as_u64().unwrap());
    }
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("{MINIMAL}\n[sweep]\nhalf_span_hz = 2e3\npoints = 5\n");
    let spec = write_spec(tmp.path(), "s.toml", &text);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    run_ok("sweep-frequency", &spec, &a, &["--workers", "1"]);
    run_ok("sweep-frequency", &spec, &b, &["--workers", "3"]);
    let (ma, mb) = (manifest(&a), manifest(&b));
    assert_eq!(ma["outputs"], mb["outputs"]);
    assert_eq!(ma["workers"], 1);
    assert_eq!(mb["workers"], 3);
}

#[test]
fn seed_override_changes_events() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), "s.toml", MINIMAL);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    run_ok("simulate", &spec, &a, &[]);
    run_ok("simulate", &spec, &b, &["--seed", "6"]);
    let read = |d: &Path| std::fs::read(d.join("events.csv")).unwrap();
    assert_ne!(read(&a), read(&b));
    assert_eq!(manifest(&b)["seed"], 6);
}

#[test]
fn calibrate_reports_force_per_ion() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(
        tmp.path(),
        "cal.toml",
        "[trap]\nion_count = 130\ntemperature_k = 0.5e-3\n\n[calibration]\nfield_v_per_m = 1.8e-3\n",
    );
    let out = tmp.path().join("out");
    run_ok("calibrate", &spec, &out, &["--format", "json"]);
    let t: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("calibration.json")).unwrap()).unwrap();
    let cols: Vec<&str> = t["columns"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_str().unwrap())
        .collect();
    let row = &t["rows"][0];
    let yn = row[cols.iter().position(|&c| c == "force_per_ion_yn").unwrap()]
        .as_f64()
        .unwrap();
    assert!((yn - 288.4).abs() < 0.1, "{yn}");
}

#[test]
fn json_format_replaces_csv_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(
        tmp.path(),
        "s.toml",
        &format!("{MINIMAL}\n[force_ladder]\nscales = [1.0, 0.5]\n"),
    );
    let out = tmp.path().join("out");
    run_ok("sweep-force", &spec, &out, &["--format", "json"]);
    let names: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert!(names.iter().all(|n| !n.ends_with(".csv")), "{names:?}");
    let reports: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("reports.json")).unwrap()).unwrap();
    assert_eq!(reports["points"].as_array().unwrap().len(), 2);
    assert_eq!(reports["schema_version"], 1);
}

#[test]
fn spec_copy_is_canonical_and_reloadable() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), "s.toml", MINIMAL);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    run_ok("simulate", &spec, &a, &[]);
    run_ok("simulate", &a.join("spec.toml"), &b, &[]);
    assert_eq!(
        std::fs::read(a.join("spec.toml")).unwrap(),
        std::fs::read(b.join("spec.toml")).unwrap()
    );
    assert_eq!(
        std::fs::read(a.join("events.csv")).unwrap(),
        std::fs::read(b.join("events.csv")).unwrap()
    );
}
