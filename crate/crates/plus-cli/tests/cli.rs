//! End-to-end tests of the `plus` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn plus(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plus"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .env_remove("PLUS_SIM_THREADS")
        .output()
        .expect("run plus")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn reference_config() -> String {
    configs().join("reference.json").display().to_string()
}

fn manifest(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Writes `value` as a config file and returns its path.
fn write_config(dir: &Path, name: &str, value: &Value) -> String {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(value).unwrap()).unwrap();
    p.display().to_string()
}

fn small_sweep_config() -> Value {
    serde_json::json!({
        "seed": 3,
        "sweep": {
            "grid": {
                "wingspans": [1.0, 1.8],
                "chords": [0.254],
                "pylon_spans": [40.0, 100.0],
                "sag_fractions": [0.02, 0.04],
                "trials_per_cell": 3
            }
        }
    })
}

#[test]
fn reference_simulate_succeeds_and_reports_fraction() {
    let tmp = tempfile::tempdir().unwrap();
    let o = plus(tmp.path(), &["--config", &reference_config(), "simulate"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("metrics.json")).unwrap()).unwrap();
    let f = m["tracking"]["fraction_under_1m"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&f));
    assert!(m["comparison"]["Ok"]["fraction_under_1m"].is_number());
    let man = manifest(tmp.path());
    assert_eq!(man["status"], "ok");
    let outputs: Vec<&str> = man["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    for f in ["schedule.csv", "trajectory.csv", "metrics.json", "manifest.json"] {
        assert!(outputs.contains(&f), "{f} missing from {outputs:?}");
    }
    let mut on_disk: Vec<String> =
        std::fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    on_disk.sort();
    let mut listed: Vec<String> = outputs.iter().map(|s| s.to_string()).collect();
    listed.sort();
    assert_eq!(on_disk, listed);
}

#[test]
fn missing_config_exits_2_with_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let o = plus(tmp.path(), &["--config", "/no/such/config.json", "simulate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cannot read config"));
    let man = manifest(tmp.path());
    assert_eq!(man["exit_code"], 2);
    assert!(man["config"].is_null());
}

#[test]
fn non_positive_dt_exits_2_naming_the_field_and_line() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "{\n  \"simulation\": {\n    \"dt\": 0.0\n  }\n}\n";
    let p = tmp.path().join("bad.json");
    std::fs::write(&p, text).unwrap();
    let o = plus(&tmp.path().join("out"), &["--config", p.to_str().unwrap(), "simulate"]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("simulation.dt") && e.contains("bad.json:3"), "{e}");
}

#[test]
fn unknown_and_malformed_fields_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write_config(tmp.path(), "u.json", &serde_json::json!({"simulation": {"dtt": 1.0}}));
    let o = plus(&tmp.path().join("o1"), &["--config", &p, "simulate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown field `dtt`"));
    let p = tmp.path().join("m.json");
    std::fs::write(&p, "{\n  \"seed\": ,\n}").unwrap();
    let o = plus(&tmp.path().join("o2"), &["--config", p.to_str().unwrap(), "simulate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("m.json:2:"), "{}", stderr(&o));
}

#[test]
fn divergence_exits_3_and_keeps_partial_trajectory() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write_config(tmp.path(), "d.json", &serde_json::json!({"simulation": {"divergence_bound": 0.5}}));
    let out = tmp.path().join("out");
    let o = plus(&out, &["--config", &p, "simulate"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("diverged"));
    let man = manifest(&out);
    assert_eq!(man["status"], "failed");
    assert!(man["outputs"].as_array().unwrap().iter().any(|v| v == "trajectory.csv"));
    assert!(out.join("trajectory.csv").exists());
}

#[test]
fn zero_jobs_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = plus(tmp.path(), &["--jobs", "0", "sweep"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_resume_matches_uninterrupted_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.json", &small_sweep_config());
    let full = tmp.path().join("full");
    let o = plus(&full, &["--config", &cfg, "--jobs", "2", "sweep"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let part = tmp.path().join("part");
    let o = plus(&part, &["--config", &cfg, "--jobs", "1", "sweep", "--stop-after-cells", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!part.join("sweep.csv").exists());
    // simulate an interrupted append
    let mut partial = std::fs::read_to_string(part.join("sweep.partial.jsonl")).unwrap();
    partial.push_str("[{\"cell\": 3, \"ke");
    std::fs::write(part.join("sweep.partial.jsonl"), partial).unwrap();
    let o = plus(&part, &["--config", &cfg, "--jobs", "3", "sweep", "--resume"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    for f in ["sweep.csv", "trends.csv", "sweep_failures.csv"] {
        assert_eq!(std::fs::read(full.join(f)).unwrap(), std::fs::read(part.join(f)).unwrap(), "{f}");
    }
    let rows = std::fs::read_to_string(full.join("sweep.csv")).unwrap().lines().count() - 1;
    assert_eq!(rows, 2 * 2 * 2 * 3);
}

#[test]
fn resume_refuses_a_different_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.json", &small_sweep_config());
    let out = tmp.path().join("out");
    let o = plus(&out, &["--config", &cfg, "sweep", "--stop-after-cells", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let o = plus(&out, &["--config", &cfg, "--seed", "99", "sweep", "--resume"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("different sweep configuration"));
}

#[test]
fn seed_changes_sweep_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.json", &small_sweep_config());
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(plus(&a, &["--config", &cfg, "sweep"]).status.code(), Some(0));
    assert_eq!(plus(&b, &["--config", &cfg, "--seed", "4", "sweep"]).status.code(), Some(0));
    assert_ne!(std::fs::read(a.join("sweep.csv")).unwrap(), std::fs::read(b.join("sweep.csv")).unwrap());
    assert_eq!(manifest(&b)["seed"], 4);
}

#[test]
fn wavelength_map_has_one_row_per_grid_point() {
    let tmp = tempfile::tempdir().unwrap();
    let o = plus(tmp.path(), &["wavelength-map"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(tmp.path().join("wavelength_map.csv")).unwrap();
    assert_eq!(text.lines().count() - 1, 3 * 3 * 3);
}

#[test]
fn sysid_generate_then_fit_recorded_file() {
    let tmp = tempfile::tempdir().unwrap();
    let gen = tmp.path().join("gen");
    let o = plus(&gen, &["sysid"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let record = gen.join("record.csv");
    let fit = tmp.path().join("fit");
    let o = plus(&fit, &["sysid", "--record", record.to_str().unwrap(), "--structure", "second-order-delay"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let fits: Value = serde_json::from_str(&std::fs::read_to_string(fit.join("sysid_fits.json")).unwrap()).unwrap();
    let f = &fits[0];
    assert_eq!(f["structure"], "second_order_delay");
    assert!(f["accuracy"].as_f64().unwrap() > 99.0);
    assert!((f["parameters"]["delay"].as_f64().unwrap() - 0.05).abs() <= 1.0 / 120.0);
}

#[test]
fn sysid_rejects_a_constant_record() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("flat.csv");
    let mut text = String::from("t,command,output\n");
    for k in 0..240 {
        text.push_str(&format!("{},1,0.5\n", k as f64 / 120.0));
    }
    std::fs::write(&p, text).unwrap();
    let o = plus(&tmp.path().join("out"), &["sysid", "--record", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn env_catenary_prints_parameter_sag_and_frequency() {
    let tmp = tempfile::tempdir().unwrap();
    let o = plus(tmp.path(), &["env", "catenary", "--span", "70", "--sag", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let value = |key: &str| -> f64 {
        let line = text.lines().find(|l| l.starts_with(key)).unwrap();
        line.split('=').nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap()
    };
    let a = value("a =");
    // sag equation a·(cosh(L/2a) − 1) = 0.02·L
    assert!((a * ((35.0 / a).cosh() - 1.0) - 1.4).abs() < 1e-3, "{a}");
    assert!((value("sag depth") - 1.4).abs() < 1e-4);
    // x / y at midspan, y = a·cosh(0) = a
    assert!((value("midspan spatial frequency") - 35.0 / a).abs() < 1e-5);
    let csv = std::fs::read_to_string(tmp.path().join("catenary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 142);
}

#[test]
fn env_classes_and_field() {
    let tmp = tempfile::tempdir().unwrap();
    let o = plus(tmp.path(), &["env", "classes"]);
    assert_eq!(o.status.code(), Some(0));
    let table = std::fs::read_to_string(tmp.path().join("powerline_classes.csv")).unwrap();
    assert_eq!(table.lines().count(), 6);
    let o = plus(tmp.path(), &["env", "field", "--current", "628", "--distance", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8(o.stdout).unwrap().contains("125.6"));
    let o = plus(tmp.path(), &["env", "field", "--current", "628", "--distance", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn plant_sources_load() {
    let tmp = tempfile::tempdir().unwrap();
    let plant = configs().join("trim_plant.json");
    for (name, plant) in [
        ("file", serde_json::json!({"source": "file", "path": plant})),
        ("synthetic", serde_json::json!({"source": "synthetic"})),
    ] {
        let cfg = write_config(tmp.path(), &format!("{name}.json"), &serde_json::json!({"plant": plant}));
        let o = plus(&tmp.path().join(name), &["--config", &cfg, "simulate"]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
    }
}
