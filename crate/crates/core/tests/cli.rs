use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn numrange(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_numrange")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn sample_writes_grid_squared_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = numrange(&["sample", "--demo", "oloid", "--grid", "200", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("oloid_pi.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# kind=pi"));
    assert!(lines.next().unwrap().starts_with("x,y,z,"));
    assert_eq!(lines.count(), 40000);
}

#[test]
fn symmetric_instances_also_write_plus_and_real_ranges() {
    let dir = tempfile::tempdir().unwrap();
    let out = numrange(&["sample", "--demo", "cone", "--grid", "20", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    for f in ["cone_pi.csv", "cone_pi_plus.csv", "cone_lambda_r.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn hull_of_saved_cloud_matches_in_process_hull() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(code(&numrange(&["sample", "--demo", "eg2", "--grid", "40", "--out", d])), 0);
    assert_eq!(code(&numrange(&["hull", "--demo", "eg2", "--grid", "40", "--out", d])), 0);
    let cloud = dir.path().join("eg2_pi.csv");
    let sub = dir.path().join("from_csv");
    assert_eq!(code(&numrange(&["hull", "--cloud", cloud.to_str().unwrap(), "--out", sub.to_str().unwrap()])), 0);
    let direct = json(&dir.path().join("eg2_pi_hull.json"));
    let reloaded = json(&sub.join("eg2_pi_hull.json"));
    assert_eq!(direct["result"], reloaded["result"]);
    assert_eq!(fs::read(dir.path().join("eg2_pi_hull.obj")).unwrap(), fs::read(sub.join("eg2_pi_hull.obj")).unwrap());
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let report = dir.path().join("eg1_classify.json");
    let mut runs = Vec::new();
    for _ in 0..2 {
        let out = numrange(&["classify", "--demo", "eg1", "--grid", "60", "--dirs", "400", "--out", d]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        runs.push(fs::read(&report).unwrap());
        fs::remove_file(&report).unwrap();
    }
    assert!(runs[0] == runs[1], "reports differ");
    let ra = &runs[0];
    let v: Value = serde_json::from_slice(ra).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["instance"]["hash"].as_str().unwrap().len(), 64);
    assert_eq!(v["config"]["sampler"]["n_grid_a"], 60);
    assert!(v["version"].is_string());
    assert_eq!(v["result"]["summary"]["segments"]["unclassified"], 0);
}

#[test]
fn report_checks_the_cone_identity() {
    let dir = tempfile::tempdir().unwrap();
    let out = numrange(&["report", "--demo", "cone", "--grid", "40", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let v = json(&dir.path().join("cone_report.json"));
    assert_eq!(v["result"]["checks"]["cone_identity_holds"], true);
    assert_eq!(v["result"]["swap_symmetric"], true);
    assert_eq!(v["result"]["homogeneous"], true);
    assert_eq!(v["result"]["cloud"]["kind"], "pi_plus");
}

#[test]
fn phase_accepts_an_explicit_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("path.csv");
    fs::write(&path, "x,y,z\n0,0,1\n0,1,1\n0,1,0\n").unwrap();
    let out = numrange(&[
        "phase", "--demo", "eg1", "--grid", "40", "--dirs", "200", "--path", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&dir.path().join("eg1_phase.json"));
    assert_eq!(v["result"]["closed"], false);
    assert_eq!(v["result"]["scan"]["samples"].as_array().unwrap().len(), 3);
}

#[test]
fn file_instances_round_trip_through_the_pauli_form() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("mine.json");
    fs::write(&inst, r#"{"name": "mine", "h1": {"XX": 1.0}, "h2": {"YY": 1.0}, "h3": {"ZI": 0.5, "IZ": 0.5}, "symmetric": true}"#).unwrap();
    let out = numrange(&["report", "--file", inst.to_str().unwrap(), "--grid", "20", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let mine = json(&dir.path().join("mine_report.json"));
    let out = numrange(&["report", "--demo", "xy", "--grid", "20", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let xy = json(&dir.path().join("xy_report.json"));
    assert_eq!(mine["instance"]["hash"], xy["instance"]["hash"]);
}

#[test]
fn exit_codes_by_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        p.to_str().unwrap().to_string()
    };

    let out = numrange(&["sample", "--demo", "nope", "--out", d]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));

    assert_eq!(code(&numrange(&["sample", "--file", "/no/such/file.json", "--out", d])), 2);
    assert_eq!(code(&numrange(&["sample", "--out", d])), 2);
    assert_eq!(code(&numrange(&["sample", "--demo", "oloid", "--grid", "abc"])), 2);
    assert_eq!(code(&numrange(&["sample", "--demo", "oloid", "--grid", "0", "--out", d])), 2);

    let bad_shape = write("shape.json", r#"{"h1": [[1,0,0],[0,1,0],[0,0,1]]}"#);
    let out = numrange(&["classify", "--file", &bad_shape, "--out", d]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("h1"));

    let syntax = write("syntax.json", "{\n  \"h1\": {\"XX\": 1.0,}\n}");
    let out = numrange(&["classify", "--file", &syntax, "--out", d]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let non_hermitian = write("nh.json", r#"{"h2": [[0,1,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]]}"#);
    let out = numrange(&["classify", "--file", &non_hermitian, "--out", d]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("h2"));

    assert_eq!(code(&numrange(&["classify", "--demo", "oloid", "--mode", "symmetric", "--grid", "20", "--out", d])), 3);

    let bad_cloud = write("bad.csv", "x,y,z\n1,2\n");
    let out = numrange(&["hull", "--cloud", &bad_cloud, "--out", d]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains(":2"));
}
