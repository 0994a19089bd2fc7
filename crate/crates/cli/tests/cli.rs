use std::path::Path;
use std::process::{Command, Output};

fn proxnet(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_proxnet"))
        .args(args)
        .current_dir(cwd)
        .env_remove("PROXNET_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn write_spec(dir: &Path, body: &str) -> String {
    let path = dir.join("spec.json");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const LINEARITY: &str = r#"{
  "kind": "linearity",
  "parameters": { "network": "rng", "rs": [4, 8], "replicates": 3 },
  "master_seed": 11
}"#;

#[test]
fn list_kinds_and_version() {
    let dir = tempfile::tempdir().unwrap();
    let out = proxnet(&["list-kinds"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 8);
    assert!(text.contains("good_prob"));
    let out = proxnet(&["version"], dir.path());
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("proxnet "));
}

#[test]
fn validate_reports_field_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), LINEARITY);
    let out = proxnet(&["validate", &spec], dir.path());
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "ok");

    let bad = write_spec(dir.path(), &LINEARITY.replace("\"replicates\": 3", "\"replicates\": -1"));
    let out = proxnet(&["validate", &bad], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 3: parameters.replicates"), "{err}");
}

#[test]
fn missing_seed_is_a_parameter_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), &LINEARITY.replace(",\n  \"master_seed\": 11", ""));
    let out = proxnet(&["run", &spec], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("master_seed"));
}

#[test]
fn unreadable_file_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = proxnet(&["validate", "does-not-exist.json"], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unknown_kind_names_valid_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), &LINEARITY.replace("linearity", "nonsense"));
    let out = proxnet(&["run", &spec], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("ac_sweep"));
}

#[test]
fn run_writes_outputs_and_manifest_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), LINEARITY);
    let out_a = dir.path().join("a");
    let out = proxnet(&["run", &spec, "--output-dir", out_a.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let files: Vec<_> = std::fs::read_dir(&out_a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(files.len(), 3);
    assert!(files.iter().all(|f| f.starts_with("linearity-")));
    assert!(!files.iter().any(|f| f.ends_with(".partial")));
    let csv_name = files.iter().find(|f| f.ends_with(".csv")).unwrap();
    let manifest = files.iter().find(|f| f.ends_with(".manifest.json")).unwrap();
    let csv_a = std::fs::read(out_a.join(csv_name)).unwrap();
    assert!(String::from_utf8_lossy(&csv_a).starts_with("kind,r,replicate,seed,ell,ratio\n"));

    let out_b = dir.path().join("b");
    let out = proxnet(
        &[
            "run",
            out_a.join(manifest).to_str().unwrap(),
            "--output-dir",
            out_b.to_str().unwrap(),
            "--threads",
            "1",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read(out_b.join(csv_name)).unwrap(), csv_a);
}

#[test]
fn overrides_change_the_spec() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), LINEARITY);
    let out = proxnet(
        &["run", &spec, "--parameters.replicates=1", "--parameters.rs", "[5]"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_dir(dir.path().join("proxnet-out"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|x| x == "csv"))
        .unwrap();
    let text = std::fs::read_to_string(csv).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().starts_with("rng,5,0,"));

    let out = proxnet(&["run", &spec, "--parameters.replicates=0"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), LINEARITY);
    let target = dir.path().join("env-out");
    let out = Command::new(env!("CARGO_BIN_EXE_proxnet"))
        .args(["run", &spec])
        .current_dir(dir.path())
        .env("PROXNET_OUTPUT_DIR", &target)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(std::fs::read_dir(target).unwrap().count(), 3);
}
