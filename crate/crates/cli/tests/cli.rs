use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sfa-fisher"))
        .args(args)
        .env_remove("SFA_FISHER_OUTPUT")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

const SMALL: &str = r#"
[field]
envelope = "mono"
cep_rad = 0.0

[channels]
n_channels = 1

[grid]
n_par = 24
n_perp = 16
energy_panel = 0.05
n_theta = 12
"#;

#[test]
fn unknown_config_key_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[field]\nintensty_wcm2 = 2e14\n");
    let out = run(&["point", "-c", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("intensty_wcm2"));
}

#[test]
fn invalid_parameter_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "neg.toml", "[field]\nintensity_wcm2 = -1.0\n");
    assert_eq!(run(&["point", "-c", &cfg]).status.code(), Some(2));
}

#[test]
fn point_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let csv = dir.path().join("p.csv");
    let out = run(&["point", "-c", &cfg, "-f", "csv", "-o", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.starts_with("sweep_var,qf,alpha,"));

    let out = run(&["point", "-c", &cfg, "-f", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v.as_array().map(|a| a.len()), Some(1));
}

#[test]
fn unwritable_output_exits_with_code_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let bad = dir.path().join("missing").join("out.csv");
    assert_eq!(run(&["point", "-c", &cfg, "-o", bad.to_str().unwrap()]).status.code(), Some(1));
}
