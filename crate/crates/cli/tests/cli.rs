use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
[experiment]
task = "l0dl"
seeds = [3]
max_outer = 15

[l0dl]
n = 6
m = 8
p = 40
sparsity = 2

[[solver]]
name = "PALM"
kind = "palm"

[[solver]]
name = "TECU"
kind = "tecu"
x = { rule = "prox_linear" }
y = { rule = "embedded", operator = "admm", c = 0.4, eta = 1.0 }
"#;

fn tecu(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tecu"))
        .args(args)
        .env("TECU_OUTPUT_DIR", out_dir)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_writes_traces_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.toml", SMALL);
    let out = dir.path().join("out");
    let res = tecu(&["run", &cfg], &out);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(out.join("summary.json").exists());
    assert!(out.join("l0dl_PALM_3.csv").exists());
    assert!(out.join("l0dl_TECU_3.csv").exists());
}

#[test]
fn validate_succeeds_on_good_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.toml", SMALL);
    let res = tecu(&["validate", &cfg, "--probes", "3"], dir.path());
    assert_eq!(res.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&res.stdout).contains("ok"));
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", &SMALL.replace("seeds = [3]", "seeds = [3, 3]"));
    assert_eq!(tecu(&["run", &bad], dir.path()).status.code(), Some(1));
    let syntax = write(dir.path(), "syntax.toml", "[experiment\n");
    assert_eq!(tecu(&["run", &syntax], dir.path()).status.code(), Some(1));
    let missing = dir.path().join("nope.toml");
    assert_eq!(tecu(&["run", missing.to_str().unwrap()], dir.path()).status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(tecu(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(tecu(&[], dir.path()).status.code(), Some(1));
    assert_eq!(tecu(&["--help"], dir.path()).status.code(), Some(0));
    assert_eq!(tecu(&["enhance", "a", "b", "--solver", "magic"], dir.path()).status.code(), Some(1));
}

#[test]
fn unreadable_image_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let img = write(dir.path(), "bad.pgm", "P7\n1 1\n255\n");
    let out = dir.path().join("o.pgm");
    let res = tecu(&["enhance", &img, out.to_str().unwrap()], dir.path());
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("P7"));
}

#[test]
fn enhance_writes_an_image() {
    let dir = tempfile::tempdir().unwrap();
    let mut pgm = b"P5\n8 8\n255\n".to_vec();
    pgm.extend((0..64u32).map(|k| (10 + (k * 7) % 50) as u8));
    let input = dir.path().join("in.pgm");
    fs::write(&input, pgm).unwrap();
    let output = dir.path().join("out.pgm");
    let res = tecu(
        &["enhance", input.to_str().unwrap(), output.to_str().unwrap(), "--max-outer", "20"],
        dir.path(),
    );
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(fs::read(&output).unwrap().starts_with(b"P5\n8 8\n255\n"));
}
