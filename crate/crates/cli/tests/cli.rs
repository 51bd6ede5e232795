use std::fs;
use std::process::Command;

use ssi_pinctrl::fixture_dir;

fn ssi(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ssi")).args(args).output().unwrap()
}

fn script(name: &str, body: &str) -> String {
    let dir = std::env::temp_dir().join(format!("ssi-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.display().to_string()
}

fn config() -> String {
    fixture_dir().join("pinctrl.toml").display().to_string()
}

#[test]
fn empty_script_exits_zero() {
    let out = ssi(&[&config(), "--script", &script("empty.ssi", "")]);
    assert!(out.status.success());
}

#[test]
fn symbolic_branch_in_batch_mode_fails_with_blockers() {
    // enable-irq before probe: the driver state is unknown
    let out = ssi(&[&config(), "--script", &script("early.ssi", "0\nenable-irq 3\n")]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stdout);
    assert!(err.contains("blocked by"), "{err}");
}

#[test]
fn branch_policy_flag_overrides_batch_default() {
    let s = script("early2.ssi", "0\nenable-irq 3\n");
    let out = ssi(&[&config(), "--script", &s, "--branch-policy", "assume-false"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn max_steps_limits_commands() {
    let s = script("probe.ssi", "0\nprobe\n");
    let out = ssi(&[&config(), "--script", &s, "--max-steps", "10"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("exceeded 10"));
}

#[test]
fn bad_config_exits_one() {
    let out = ssi(&["/nonexistent/ssi.toml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn transcripts_are_byte_identical_across_runs() {
    let s = fixture_dir().join("breakpoint.ssi").display().to_string();
    let a = ssi(&[&config(), "--script", &s]);
    let b = ssi(&[&config(), "--script", &s]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn list_models_names_the_profile_hooks() {
    let out = ssi(&[&config(), "--list-models"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for h in ssi_pinctrl::SUFFICIENT_HOOKS {
        assert!(text.lines().any(|l| l == h), "{h}");
    }
}
