use std::path::Path;
use std::process::{Command, Output};

fn apdist(args: &[&str]) -> Output {
    apdist_in(args, None)
}

fn apdist_in(args: &[&str], out_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_apdist"));
    cmd.args(args).env_remove("APDIST_OUT_DIR");
    if let Some(dir) = out_dir {
        cmd.env("APDIST_OUT_DIR", dir);
    }
    cmd.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(code(&apdist(&["verify", "kl4hat", "--q", "11"])), 0);
    assert_eq!(code(&apdist(&["verify", "no-such-check"])), 2);
    assert_eq!(code(&apdist(&["verify", "kl4hat", "--q", "100"])), 3);
    assert_eq!(
        code(&apdist(&["verify", "gauss-spectral", "--q", "13", "--tol", "1e-30"])),
        4
    );
    assert_eq!(code(&apdist(&["coeffs", "tau", "--N", "0"])), 3);
}

#[test]
fn verify_report_schema() {
    let o = apdist(&["verify", "poisson", "--q", "13", "--L", "10", "--M", "20"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for key in [
        "command",
        "params",
        "max_error",
        "tolerance",
        "pass",
        "runtime_ms",
        "variant_details",
    ] {
        assert!(v.get(key).is_some(), "missing {key} in {v}");
    }
    assert_eq!(v["command"], "verify poisson");
    assert_eq!(v["pass"], true);
    assert!(v["max_error"].as_f64().unwrap() <= v["tolerance"].as_f64().unwrap());
}

#[test]
fn tau_csv() {
    let o = apdist(&["coeffs", "tau", "--N", "5"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[1..], ["1,1", "2,-24", "3,252", "4,-1472", "5,4830"]);
}

#[test]
fn out_dir_receives_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let o = apdist_in(&["verify", "kl4hat", "--q", "7"], Some(dir.path()));
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(dir.path().join("kl4hat.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["pass"], true);
}

#[test]
fn explicit_out_wins_over_env() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("nested/delta.csv");
    let o = apdist_in(
        &["delta", "--q", "7", "--X", "100", "--out", target.to_str().unwrap()],
        Some(dir.path()),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&target).unwrap();
    assert!(text.starts_with("X,q,a,delta,trivial,ratio\n"));
    assert_eq!(text.lines().count(), 7);
    assert!(!dir.path().join("delta.csv").exists());
}

#[test]
fn regime_svg_is_deterministic() {
    let args = ["scan", "regimes", "--q", "31", "--X", "1e3", "--format", "svg"];
    let a = apdist(&args);
    let b = apdist(&args);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert!(a.stdout.starts_with(b"<svg"));
}

#[test]
fn unsupported_format_is_a_config_error() {
    assert_eq!(code(&apdist(&["verify", "kl4hat", "--q", "7", "--format", "svg"])), 3);
}
