use std::path::Path;
use std::process::{Command, Output};

fn pblab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pblab")).args(args).output().unwrap()
}

fn code(args: &[&str]) -> i32 {
    pblab(args).status.code().unwrap()
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_owned()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["--version"]), 0);
    let text = String::from_utf8(pblab(&["--help"]).stdout).unwrap();
    for name in ["virasoro-check", "qpii-solve", "lax-check", "bethe-solve", "replay"] {
        assert!(text.contains(name), "{name}");
    }
}

#[test]
fn validation_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_arg(tmp.path());
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&["sample", "--M", "0", "--out", &out]), 2);
    assert_eq!(code(&["sample", "--beta", "-1", "--out", &out]), 2);
    assert_eq!(code(&["odeim-spectrum", "--alpha", "-1", "--out", &out]), 2);
    assert_eq!(code(&["bethe-solve", "--tol", "1e-3", "--out", &out]), 2);
    assert_eq!(code(&["sample", "--samples", "many", "--out", &out]), 2);
    assert!(!tmp.path().join("manifest.json").exists());
}

#[test]
fn config_files_are_checked() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_arg(&tmp.path().join("run"));
    let write = |name: &str, text: &str| {
        let p = tmp.path().join(name);
        std::fs::write(&p, text).unwrap();
        p.to_str().unwrap().to_owned()
    };
    let unknown_key = write("a.toml", "[poles-run]\nbogus = 1\n");
    let unknown_section = write("b.toml", "[frobnicate]\nx = 1\n");
    let bad_global = write("c.toml", "[global]\ncolour = 1\n");
    let good = write("d.toml", "[global]\nseed = 3\n\n[poles-run]\nkappa = 1\nt_final = 0.2\n");
    for path in [&unknown_key, &unknown_section, &bad_global] {
        assert_eq!(code(&["poles-run", "--config", path, "--out", &out]), 2, "{path}");
    }
    assert_eq!(code(&["poles-run", "--config", "/nonexistent.toml", "--out", &out]), 2);
    assert_eq!(code(&["poles-run", "--config", &good, "--kappa", "2", "--out", &out]), 0);
    let manifest = std::fs::read_to_string(tmp.path().join("run/manifest.json")).unwrap();
    let m: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    // flags override the file, the file overrides defaults
    assert_eq!(m["config"]["kappa"], 2);
    assert_eq!(m["config"]["t_final"], 0.2);
    assert_eq!(m["seed"], 3);
}

#[test]
fn numerical_failure_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_arg(tmp.path());
    let args = ["poles-run", "--t-final", "1e6", "--tol", "1e-14", "--out", &out];
    let o = pblab(&args);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("run failed"));
}

#[test]
fn replay_detects_tampering() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    assert_eq!(code(&["bethe-solve", "--L", "1", "--out", &out_arg(&run)]), 0);
    let manifest = run.join("manifest.json");
    let path = manifest.to_str().unwrap();
    let other = out_arg(&tmp.path().join("again"));
    assert_eq!(code(&["replay", path, "--out", &other]), 0);
    assert_eq!(code(&["replay", path, "--seed", "1"]), 2);

    // a changed config no longer matches its hash
    let text = std::fs::read_to_string(&manifest).unwrap();
    std::fs::write(&manifest, text.replace("\"alpha\": 2.0", "\"alpha\": 3.0")).unwrap();
    assert_eq!(code(&["replay", path, "--out", &other]), 2);

    // a recorded digest that the re-run does not reproduce fails verification
    let mut m: serde_json::Value = serde_json::from_str(&text).unwrap();
    m["artifacts"][0]["sha256"] = "0".repeat(64).into();
    std::fs::write(&manifest, serde_json::to_string_pretty(&m).unwrap()).unwrap();
    assert_eq!(code(&["replay", path, "--out", &other]), 3);

    // replay regenerates an edited artifact in place
    std::fs::write(&manifest, &text).unwrap();
    let bethe = run.join("bethe.json");
    let body = std::fs::read_to_string(&bethe).unwrap();
    std::fs::write(&bethe, body.clone() + " ").unwrap();
    assert_eq!(code(&["replay", path]), 0);
    assert_eq!(std::fs::read_to_string(&bethe).unwrap(), body);
}

#[test]
fn thread_count_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |threads: &str, dir: &str| {
        let out = out_arg(&tmp.path().join(dir));
        let status = Command::new(env!("CARGO_BIN_EXE_pblab"))
            .args(["virasoro-check", "--M", "3", "--samples", "3000", "--seed", "8", "--out", &out])
            .env("PBLAB_THREADS", threads)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(tmp.path().join(dir).join("virasoro.csv")).unwrap()
    };
    assert_eq!(run("1", "one"), run("3", "three"));
    let bad = Command::new(env!("CARGO_BIN_EXE_pblab"))
        .args(["bethe-solve", "--out", &out_arg(tmp.path())])
        .env("PBLAB_THREADS", "zero")
        .status()
        .unwrap();
    assert_eq!(bad.code(), Some(2));
}
