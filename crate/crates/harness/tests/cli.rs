use std::process::Command;

fn gnlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gnlab"))
}

#[test]
fn bad_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.ini");
    std::fs::write(&cfg, "[model]\nepochs = many\n").unwrap();
    let out = gnlab().arg("--config").arg(&cfg).arg("--out").arg(dir.path().join("o")).arg("train").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn invalid_override_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = gnlab().args(["--samples", "0", "--out"]).arg(dir.path()).arg("compare").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn busy_output_directory_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join(".gnlab.lock"), "").unwrap();
    let out = gnlab().arg("--out").arg(dir.path()).arg("train").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn train_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.ini");
    std::fs::write(&cfg, "[dataset]\nn_train = 64\nn_test = 16\n[model]\nhidden = 8\nepochs = 1\n").unwrap();
    let o = dir.path().join("o");
    let out = gnlab().arg("--config").arg(&cfg).arg("--out").arg(&o).arg("train").output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(o.join("model.ckpt").is_file());
    assert!(o.join("manifest.txt").is_file());
    assert!(!o.join(".gnlab.lock").exists());
}
