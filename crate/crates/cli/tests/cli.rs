use std::process::Command;

fn rorr() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rorr"))
}

#[test]
fn no_arguments_prints_usage_and_exits_2() {
    let out = rorr().output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn bad_subcommand_exits_2() {
    let out = rorr().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eval_worked_example() {
    let out = rorr()
        .args(["rorr-eval", "--matrix", "hadamard", "--k", "2", "--input", "all-ones", "--n", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("phi = 0.70710678"), "{stdout}");
}

#[test]
fn partition_cost_within_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let out = rorr()
        .args(["partition", "8", "3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("cover=exact cost-in-bounds=yes"), "{stdout}");
    assert!(dir.path().join("partition.txt").exists());
    assert!(dir.path().join("manifest-partition.txt").exists());
}

#[test]
fn master_seed_env_override_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.txt");
    let write_config = || {
        std::fs::write(
            &config,
            format!(
                "n=64\nk=1\nmatrix=hadamard\nsamples=2000\ndepths=4\nmaster_seed=1\nepsilon=0.5\nout_dir={}\n",
                dir.path().display()
            ),
        )
        .unwrap();
    };
    write_config();
    let run = |env: Option<&str>| {
        let mut cmd = rorr();
        cmd.args(["mass-check", "--config"]).arg(&config);
        if let Some(seed) = env {
            cmd.env("RORR_MASTER_SEED", seed);
        } else {
            cmd.env_remove("RORR_MASTER_SEED");
        }
        let out = cmd.output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(dir.path().join("mass.csv")).unwrap()
    };
    let base = run(None);
    let same = run(None);
    let overridden = run(Some("99"));
    assert_eq!(base, same);
    assert_ne!(base, overridden);
}

#[test]
fn bad_config_exits_with_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.txt");
    std::fs::write(&config, "n=63\nk=2\nmatrix=hadamard\nsamples=2000\n").unwrap();
    let out = rorr().args(["mass-check", "--config"]).arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
