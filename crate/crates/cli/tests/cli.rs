use std::process::Command;

fn lanegap() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lanegap"))
}

#[test]
fn run_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results");
    let config = dir.path().join("exp.toml");
    std::fs::write(
        &config,
        format!(
            "seed = 3\noutput_dir = {:?}\nmodels = [\"idm\"]\n\n[data]\nkind = \"synthetic\"\nsequences = 30\nframes = 80\n",
            out.display().to_string()
        ),
    )
    .unwrap();
    let res = lanegap().arg("run").arg("--config").arg(&config).output().unwrap();
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(stdout.contains("IDM"), "{stdout}");
    assert!(out.join("report.csv").is_file());
}

#[test]
fn missing_config_is_an_error() {
    let res = lanegap()
        .args(["run", "--config", "/nonexistent/exp.toml"])
        .output()
        .unwrap();
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("/nonexistent/exp.toml"));
}

#[test]
fn default_config_parses_back() {
    let res = lanegap().arg("default-config").output().unwrap();
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    assert_eq!(
        lanegap::harness::ExperimentConfig::from_toml(&text).unwrap(),
        Default::default()
    );
}
