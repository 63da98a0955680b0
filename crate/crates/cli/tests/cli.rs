use std::path::PathBuf;
use std::process::Command;

fn sagin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sagin"));
    c.env_remove("SAGIN_SEED").env_remove("SAGIN_THREADS");
    c
}

fn tmp(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("sagin-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn eval_prints_csv() {
    let out = sagin().args(["eval", "--metric", "delay-violation"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# scenario_hash="));
    assert!(text.contains("rate_sat,p_sat,rate_uav,p_uav"));
}

#[test]
fn usage_errors_exit_2() {
    let out = sagin().args(["eval", "--metric", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = sagin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let dir = tmp("bad");
    let cfg = dir.join("bad.cfg");
    std::fs::write(&cfg, "uav.bogus = 1\n").unwrap();
    let out = sagin().arg("--config").arg(&cfg).args(["eval", "--metric", "moments"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("uav.bogus") && err.contains("line 1"), "{err}");
}

#[test]
fn failing_validation_exits_1() {
    // Ten fields cannot resolve the Laplace transform to 3%.
    let out = sagin()
        .args(["validate", "--suite", "laplace-vs-mc", "--trials", "10"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("FAIL"));
}

#[test]
fn passing_validation_exits_0() {
    let out = sagin().args(["validate", "--suite", "outage-roundtrip"]).output().unwrap();
    assert!(out.status.success());
}

#[test]
fn sweep_writes_output_file() {
    let dir = tmp("sweep");
    let file = dir.join("theta.csv");
    let st = sagin()
        .args(["sweep", "--metric", "delay-violation", "--param", "qos.theta", "--values", "0.001,0.01,0.1", "--out"])
        .arg(&file)
        .status()
        .unwrap();
    assert!(st.success());
    let text = std::fs::read_to_string(&file).unwrap();
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "qos.theta,rate_sat,p_sat,rate_uav,p_uav");
    assert_eq!(data.len(), 4);
}

#[test]
fn figures_are_byte_identical_across_thread_counts() {
    let run = |threads: &str, name: &str| {
        let dir = tmp(name);
        let st = sagin()
            .args(["figures", "--figure", "fig2", "--trials", "400", "--seed", "9", "--threads", threads, "--out"])
            .arg(&dir)
            .status()
            .unwrap();
        assert!(st.success());
        std::fs::read(dir.join("fig2.csv")).unwrap()
    };
    let a = run("1", "t1");
    let b = run("3", "t3");
    assert_eq!(a, b);
    assert!(String::from_utf8(a).unwrap().contains("# seed=9"));
}

#[test]
fn seed_from_environment() {
    let out = sagin()
        .env("SAGIN_SEED", "42")
        .args(["eval", "--metric", "outage-capacity"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("# seed=42"));
}
