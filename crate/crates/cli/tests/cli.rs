use std::path::Path;
use std::process::{Command, Output};

fn vawt(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vawt"))
        .args(args)
        .current_dir(cwd)
        .env_remove("VAWT_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn json(bytes: &[u8]) -> serde_json::Value {
    serde_json::from_slice(bytes).unwrap_or_else(|e| panic!("not JSON ({e}): {}", String::from_utf8_lossy(bytes)))
}

const SHORT: &str = r#"
seed = 5
[rl]
max_iterations = 6
window = 2
episode_length = 3.0
[compare]
duration = 5.0
csv_stride = 50
[stats]
seeds = 3
"#;

fn write_config(dir: &Path, name: &str, scenario: &str) -> String {
    std::fs::write(dir.join(name), format!("scenario = \"{scenario}\"\n{SHORT}")).unwrap();
    name.to_string()
}

#[test]
fn staged_pipeline_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write_config(d, "train.toml", "stage1");

    let out = vawt(&["train", "--stage", "1", "--config", &cfg, "--out", "run"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s1 = json(&out.stdout);
    assert_eq!(s1["iterations"], 6);
    assert_eq!(s1["theta_final"].as_array().unwrap().len(), 12);
    let trace = std::fs::read_to_string(d.join("run/stage1_trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 2 + 6);

    let out = vawt(&["train", "--stage", "2", "--config", &cfg, "--out", "run"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out.stdout)["theta_initial"], s1["theta_final"]);
    assert!(d.join("run/theta_s2.json").exists());

    let cmp = write_config(d, "cmp.toml", "compare_step");
    let out = vawt(&["compare", "--config", &cmp, "--out", "run"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let names: Vec<String> = json(&out.stdout)["controllers"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["controller"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(names, ["rbfnn", "mppt1", "mppt2"]);
    let header = std::fs::read_to_string(d.join("run/compare_step_rbfnn.csv")).unwrap();
    assert_eq!(
        header.lines().nth(1),
        Some("t,U_w,omega_r,omega_opt,V_L,I_L,R_L,P,P_opt")
    );

    let stats = write_config(d, "stats.toml", "stats");
    let out = vawt(&["stats", "--seeds", "2", "--config", &stats, "--out", "run"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out.stdout);
    assert_eq!(report["seeds"], serde_json::json!([5, 6]));
    assert_eq!(report["stats"].as_array().unwrap().len(), 3);
}

#[test]
fn stage2_without_stage1_output_fails_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "stage2");
    let out = vawt(
        &["train", "--stage", "2", "--config", &cfg, "--out", "empty"],
        dir.path(),
    );
    assert!(!out.status.success());
    let err = json(&out.stderr);
    assert_eq!(err["error"]["kind"], "config");
    assert!(err["error"]["message"].as_str().unwrap().contains("stage-1"));
}

#[test]
fn simulate_runs_each_controller() {
    let dir = tempfile::tempdir().unwrap();
    for (controller, wind) in [
        ("mppt1", "step:10"),
        ("mppt2", "sine:10:2:0.2"),
        ("rbfnn", "stochastic:3"),
    ] {
        let out = vawt(
            &[
                "simulate",
                "--controller",
                controller,
                "--wind",
                wind,
                "--theta",
                "s0",
                "--duration",
                "2",
                "--out",
                "sim",
            ],
            dir.path(),
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let s = json(&out.stdout);
        assert_eq!(s["controllers"][0]["controller"], controller);
        assert!(dir.path().join(format!("sim/simulate_{controller}.csv")).exists());
    }
}

#[test]
fn out_dir_defaults_to_env() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_vawt"))
        .args([
            "simulate",
            "--controller",
            "mppt1",
            "--wind",
            "step:8",
            "--duration",
            "1",
        ])
        .current_dir(dir.path())
        .env("VAWT_OUT_DIR", "from_env")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("from_env/simulate_mppt1.csv").exists());
}

#[test]
fn bad_input_exits_nonzero_with_error_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = vawt(&["simulate", "--controller", "mppt1", "--wind", "gale:9"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out.stderr)["error"]["kind"], "invalid_argument");

    let out = vawt(&["compare", "--config", "missing.toml"], dir.path());
    assert_eq!(json(&out.stderr)["error"]["kind"], "io");

    std::fs::write(dir.path().join("bad.toml"), "scenario = \"stats\"\n").unwrap();
    let out = vawt(&["stats", "--config", "bad.toml"], dir.path());
    assert_eq!(json(&out.stderr)["error"]["kind"], "config");

    let out = vawt(&["train", "--stage", "3"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out.stderr)["error"]["kind"], "usage");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write_config(d, "real.toml", "compare_real");
    std::fs::write(
        d.join("real.toml"),
        format!(
            "{}\n[policy]\ncontroller = \"s1\"\n",
            std::fs::read_to_string(d.join(&cfg)).unwrap()
        ),
    )
    .unwrap();
    for run in ["a", "b"] {
        let out = vawt(&["compare", "--config", &cfg, "--out", run], d);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in [
        "compare_real_summary.json",
        "compare_real_rbfnn.csv",
        "compare_real_mppt1.csv",
    ] {
        assert_eq!(
            std::fs::read(d.join("a").join(f)).unwrap(),
            std::fs::read(d.join("b").join(f)).unwrap()
        );
    }
}

#[test]
fn shipped_configs_and_fixtures_load() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let mut n = 0;
    for entry in std::fs::read_dir(root.join("configs")).unwrap() {
        let path = entry.unwrap().path();
        vawt_core::harness::ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert!(n >= 5);
    let fixtures = [
        ("theta_s0.json", vawt_core::PolicyParams::initial()),
        ("theta_s1.json", vawt_core::PolicyParams::published_stage1()),
        ("theta_s2.json", vawt_core::PolicyParams::published_stage2()),
    ];
    for (file, expected) in fixtures {
        let loaded = vawt_core::harness::PolicySource::File(root.join("fixtures").join(file))
            .load()
            .unwrap();
        assert_eq!(loaded, expected, "{file}");
    }
}
