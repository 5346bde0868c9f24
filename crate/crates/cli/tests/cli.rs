use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const TINY: &str = r#"
[physical]
eta = 12.0
u0 = -1.0
delta_c = -10.0
kappa = 10.0
sin_phi = [0, 1]

[lattice]
n_max = 4
cut_plus = 3
cut_minus = 3

[integrator]
t_final = 0.3
record_interval = 0.1

[meanfield]
t_final = 0.3
grid_points = 64

[sweep]
eta_max = 8.0
points = 2
wigner_points = 31
grid_points = 64
chains = [{ sin_phi = [0, 1] }, { sin_phi = [1, 2], n_max = 6 }]

[wigner]
points = 31

[checks]
boundary_limit = 1.0
"#;

fn ringcav(args: &[&str], env_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ringcav"));
    cmd.args(args).env_remove("RINGCAV_OUTPUT_DIR");
    if let Some(dir) = env_dir {
        cmd.env("RINGCAV_OUTPUT_DIR", dir);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn malformed_config_exits_2_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[physical\neta = ");
    let out_dir = tmp.path().join("out");
    let out = ringcav(&["dynamics", "--config", &cfg, "--output", out_dir.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir.exists());
}

#[test]
fn unknown_key_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("{TINY}\n[extra]\nfoo = 1\n"));
    let out_dir = tmp.path().join("out");
    let out = ringcav(&["meanfield", "--config", &cfg, "--output", out_dir.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir.exists());
}

#[test]
fn missing_physical_parameter_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &TINY.replace("kappa = 10.0\n", ""));
    let out_dir = tmp.path().join("out");
    let out = ringcav(&["meanfield", "--config", &cfg, "--output", out_dir.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mode_mismatch_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("mode = \"steady-sweep\"\n{TINY}"));
    let out_dir = tmp.path().join("out");
    let out = ringcav(&["dynamics", "--config", &cfg, "--output", out_dir.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir.exists());
}

#[test]
fn invalid_angle_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &TINY.replace("sin_phi = [0, 1]\n\n[lattice]", "sin_phi = [3, 2]\n\n[lattice]"));
    let out_dir = tmp.path().join("out");
    let out = ringcav(&["dynamics", "--config", &cfg, "--output", out_dir.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dynamics_reruns_are_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), TINY);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let out = ringcav(&["dynamics", "--config", &cfg, "--output", dir.to_str().unwrap()], None);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let m = manifest(&a);
    assert_eq!(m["mode"], "quantum-dynamics");
    assert_eq!(m["checks"]["passed"], true);
    let files = m["files"].as_array().unwrap();
    assert!(files.iter().any(|f| f["name"] == "quantum_trajectory.csv"));
    for f in files {
        let name = f["name"].as_str().unwrap();
        let left = fs::read(a.join(name)).unwrap();
        assert_eq!(left.len() as u64, f["bytes"].as_u64().unwrap());
        assert_eq!(left, fs::read(b.join(name)).unwrap(), "{name} differs");
    }
    assert_eq!(fs::read(a.join("manifest.json")).unwrap(), fs::read(b.join("manifest.json")).unwrap());
}

#[test]
fn override_is_recorded_in_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), TINY);
    let dir = tmp.path().join("out");
    let out = ringcav(
        &[
            "meanfield",
            "--config",
            &cfg,
            "--output",
            dir.to_str().unwrap(),
            "--override",
            "physical.eta=3.5",
            "--override",
            "meanfield.t_final=0.2",
        ],
        None,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&dir);
    assert_eq!(m["config"]["physical"]["eta"].as_f64(), Some(3.5));
    assert_eq!(m["config"]["meanfield"]["t_final"].as_f64(), Some(0.2));
    let csv = fs::read_to_string(dir.join("meanfield_trajectory.csv")).unwrap();
    let last = csv.lines().last().unwrap();
    let t: f64 = last.split(',').next().unwrap().parse().unwrap();
    assert!((t - 0.2).abs() < 1e-9);
}

#[test]
fn output_dir_from_environment_and_flag_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), TINY);
    let env_dir = tmp.path().join("from_env");
    let out = ringcav(&["meanfield", "--config", &cfg], Some(&env_dir));
    assert!(out.status.success());
    assert!(env_dir.join("manifest.json").exists());

    let flag_dir = tmp.path().join("from_flag");
    let env_dir2 = tmp.path().join("unused_env");
    let out = ringcav(&["meanfield", "--config", &cfg, "--output", flag_dir.to_str().unwrap()], Some(&env_dir2));
    assert!(out.status.success());
    assert!(flag_dir.join("manifest.json").exists());
    assert!(!env_dir2.exists());
}

#[test]
fn boundary_limit_violation_exits_4_after_writing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &TINY.replace("boundary_limit = 1.0", "boundary_limit = 1e-12"));
    let dir = tmp.path().join("out");
    let out = ringcav(&["dynamics", "--config", &cfg, "--output", dir.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(4));
    let m = manifest(&dir);
    assert_eq!(m["checks"]["passed"], false);
}

#[test]
fn sweep_writes_one_table_per_angle() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), TINY);
    let dir = tmp.path().join("out");
    let out = ringcav(&["sweep", "--config", &cfg, "--output", dir.to_str().unwrap(), "--threads", "2"], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["sweep_sin_0_1.csv", "sweep_sin_1_2.csv"] {
        let text = fs::read_to_string(dir.join(name)).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("eta,abs_alpha_plus_q,abs_alpha_minus_q"));
        assert_eq!(lines.count(), 2);
    }
}

#[test]
fn wigner_and_compare_produce_their_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), TINY);
    let wdir = tmp.path().join("w");
    let out = ringcav(&["wigner", "--config", &cfg, "--output", wdir.to_str().unwrap()], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["wigner_plus.csv", "wigner_minus.csv", "wigner_cut_plus.csv", "steady_state_plus.txt"] {
        assert!(wdir.join(name).exists(), "{name}");
    }
    let cdir = tmp.path().join("c");
    let out = ringcav(&["compare", "--config", &cfg, "--output", cdir.to_str().unwrap()], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&cdir);
    assert!(m["diagnostics"]["seed_sensitivity"].is_object() || m["diagnostics"]["seed_sensitivity"].is_array());
    assert!(cdir.join("compare_slopes.csv").exists());
}
