//! Drives the `cgmem` binary and the library entry points on small configs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cgmem_cli::checkpoint::{checkpoint_load, read_checkpoint};
use cgmem_cli::config::RunConfig;
use cgmem_cli::LoadedConfig;
use tempfile::TempDir;

const SMALL: &str = r#"
experiment = "trajectory"
seed = 5

[model]
omega = 0.5
alpha = 1.0
beta = 0.5
epsilon = 0.1

[domain]
n = 33

[history]
n_s = 48

[time]
dt = 0.005
t_final = 0.4
record_stride = 4
checkpoint_every = 40
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cgmem"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn run_cfg(cfg: &Path, out: &Path) -> Output {
    bin().args(["run", "--config"]).arg(cfg).arg("--out").arg(out).output().unwrap()
}

#[test]
fn validate_accepts_shipped_configs() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for entry in fs::read_dir(configs).unwrap() {
        let path = entry.unwrap().path();
        let o = bin().args(["validate", "--config"]).arg(&path).output().unwrap();
        assert_eq!(code(&o), 0, "{}: {}", path.display(), String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stdout).contains("config hash"));
    }
}

#[test]
fn unknown_key_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let p = write(tmp.path(), "bad.toml", &format!("{SMALL}\n[initial]\nwobble = 1\n"));
    let o = bin().args(["validate", "--config"]).arg(&p).output().unwrap();
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("wobble"));
}

#[test]
fn kernel_violating_decay_is_rejected_by_name() {
    let tmp = TempDir::new().unwrap();
    let text = SMALL.replace("[domain]", "[kernel]\nrate = 1.0\ndelta = 3.0\n\n[domain]");
    let p = write(tmp.path(), "k.toml", &text);
    let o = run_cfg(&p, &tmp.path().join("out"));
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("exponential-decay"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn coarse_memory_step_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let p = write(tmp.path(), "dt.toml", &SMALL.replace("dt = 0.005", "dt = 0.05"));
    assert_eq!(code(&run_cfg(&p, &tmp.path().join("out"))), 2);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let p = write(tmp.path(), "c.toml", SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&run_cfg(&p, &a)), 0);
    assert_eq!(code(&run_cfg(&p, &b)), 0);
    for f in ["trajectory.csv", "final.ckpt", "summary.json", "checkpoints/step_0000000040.ckpt"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn resume_matches_the_direct_run() {
    let tmp = TempDir::new().unwrap();
    let p = write(tmp.path(), "c.toml", SMALL);
    let direct = tmp.path().join("direct");
    assert_eq!(code(&run_cfg(&p, &direct)), 0);
    let ckpt = direct.join("checkpoints/step_0000000040.ckpt");
    let resumed = tmp.path().join("resumed");
    let o = bin().args(["resume", "--checkpoint"]).arg(&ckpt).arg("--out").arg(&resumed).output().unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(direct.join("final.ckpt")).unwrap(), fs::read(resumed.join("final.ckpt")).unwrap());
    let d = fs::read_to_string(direct.join("trajectory.csv")).unwrap();
    let r = fs::read_to_string(resumed.join("trajectory.csv")).unwrap();
    let dl: Vec<&str> = d.lines().collect();
    let rl: Vec<&str> = r.lines().collect();
    // header, then one row per stride of 4 steps; the checkpoint sits at step 40
    assert_eq!(rl[0], dl[0]);
    assert_eq!(&rl[1..], &dl[1 + 10..]);
}

#[test]
fn checkpoint_refuses_a_different_config() {
    let tmp = TempDir::new().unwrap();
    let p = write(tmp.path(), "c.toml", SMALL);
    let out = tmp.path().join("o");
    assert_eq!(code(&run_cfg(&p, &out)), 0);
    let ckpt = out.join("final.ckpt");
    let (header, arrays) = read_checkpoint(&ckpt).unwrap();
    assert_eq!(header.step, 80);
    assert!(arrays.iter().any(|(n, _)| n == "u_bulk"));

    let same = LoadedConfig::from_config(RunConfig::parse(SMALL, "c.toml").unwrap()).unwrap();
    let state = checkpoint_load(&ckpt, &same.config, &same.problem).unwrap();
    assert_eq!(state.step, 80);

    let other = LoadedConfig::from_config(RunConfig::parse(&SMALL.replace("seed = 5", "seed = 6"), "d.toml").unwrap()).unwrap();
    let err = checkpoint_load(&ckpt, &other.config, &other.problem).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("hash"), "{err}");
}

#[test]
fn tampered_checkpoint_is_refused_on_resume() {
    let tmp = TempDir::new().unwrap();
    let p = write(tmp.path(), "c.toml", SMALL);
    let out = tmp.path().join("o");
    assert_eq!(code(&run_cfg(&p, &out)), 0);
    let mut bytes = fs::read(out.join("final.ckpt")).unwrap();
    let pos = bytes.windows(11).position(|w| w == b"omega = 0.5").expect("embedded config");
    bytes[pos + 10] = b'4';
    let bad = write(tmp.path(), "bad.ckpt", "");
    fs::write(&bad, bytes).unwrap();
    let o = bin().args(["resume", "--checkpoint"]).arg(&bad).arg("--out").arg(tmp.path().join("r")).output().unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn sweep_eps_writes_the_table() {
    let tmp = TempDir::new().unwrap();
    let text = SMALL.replace("experiment = \"trajectory\"", "experiment = \"robustness\"").replace("t_final = 0.4", "t_final = 0.3");
    let p = write(tmp.path(), "s.toml", &text);
    let out = tmp.path().join("sweep");
    let o = bin().args(["sweep-eps", "--config"]).arg(&p).args(["--eps", "0.2,0.1"]).arg("--out").arg(&out).output().unwrap();
    assert!(matches!(code(&o), 0 | 1), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["experiment"], "robustness");
}

#[test]
fn plot_template_is_written() {
    let tmp = TempDir::new().unwrap();
    let p = tmp.path().join("plot.py");
    let o = bin().args(["plot-template", "--out"]).arg(&p).output().unwrap();
    assert_eq!(code(&o), 0);
    assert!(fs::read_to_string(p).unwrap().contains("trajectory.csv"));
}
