use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn subact(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subact")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(cmd: &str, config: &Path, out: &Path) -> Output {
    subact(&[cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", "2"])
}

fn verdict(out: &Path, cmd: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join(cmd).join("verdict.json")).unwrap()).unwrap()
}

const FAREY: &str = "seed = 1\n[map]\nfamily = \"farey-g\"\nrho = 1.0\n[modulus]\nalpha = 0.5\n\
                     [schedule]\nw0 = 0.5\nn1 = 1000\nk_max = 120\n";

const MP_HOLDER_ONE: &str = "seed = 2\n[map]\nfamily = \"mp\"\ns = 0.5\n[modulus]\nalpha = 1.0\n\
                             [schedule]\nw0 = 0.25\nn1 = 200\nk_max = 100\n[obstruction]\nmax_period = 8\n";

const ZERO_POTENTIAL: &str = "[map]\nfamily = \"mp\"\ns = 0.5\n[modulus]\nalpha = 0.8\n\
                              [subaction]\npotential = \"zero\"\ngrid_size = 128\npairs = 1000\n";

#[test]
fn farey_ratio_table_ends_near_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "farey.toml", FAREY);
    let o = run("asymptotics", &cfg, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rd = csv::Reader::from_path(dir.path().join("asymptotics/asymptotics.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    let last = rows.last().unwrap();
    for col in [3, 4] {
        let r: f64 = last[col].parse().unwrap();
        assert!((r - 1.0).abs() < 0.01, "column {col}: {r}");
    }
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("asymptotics/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 1);
    assert_eq!(manifest["config"]["map"]["family"], "farey-g");
    assert!(manifest["files"].as_array().unwrap().iter().any(|f| f == "asymptotics.csv"));
}

#[test]
fn vanishing_regime_gives_no_obstruction() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mp.toml", MP_HOLDER_ONE);
    let o = run("obstruction", &cfg, dir.path());
    assert_eq!(o.status.code(), Some(1));
    let v = verdict(dir.path(), "obstruction");
    assert_eq!(v["pass"], false);
    assert!(v["summary"].as_str().unwrap().contains("no obstruction certified"));
}

#[test]
fn zero_potential_has_zero_subaction() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "zero.toml", ZERO_POTENTIAL);
    let o = run("subaction", &cfg, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let v = verdict(dir.path(), "subaction");
    assert_eq!(v["details"]["max_residual"], 0.0);
    let mut rd = csv::Reader::from_path(dir.path().join("subaction/u.csv")).unwrap();
    for r in rd.records() {
        assert_eq!(r.unwrap()[1].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn bad_config_exits_with_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "[map]\ns = 0.5\n[modulus]\nalpha = 0.3\n[schedule]\ngamma_time = 1.5\n");
    let o = run("gates", &cfg, dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("schedule.gamma_time"));
    let typo = write_config(dir.path(), "typo.toml", "[map]\ns = 0.5\n[modulus]\nalhpa = 0.3\n");
    let o = run("omega", &typo, dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("modulus.alpha"));
    let o = subact(&["gates", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn report_collects_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "zero.toml", ZERO_POTENTIAL);
    assert_eq!(run("omega", &cfg, dir.path()).status.code(), Some(0));
    assert_eq!(run("assumption-a", &cfg, dir.path()).status.code(), Some(0));
    let o = subact(&["report", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v = verdict(dir.path(), "report");
    assert_eq!(v["details"]["verdicts"].as_array().unwrap().len(), 2);
}
