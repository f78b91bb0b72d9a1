//! End-to-end runs of the `tecoord` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};
use tecoord_cli::export::{ADMM_TRACE, BUS_AGGREGATES, COS, PRICES, SCHEDULES, VOLTAGES, WINDOW_AGGREGATES};
use tecoord_cli::manifest::MANIFEST_FILE;
use tecoord_cli::plots::{AGGREGATE_PLOT, COS_PLOT, PRICE_PLOT, VOLTAGE_PLOT};
use tecoord_cli::RunManifest;

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/data/three_bus.toml");

fn tecoord(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tecoord"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_variant(dir: &Path, name: &str, edit: impl Fn(String) -> String) -> PathBuf {
    let text = edit(fs::read_to_string(FIXTURE).unwrap());
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run_into(scenario: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "--scenario",
        scenario.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    tecoord(&args)
}

fn lines(p: &Path) -> Vec<String> {
    fs::read_to_string(p).unwrap().lines().map(str::to_owned).collect()
}

#[test]
fn uncongested_run_exits_zero_without_cos_plot() {
    let tmp = tempfile::tempdir().unwrap();
    let s = write_variant(tmp.path(), "roomy.toml", |t| {
        t.replace("transformer_capacity_kw = 9.0", "transformer_capacity_kw = 100.0")
            .replace("v_max_pu = 1.1", "v_max_pu = 1.2")
    });
    let out = tmp.path().join("out");
    let o = run_into(&s, &out, &["--emit-plots"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [AGGREGATE_PLOT, PRICE_PLOT] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert!(!out.join(COS_PLOT).exists());
    assert!(!out.join(VOLTAGE_PLOT).exists());
    assert_eq!(lines(&out.join(COS)).len(), 1);
    // two prosumers over eight hours
    assert_eq!(lines(&out.join(SCHEDULES)).len(), 1 + 2 * 8);
}

#[test]
fn invalid_scenario_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_into(Path::new(FIXTURE), &tmp.path().join("out"), &["--eps", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("eps"));
    assert!(!tmp.path().join("out").exists());

    let broken = write_variant(tmp.path(), "broken.toml", |t| t.replace("bus_id = 3", "bus_id = 30"));
    let o = run_into(&broken, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_scenario_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_into(&tmp.path().join("nope.toml"), &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unresolved_windows_exit_three_and_are_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run_into(Path::new(FIXTURE), &out, &["--max-te-rounds", "1", "--emit-plots"]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("window"), "{err}");
    let m = RunManifest::read(&out.join(MANIFEST_FILE)).unwrap();
    assert!(m.windows.iter().any(|w| w.flagged));
    assert!(out.join(COS_PLOT).exists());
    assert!(lines(&out.join(COS)).len() > 1);
    assert!(lines(&out.join(ADMM_TRACE)).len() > 1);
}

#[test]
fn scenario_without_prosumers_writes_headers_only() {
    let tmp = tempfile::tempdir().unwrap();
    let s = write_variant(tmp.path(), "empty.toml", |t| {
        t[..t.find("[[prosumers]]").unwrap()].to_string()
    });
    let out = tmp.path().join("out");
    let o = run_into(&s, &out, &["--emit-plots"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [SCHEDULES, COS, ADMM_TRACE] {
        assert_eq!(lines(&out.join(f)).len(), 1, "{f}");
    }
    // bus tables still cover every (hour, bus), all zero
    let agg = lines(&out.join(BUS_AGGREGATES));
    assert_eq!(agg.len(), 1 + 8 * 3);
    assert!(agg[1..].iter().all(|l| l.ends_with(",0,0")), "{:?}", &agg[..3]);
    assert_eq!(lines(&out.join(VOLTAGES)).len(), 1 + 8 * 3);
    assert!(!out.join(COS_PLOT).exists());
}

#[test]
fn manifest_records_inputs_and_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run_into(Path::new(FIXTURE), &out, &["--window-hours", "3", "--rho", "0.5"]);
    assert!(matches!(o.status.code(), Some(0 | 3)));
    let m = RunManifest::read(&out.join(MANIFEST_FILE)).unwrap();
    let want = hex::encode(Sha256::digest(fs::read(FIXTURE).unwrap()));
    assert_eq!(m.scenario_sha256, want);
    assert_eq!(m.scenario_name, "three_bus");
    assert_eq!(m.config.window_hours, 3);
    assert_eq!(m.config.rho, 0.5);
    assert_eq!(m.windows.len(), 8);
    assert_eq!(m.windows[7].start_hour, 7);
    for f in [SCHEDULES, BUS_AGGREGATES, VOLTAGES, COS, ADMM_TRACE, WINDOW_AGGREGATES, PRICES] {
        assert!(m.outputs.iter().any(|p| p.ends_with(f)), "{f}");
        assert!(out.join(f).exists());
    }
}

#[test]
fn csv_headers_are_stable() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    run_into(Path::new(FIXTURE), &out, &[]);
    let head = |f: &str| lines(&out.join(f))[0].clone();
    assert_eq!(head(SCHEDULES), "hour,entity,net_kw,soc");
    assert_eq!(head(COS), "window,hour,bus,lambda,nd,adder,te_round");
    assert_eq!(
        head(PRICES),
        "hour,aggregator,dam,buy,sell,up_regulation,down_regulation"
    );
}
