use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bpswall"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().args(args).arg("--out-dir").arg(dir).arg("--quiet").output().expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {}", String::from_utf8_lossy(&o.stderr)))
}

#[test]
fn cs_wall_energies() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["cs-wall", "--kappa", "0.3333333333", "--phi0", "0.5", "--n", "801"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = read_json(&dir.path().join("cs-wall.json"));
    let e = s["energy_analytic"].as_f64().unwrap();
    assert!((e - 3.0).abs() < 1e-8, "{e}");
    assert!((s["energy_quadrature"].as_f64().unwrap() - e).abs() < 1e-8);
    let t = s["truncated_energy"]["value"].as_f64().unwrap();
    assert!((t - 2.998492403).abs() < 1e-8, "{t}");
    assert_eq!(s["config"]["n"], 801);
    assert!(s["config"]["l"].is_number());

    let csv = std::fs::read_to_string(dir.path().join("cs-wall.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,u,du,phi,dphi,A,A0,energy_density"));
    assert_eq!(lines.count(), 801);
}

#[test]
fn stdout_echoes_the_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin().args(["jp", "--n", "401", "--out-dir"]).arg(dir.path()).output().unwrap();
    assert!(o.status.success());
    let echoed: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(echoed, read_json(&dir.path().join("jp.json")));
}

#[test]
fn outputs_are_deterministic() {
    let cases: [&[&str]; 3] = [
        &["ew-wall", "--n", "801", "--restarts", "1"],
        &["u2-wall", "--n", "801"],
        &["cs-lump", "--form", "unsquared", "--n", "801"],
    ];
    for args in cases {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        assert!(run(a.path(), args).status.success(), "{args:?}");
        assert!(run(b.path(), args).status.success(), "{args:?}");
        for ext in ["csv", "json"] {
            let f = format!("{}.{ext}", args[0]);
            assert_eq!(std::fs::read(a.path().join(&f)).unwrap(), std::fs::read(b.path().join(&f)).unwrap(), "{f}");
        }
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["cs-wall", "--kappa", "-1"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"]["kind"], "validation");

    let o = run(dir.path(), &["cs-wall", "--no-such-flag", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["exit_code"], 1);

    let o = run(dir.path(), &["cs-lump", "--form", "squared"]);
    assert_eq!(o.status.code(), Some(1));

    // artifacts are written before a convergence failure is reported
    let o = run(dir.path(), &["u2-wall", "--n", "401", "--max-iter", "3", "--name", "capped"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["kind"], "convergence");
    assert!(dir.path().join("capped.csv").exists());
    assert_eq!(read_json(&dir.path().join("capped.json"))["optimizer"]["converged"], false);

    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let o = run(&blocker.join("sub"), &["jp", "--n", "101"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_json(&o)["error"]["kind"], "io");

    let o = bin().arg("--help").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn inadmissible_ew_names_the_inequality() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["ew-wall", "--alpha1", "-3"]);
    assert_eq!(o.status.code(), Some(1));
    let msg = stderr_json(&o)["error"]["message"].as_str().unwrap().to_string();
    assert!(msg.contains("α₁+β₁ > 0"), "{msg}");
    assert!(!dir.path().join("ew-wall.json").exists());
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"subcommand": "cs-wall", "kappa": 2.0, "phi0": 0.3, "n": 401}"#).unwrap();
    let o = bin().args(["cs-wall", "--phi0", "0.4", "--quiet", "--config"]).arg(&cfg).arg("--out-dir").arg(dir.path()).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = read_json(&dir.path().join("cs-wall.json"));
    assert_eq!(s["config"]["kappa"], 2.0);
    assert_eq!(s["config"]["phi0"], 0.4);
    assert_eq!(s["config"]["n"], 401);

    // the embedded config reproduces the run
    let replay = dir.path().join("replay");
    std::fs::create_dir(&replay).unwrap();
    let embedded = replay.join("c.json");
    std::fs::write(&embedded, s["config"].to_string()).unwrap();
    let o = bin().args(["cs-wall", "--quiet", "--config"]).arg(&embedded).arg("--out-dir").arg(&replay).output().unwrap();
    assert!(o.status.success());
    assert_eq!(std::fs::read(replay.join("cs-wall.csv")).unwrap(), std::fs::read(dir.path().join("cs-wall.csv")).unwrap());

    std::fs::write(&cfg, r#"{"subcommand": "jp"}"#).unwrap();
    let o = bin().args(["cs-wall", "--quiet", "--config"]).arg(&cfg).arg("--out-dir").arg(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(1));

    std::fs::write(&cfg, r#"{"kapa": 1.0}"#).unwrap();
    let o = bin().args(["cs-wall", "--quiet", "--config"]).arg(&cfg).arg("--out-dir").arg(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr_json(&o)["error"]["message"].as_str().unwrap().contains("kapa"));

    let o = bin().args(["cs-wall", "--quiet", "--config"]).arg(dir.path().join("missing.json")).arg("--out-dir").arg(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn energy_curve_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["cs-energy-curve", "--kappa", "1", "--kappa", "2", "--points", "21"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = read_json(&dir.path().join("cs-energy-curve.json"));
    for c in s["curves"].as_array().unwrap() {
        assert_eq!(c["increasing_exact"], true);
    }
    assert_eq!(s["decreasing_in_kappa_exact"], true);
    let csv = std::fs::read_to_string(dir.path().join("cs-energy-curve.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 21);
}

#[test]
fn sweep_matches_single_runs() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["sweep", "--over", "cs-wall", "--param", "kappa=1,2", "--param", "phi0=0.2,0.5", "--jobs", "2", "--n", "201"])
        .output()
        .unwrap();
    // shared flags belong to the subcommand, not the sweep
    assert_eq!(o.status.code(), Some(1));

    let cfg = dir.path().join("base.json");
    std::fs::write(&cfg, r#"{"n": 201}"#).unwrap();
    let o = bin()
        .args(["sweep", "--over", "cs-wall", "--param", "kappa=1,2", "--param", "phi0=0.2,0.5", "--jobs", "2", "--quiet", "--name", "s"])
        .arg("--config")
        .arg(&cfg)
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let index = read_json(&dir.path().join("s.json"));
    let runs = index["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 4);
    assert_eq!(runs[1]["params"]["kappa"], 1);
    assert_eq!(runs[1]["params"]["phi0"], 0.5);

    let single = tempfile::tempdir().unwrap();
    assert!(run(single.path(), &["cs-wall", "--kappa", "1", "--phi0", "0.5", "--n", "201"]).status.success());
    for ext in ["csv", "json"] {
        assert_eq!(
            std::fs::read(dir.path().join(format!("s_0001.{ext}"))).unwrap(),
            std::fs::read(single.path().join(format!("cs-wall.{ext}"))).unwrap(),
            "{ext}"
        );
    }

    let o = run(dir.path(), &["sweep", "--over", "nope", "--param", "a=1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_reports_the_worst_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["sweep", "--over", "cs-wall", "--param", "kappa=1,-1", "--param", "n=101"]);
    assert_eq!(o.status.code(), Some(1));
    let index = read_json(&dir.path().join("sweep.json"));
    assert_eq!(index["runs"][0]["exit_code"], 0);
    assert_eq!(index["runs"][1]["exit_code"], 1);
    assert!(dir.path().join("sweep_0000.csv").exists());
}
