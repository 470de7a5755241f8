use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lvdyn::config::AnalysisConfig;
use lvdyn::Subsystem;

fn lvdyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lvdyn")).args(args).env_remove("LVDYN_SEED").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn published_parameters_give_published_equilibria() {
    let v = json(&lvdyn(&["analyze", "--params-from-paper", "ai-labor", "--sobol-n", "64"]));
    let p = &v["equilibria"]["interior"];
    assert!((p[0].as_f64().unwrap() - 186.78).abs() < 0.01);
    assert!((p[1].as_f64().unwrap() - 44021.09).abs() < 0.01);
    let interior = v["stability"].as_array().unwrap().iter().find(|s| s["equilibrium"] == "interior").unwrap();
    assert_eq!(interior["classification"], "stable_node");
    assert!(v["incomplete"].is_null());
}

#[test]
fn published_block_is_verbatim() {
    let v = json(&lvdyn(&["analyze", "--params-from-paper", "ai-physical", "--sobol-n", "64"]));
    let p = &v["published"];
    assert_eq!(p["regression"]["intercept1"].to_string(), "0.021224");
    assert_eq!(p["regression"]["cross1"].to_string(), "0.000012");
    assert_eq!(p["discrete"]["alpha1"].to_string(), "47.116");
    assert_eq!(p["discrete"]["cross2"].to_string(), "0.219529");
    assert_eq!(p["continuous"]["a1"].to_string(), "3.852613");
    assert_eq!(p["continuous"]["b22"].to_string(), "-0.000126");
    assert_eq!(v["parameter_source"], "published");
}

#[test]
fn exit_codes() {
    let o = lvdyn(&["analyze", "--fixture", "ai-physical", "--sobol-n", "100"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("[config]"));

    let o = lvdyn(&["fit", "--input", "/nonexistent.csv", "--x-col", "a", "--y-col", "b"]);
    assert_eq!(o.status.code(), Some(4));

    let dir = tempfile::tempdir().unwrap();
    let gap = dir.path().join("gap.csv");
    fs::write(&gap, "year,a,b\n2016,1,2\n2017,2,3\n2018,3,4\n2020,4,5\n2021,5,6\n").unwrap();
    let o = lvdyn(&["fit", "--input", gap.to_str().unwrap(), "--x-col", "a", "--y-col", "b"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("[load]") && err.contains("2018"), "{err}");

    let flat = dir.path().join("flat.csv");
    fs::write(&flat, "year,a,b\n2000,1,1\n2001,1,1\n2002,1,1\n2003,1,1\n").unwrap();
    let o = lvdyn(&["fit", "--input", flat.to_str().unwrap(), "--x-col", "a", "--y-col", "b"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("[fit]"));
}

#[test]
fn seed_falls_back_to_environment() {
    let run = |seed: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_lvdyn"))
            .args(["sobol", "--fixture", "ai-labor", "--sobol-n", "64"])
            .env("LVDYN_SEED", seed)
            .output()
            .unwrap();
        json(&o)
    };
    let a = run("5");
    assert_eq!(a["seed"], 5);
    assert_ne!(a["outputs"], run("6")["outputs"]);
}

#[test]
fn sobol_csv_has_one_row_per_parameter_and_output() {
    let o = lvdyn(&["sobol", "--params-from-paper", "ai-physical", "--sobol-n", "64", "--format", "csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("parameter,output,S_i,S_Ti,S_i_clipped,S_Ti_clipped"));
    assert_eq!(lines.count(), 12);
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(str::to_owned).collect()).collect()
}

#[test]
fn phase_export_brackets_the_equilibrium() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("phase");
    let o = lvdyn(&["phase", "--params-from-paper", "ai-physical", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in
        ["nullclines.csv", "signgrid.csv", "vectorfield.csv", "README.md", "trajectory_ode.csv", "trajectory_map.csv"]
    {
        assert!(out.join(f).exists(), "{f}");
    }

    // Nullcline samples cross each other between adjacent x samples around x*.
    let rows = read_csv(&out.join("nullclines.csv"));
    let pick = |name: &str| -> Vec<(f64, f64)> {
        rows.iter().filter(|r| r[0] == name).map(|r| (r[4].parse().unwrap(), r[5].parse().unwrap())).collect()
    };
    let (dx, dy) = (pick("dx"), pick("dy"));
    let crossing = dx
        .windows(2)
        .zip(dy.windows(2))
        .find(|(a, b)| (a[0].1 - b[0].1).signum() != (a[1].1 - b[1].1).signum())
        .expect("nullclines cross inside the box");
    let (x0, x1) = (crossing.0[0].0, crossing.0[1].0);
    assert!(x0 <= 198.18 && 198.18 <= x1, "crossing between {x0} and {x1}");

    let grid = read_csv(&out.join("signgrid.csv"));
    assert_eq!(grid.len(), 25 * 25);
    for region in ["I", "II", "III", "IV"] {
        assert!(grid.iter().any(|r| r[4] == region), "region {region} absent");
    }
}

#[test]
fn report_writes_every_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report");
    let o = lvdyn(&["report", "--fixture", "ai-labor", "--sobol-n", "64", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["report.json", "layers.csv", "sobol.csv", "phase/nullclines.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(v["parameter_source"], "fitted");
    assert_eq!(v["mape"]["mode"], "one-step-ahead");
    assert!(v["mape"]["free_running"]["x"].is_number());
    let expected_hash = lvdyn::report::sha256_hex(Subsystem::AiLabor.csv().as_bytes());
    assert_eq!(v["provenance"]["input_sha256"], expected_hash.as_str());
}

#[test]
fn reordered_columns_give_the_same_fit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("swapped.csv");
    let mut text = String::from("physical_capital,year,ai_capital\n");
    for line in Subsystem::AiPhysical.csv().lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        text.push_str(&format!("{},{},{}\n", f[2], f[0], f[1]));
    }
    fs::write(&path, text).unwrap();
    let args = |input: &str| {
        vec![
            "fit".to_owned(),
            "--input".into(),
            input.into(),
            "--x-col".into(),
            "ai_capital".into(),
            "--y-col".into(),
            "physical_capital".into(),
        ]
    };
    let fixture = dir.path().join("fixture.csv");
    fs::write(&fixture, Subsystem::AiPhysical.csv()).unwrap();
    let a = json(&Command::new(env!("CARGO_BIN_EXE_lvdyn")).args(args(path.to_str().unwrap())).output().unwrap());
    let b = json(&Command::new(env!("CARGO_BIN_EXE_lvdyn")).args(args(fixture.to_str().unwrap())).output().unwrap());
    assert_eq!(a["layers"], b["layers"]);
}

#[test]
fn library_pipeline_is_deterministic() {
    let mut cfg = AnalysisConfig::for_fixture(Subsystem::AiPhysical);
    cfg.sobol.as_mut().unwrap().seed = 11;
    let a = lvdyn::analyze(&cfg).unwrap().report.to_json();
    let b = lvdyn::analyze(&cfg).unwrap().report.to_json();
    assert_eq!(a, b);
}
