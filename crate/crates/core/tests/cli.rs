use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dynact::fitting::{fit_kind, mirror_augment, FunctionKind};
use dynact::simulation::{outlier_points, run_scenario, SimulationConfig};
use serde_json::Value;
use tempfile::TempDir;

fn dynact(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynact"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
}

fn manifest_artifacts(dir: &Path) -> Vec<String> {
    let m = read_json(&dir.join("manifest.json"));
    let mut names: Vec<String> = m["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    names.push("manifest.json".into());
    names.sort();
    names
}

#[test]
fn verify_writes_report() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("v");
    let o = dynact(&[
        "verify",
        "--seed",
        "1",
        "--trials",
        "100",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&out.join("verification.json"));
    assert_eq!(report["seed"], 1);
    assert_eq!(report["verdict"], true);
    let checks = report["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 5);
    for c in checks {
        for key in [
            "name",
            "trials",
            "max_abs_error",
            "max_rel_error",
            "tolerance",
            "passed",
        ] {
            assert!(c.get(key).is_some(), "missing {key}");
        }
    }
    assert_eq!(manifest_artifacts(&out), listing(&out));
}

#[test]
fn verify_usage_and_io_errors() {
    assert_eq!(code(&dynact(&["verify", "--trials", "0"])), 2);
    assert_eq!(code(&dynact(&["bogus"])), 2);
    let tmp = TempDir::new().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let bad = blocker.join("sub");
    let o = dynact(&["verify", "--trials", "2", "--out", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(!o.stderr.is_empty());
}

#[test]
fn simulate_outputs() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("sim");
    let o = dynact(&["simulate", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        listing(&out),
        [
            "frame_s0.svg",
            "frame_s1.svg",
            "frame_s2.svg",
            "frame_s9.svg",
            "manifest.json",
            "scenario.csv"
        ]
    );
    assert_eq!(manifest_artifacts(&out), listing(&out));
    let csv = fs::read_to_string(out.join("scenario.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("s,channel,x,y,is_outlier"));
    assert_eq!(lines.count(), 1000);
    assert_eq!(csv.lines().filter(|l| l.ends_with(",1")).count(), 9);
    assert!(!csv.contains('\r'));

    let base = tmp.path().join("base");
    let o = dynact(&["simulate", "--s-max", "0", "--out", base.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        listing(&base),
        ["frame_s0.svg", "manifest.json", "scenario.csv"]
    );

    for bad in [
        vec!["simulate", "--channels", "1"],
        vec!["simulate", "--sigma", "0"],
        vec!["simulate", "--step", "-5"],
        vec!["simulate", "--s-max", "2", "--frames", "3"],
    ] {
        let mut args = bad.clone();
        let dir = tmp.path().join("bad");
        args.extend(["--out", dir.to_str().unwrap()]);
        assert_eq!(code(&dynact(&args)), 2, "{bad:?}");
    }
}

#[test]
fn fit_from_scenario_matches_in_process_pipeline() {
    let tmp = TempDir::new().unwrap();
    let sim = tmp.path().join("sim");
    assert_eq!(
        code(&dynact(&[
            "simulate",
            "--seed",
            "3",
            "--out",
            sim.to_str().unwrap()
        ])),
        0
    );
    let csv = sim.join("scenario.csv");

    let scenario = run_scenario(&SimulationConfig::with_seed(3)).unwrap();
    let data = mirror_augment(&outlier_points(&scenario).unwrap(), 100).unwrap();

    for (kind, flag) in [(FunctionKind::DyIsru, "dyisru"), (FunctionKind::DyT, "dyt")] {
        let out = tmp.path().join(flag);
        let o = dynact(&[
            "fit",
            "--input",
            csv.to_str().unwrap(),
            "--kind",
            flag,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(manifest_artifacts(&out), listing(&out));
        let got = read_json(&out.join(format!("fit_{flag}.json")));
        let want = fit_kind(kind, &data).unwrap();
        assert_eq!(got["function_kind"], flag);
        assert_eq!(got["parameter"].as_f64().unwrap(), want.parameter);
        assert_eq!(got["sse"].as_f64().unwrap(), want.sse);
        assert_eq!(got["mae"].as_f64().unwrap(), want.mae);
        assert_eq!(got["n_points"], 18);
        let svg = fs::read_to_string(out.join(format!("fit_{flag}.svg"))).unwrap();
        assert!(svg.contains("<polyline"));
        match kind {
            FunctionKind::DyIsru => {
                assert!((150.0..=600.0).contains(&want.parameter));
                assert!(want.mae < 0.02);
            }
            FunctionKind::DyT => {
                assert!((0.03..=0.07).contains(&want.parameter));
                assert!((0.15..=0.6).contains(&want.mae));
            }
        }
    }
}

#[test]
fn fit_input_errors() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o");
    let write = |name: &str, body: &str| {
        let p = tmp.path().join(name);
        fs::write(&p, body).unwrap();
        p.to_str().unwrap().to_string()
    };
    let run = |input: &str, extra: &[&str]| {
        let mut args = vec![
            "fit",
            "--input",
            input,
            "--kind",
            "dyt",
            "--out",
            out.to_str().unwrap(),
        ];
        args.extend_from_slice(extra);
        dynact(&args)
    };

    let empty = write("empty.csv", "");
    assert_eq!(code(&run(&empty, &["--channels", "100"])), 2);

    let malformed = write("bad.csv", "x,y\n1,0.5\noops,0.1\n");
    let o = run(&malformed, &["--channels", "100"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 3"));

    let plain = write("xy.csv", "x,y\n10,5\n20,8\n");
    assert_eq!(code(&run(&plain, &[])), 2);
    assert_eq!(code(&run(&plain, &["--channels", "100"])), 0);
    assert_eq!(code(&run(&plain, &["--channels", "10"])), 2);

    let flat = write("flat.csv", "x,y\n1,0\n");
    assert_eq!(code(&run(&flat, &["--channels", "100"])), 1);

    let missing = tmp.path().join("nope.csv");
    assert_eq!(
        code(&run(missing.to_str().unwrap(), &["--channels", "100"])),
        3
    );
}

#[test]
fn figures_are_complete_and_deterministic() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(
        code(&dynact(&[
            "figures",
            "--seed",
            "5",
            "--out",
            a.to_str().unwrap()
        ])),
        0
    );
    assert_eq!(
        code(&dynact(&[
            "figures",
            "--seed",
            "5",
            "--out",
            b.to_str().unwrap()
        ])),
        0
    );
    let names = listing(&a);
    assert!(names.iter().filter(|n| n.ends_with(".svg")).count() >= 6);
    assert_eq!(manifest_artifacts(&a), names);
    for n in names.iter().filter(|n| n.ends_with(".csv")) {
        assert_eq!(
            fs::read(a.join(n)).unwrap(),
            fs::read(b.join(n)).unwrap(),
            "{n}"
        );
    }

    let fig1 = fs::read_to_string(a.join("fig1_activations.csv")).unwrap();
    let ys: Vec<f64> = fig1
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(ys.iter().all(|y| y.abs() <= 7.0));
    assert!(ys.iter().any(|y| y.abs() > 6.99));
    let manifest = read_json(&a.join("manifest.json"));
    assert_eq!(manifest["config"]["fig1"]["extrema"][1], 7.0);
    assert_eq!(manifest["seed"], 5);
}

#[test]
fn json_flag_prints_summary() {
    let tmp = TempDir::new().unwrap();
    let o = dynact(&[
        "verify",
        "--trials",
        "3",
        "--json",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["report"]["verdict"], true);
}
