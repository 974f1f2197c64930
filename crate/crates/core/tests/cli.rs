//! End-to-end tests of the `nnd` binary: exit codes and the full
//! simulate -> aggregate -> analyze -> train -> predict pipeline.

use std::path::Path;
use std::process::{Command, Output};

use nnd::telemetry::parse_dataset_csv;

const SCENARIO: &str = "\
duration = 3600
sample_period = 10
base_cpu = 40
traffic_rate = 100
noise_shape = many-small-vms:20
contention_gain = 0.15
sensor_noise_std = 8
seed = 7
noise_schedule = 300:900:0.6;1500:2400:0.45;2700:3300:0.7
";

fn nnd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nnd"))
        .args(args)
        .output()
        .expect("failed to spawn nnd")
}

fn run_ok(args: &[&str]) -> String {
    let out = nnd(args);
    assert!(
        out.status.success(),
        "command {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn path_str(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn exit_codes() {
    assert_eq!(nnd(&["--help"]).status.code(), Some(0));
    // no subcommand / unknown subcommand are usage errors
    assert_eq!(nnd(&[]).status.code(), Some(2));
    assert_eq!(nnd(&["frobnicate"]).status.code(), Some(2));
    // simulate requires exactly one scenario source
    assert_eq!(nnd(&["simulate", "--out", "x.csv"]).status.code(), Some(2));
    // runtime failure (missing input file) is exit 1
    let out = nnd(&["aggregate", "--input", "/nonexistent.csv", "--out", "/tmp/x"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn pipeline_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let config = path_str(d, "scenario.conf");
    std::fs::write(&config, SCENARIO).unwrap();

    let raw = path_str(d, "raw.csv");
    let effective = path_str(d, "effective.conf");
    run_ok(&[
        "simulate",
        "--config",
        &config,
        "--out",
        &raw,
        "--emit-config",
        &effective,
    ]);
    // ground truth lands next to the telemetry by default
    assert!(d.join("raw.csv.truth.json").exists());
    // the effective config round-trips the input scenario settings
    let echoed = std::fs::read_to_string(&effective).unwrap();
    assert!(echoed.contains("seed = 7"));
    assert!(echoed.contains("noise_shape = many-small-vms:20"));

    let dataset_path = path_str(d, "dataset.csv");
    run_ok(&["aggregate", "--input", &raw, "--out", &dataset_path]);
    let windows_path = path_str(d, "windows.csv");
    run_ok(&[
        "aggregate",
        "--input",
        &raw,
        "--out",
        &windows_path,
        "--keep-noise",
    ]);

    let dataset = parse_dataset_csv(&std::fs::read_to_string(&dataset_path).unwrap()).unwrap();
    assert_eq!(dataset.instances.len(), 120); // 3600 s / 30 s windows
    let positives = dataset.instances.iter().filter(|i| i.label == 1).count();
    assert!(
        (50..=80).contains(&positives),
        "noise intervals cover ~58% of the run, got {positives}/120 positive windows"
    );

    let report_csv = path_str(d, "report.csv");
    let report = run_ok(&["analyze", "--input", &windows_path, "--csv", &report_csv]);
    assert!(report.contains("CPU") && report.contains("BW out") && report.contains("MIC"));
    let report_file = std::fs::read_to_string(&report_csv).unwrap();
    assert!(report_file.starts_with("stat,cpu,bw_in,bw_out"));
    assert_eq!(report_file.lines().count(), 3); // header + correlation + mic

    // train both model families and predict back on the training data
    for (model_path, extra) in [
        (path_str(d, "forest.json"), vec!["--model", "forest", "--trees", "15"]),
        (path_str(d, "svm.json"), vec!["--model", "svm", "--c", "4"]),
    ] {
        let mut args = vec!["train", "--input", &dataset_path, "--out", &model_path];
        args.extend(extra.iter().copied());
        run_ok(&args);

        let pred_path = path_str(d, "pred.csv");
        run_ok(&[
            "predict",
            "--model",
            &model_path,
            "--input",
            &dataset_path,
            "--out",
            &pred_path,
        ]);
        let pred = parse_dataset_csv(&std::fs::read_to_string(&pred_path).unwrap()).unwrap();
        assert_eq!(pred.instances.len(), dataset.instances.len());
        let agree = pred
            .instances
            .iter()
            .zip(&dataset.instances)
            .filter(|(p, t)| {
                assert_eq!(p.features, t.features);
                p.label == t.label
            })
            .count();
        assert!(
            agree >= 110,
            "training-set accuracy should be high, got {agree}/120"
        );
    }

    let eval = run_ok(&[
        "evaluate",
        "--input",
        &dataset_path,
        "--model",
        "forest",
        "--trees",
        "10",
        "--k",
        "5",
    ]);
    assert!(eval.contains("precision =") && eval.contains("f1 ="), "{eval}");

    let curve_path = path_str(d, "curve.csv");
    run_ok(&[
        "sweep",
        "--input",
        &dataset_path,
        "--param",
        "trees",
        "--values",
        "1,5",
        "--k",
        "3",
        "--out",
        &curve_path,
    ]);
    let curve = std::fs::read_to_string(&curve_path).unwrap();
    let mut lines = curve.lines();
    assert_eq!(lines.next(), Some("param,precision,recall,f1"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let config = path_str(d, "scenario.conf");
    std::fs::write(&config, SCENARIO).unwrap();

    for name in ["a", "b"] {
        let raw = path_str(d, &format!("{name}.csv"));
        run_ok(&["simulate", "--config", &config, "--out", &raw]);
        let dataset = path_str(d, &format!("{name}.dataset.csv"));
        run_ok(&["aggregate", "--input", &raw, "--out", &dataset]);
        let model = path_str(d, &format!("{name}.model.json"));
        run_ok(&[
            "train", "--input", &dataset, "--out", &model, "--model", "forest", "--trees", "15",
        ]);
    }
    for suffix in ["csv", "csv.truth.json", "dataset.csv", "model.json"] {
        let a = std::fs::read(d.join(format!("a.{suffix}"))).unwrap();
        let b = std::fs::read(d.join(format!("b.{suffix}"))).unwrap();
        assert_eq!(a, b, "output a.{suffix} differs between identical runs");
    }
}
