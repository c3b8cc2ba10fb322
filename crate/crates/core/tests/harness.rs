use std::path::Path;

use flatlyap_core::harness::{
    build_preset, catalog, hypergeometric_slots, parse_config, replay, run_in, LoadedConfig, PresetParams, EXPERIMENTS,
};
use flatlyap_core::Error;

fn loaded(text: &str) -> LoadedConfig {
    LoadedConfig {
        config: parse_config(text).unwrap(),
        text: text.to_string(),
    }
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

const UNITARY: &str = r#"
[representation]
preset = "unitary_rank2"

[estimator]
seed = 21
horizon = 20.0
n_paths = 40
n_batches = 5

[output]
dir = "unitary"
"#;

const WEIGHT1: &str = r#"
[representation]
preset = "weight1_vhs"

[estimator]
seed = 22
horizon = 20.0
n_paths = 40
n_batches = 5

[output]
dir = "weight1"
"#;

#[test]
fn every_catalog_preset_builds_or_asks_for_parameters() {
    let names: Vec<&str> = catalog().iter().map(|p| p.name).collect();
    for required in [
        "unitary_rank2",
        "fuchsian_genus2",
        "schottky_rank2",
        "weight1_vhs",
        "weight2_1k1",
        "hypergeometric_sp4",
    ] {
        assert!(names.contains(&required), "{required} missing");
    }
    for info in catalog() {
        let built = build_preset(info.name, &PresetParams::default());
        if info.needs_parameters {
            assert!(matches!(built, Err(Error::Config(_))), "{}", info.name);
        } else {
            let p = built.unwrap_or_else(|e| panic!("{}: {e}", info.name));
            assert_eq!(p.rep.n_generators(), p.surface.n_generators(), "{}", info.name);
        }
    }
    assert_eq!(hypergeometric_slots().len(), 14);
    assert!(build_preset("no_such_preset", &PresetParams::default()).is_err());
}

#[test]
fn unitary_spectrum_csv_is_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("out");
    run_in(&loaded(UNITARY), "spectrum", &dir).unwrap();
    let (header, rows) = read_csv(&dir.join("spectrum.csv"));
    assert_eq!(header, ["index", "lambda", "ci_half_width"]);
    assert_eq!(rows.len(), 2);
    for row in &rows {
        let lambda: f64 = row[1].parse().unwrap();
        assert!(lambda.abs() < 1e-12, "{row:?}");
    }
    assert!(dir.join("run_record.json").exists());
    assert!(dir.join("summary.txt").exists());
    assert!(!dir.join("PARTIAL").exists());
    assert!(!dir.join(".lock").exists());
}

#[test]
fn weight1_degree_report_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("out");
    let record = run_in(&loaded(WEIGHT1), "degree_report", &dir).unwrap();
    let (header, rows) = read_csv(&dir.join("degree_report.csv"));
    assert_eq!(
        header,
        ["k", "lambda_sum", "lambda_sum_ci", "degree", "pi_deg", "delta", "gap", "verdict"]
    );
    assert_eq!(rows.len(), 1);
    let num = |i: usize| rows[0][i].parse::<f64>().unwrap();
    assert_eq!(rows[0][3], "1/4/pi");
    assert!((num(4) - 0.25).abs() < 1e-15);
    assert_eq!(num(5), num(1) - num(4));
    assert!(["equality-plausible", "strict-inequality", "inconclusive"].contains(&rows[0][7].as_str()));
    assert_eq!(record.experiment, "degree_report");
}

#[test]
fn runs_are_byte_identical_and_replayable() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let cfg = loaded(UNITARY);
    run_in(&cfg, "spectrum", &a).unwrap();
    run_in(&cfg, "spectrum", &b).unwrap();
    for name in ["spectrum.csv", "symmetry.csv", "runlog.jsonl", "run_record.json"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
    let outcome = replay(&a.join("runlog.jsonl"), 3).unwrap();
    assert!(outcome.matches, "{outcome:?}");
}

#[test]
fn unknown_experiment_is_rejected() {
    assert!(EXPERIMENTS.contains(&"all"));
    let tmp = tempfile::tempdir().unwrap();
    assert!(matches!(run_in(&loaded(UNITARY), "bogus", tmp.path()), Err(Error::Config(_))));
}
