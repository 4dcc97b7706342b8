use std::path::Path;
use std::process::{Command, Output};

fn xylab(args: &[&str], workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_xylab"));
    cmd.args(args).env_remove("XYLAB_WORKERS");
    if let Some(w) = workers {
        cmd.env("XYLAB_WORKERS", w);
    }
    cmd.output().unwrap()
}

fn correlations_config(out: &Path) -> String {
    format!(
        r#"{{
  "ensemble": {{"n": 40, "mu": {{"kind": "constant", "value": 0.05}},
               "gamma": {{"kind": "constant", "value": 0.0}},
               "nu": {{"kind": "uniform", "lo": -1.0, "hi": 1.0}},
               "base_seed": 9, "realizations": 4}},
  "experiment": {{"kind": "correlations", "pairs": 10, "seed": 2,
                  "multipoint": {{"x": [3, 7], "y": [4, 9]}}}},
  "time_grid": {{"T": 2.0, "dt": 0.5}},
  "output_dir": {:?}
}}"#,
        out.display().to_string()
    )
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn rerun_is_byte_identical_across_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (k, workers) in ["1", "3"].iter().enumerate() {
        let out = tmp.path().join(format!("out{k}"));
        let cfg = tmp.path().join(format!("c{k}.json"));
        // identical bytes so the config hash agrees too
        let text = correlations_config(&tmp.path().join("out"));
        std::fs::write(&cfg, text).unwrap();
        let o = xylab(&["run", cfg.to_str().unwrap()], Some(workers));
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::rename(tmp.path().join("out"), &out).unwrap();
        outputs.push(read_all(&out));
    }
    assert_eq!(outputs[0], outputs[1]);
    let names: Vec<_> = outputs[0].iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["multipoint.csv", "summary.json"]);
}

#[test]
fn malformed_config_names_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.json");
    let text = correlations_config(tmp.path()).replace("\"realizations\": 4", "\"realizations\": -4");
    std::fs::write(&cfg, text).unwrap();
    let o = xylab(&["run", cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("ensemble.realizations"), "{err}");
}

#[test]
fn invalid_region_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.json");
    let text = format!(
        r#"{{"ensemble": {{"n": 20, "mu": {{"kind": "constant", "value": 0.05}},
             "gamma": {{"kind": "constant", "value": 0.0}},
             "nu": {{"kind": "uniform", "lo": -1.0, "hi": 1.0}},
             "base_seed": 1, "realizations": 1}},
           "experiment": {{"kind": "transport_particle", "s1": [[5, 5]], "s2": [[1, 30]]}},
           "output_dir": {:?}}}"#,
        tmp.path().display().to_string()
    );
    std::fs::write(&cfg, text).unwrap();
    let o = xylab(&["run", cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("experiment.s2"));
}

#[test]
fn oracle_check_passes_on_small_chains() {
    let o = xylab(&["oracle-check", "--n", "4", "--seed", "42", "--realizations", "2"], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("PASS [criterion 1] spectrum_gap"));
    assert!(!stdout.contains("FAIL"));
}

#[test]
fn fit_recovers_rate_from_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("p.csv");
    let mut text = String::from("distance,mean,stderr,count\n");
    for d in 0..30 {
        text += &format!("{d},{:e},0,10\n", 3.0 * (-0.4 * d as f64).exp());
    }
    std::fs::write(&csv, text).unwrap();
    let o = xylab(&["fit", csv.to_str().unwrap(), "--min-distance", "5"], None);
    assert!(o.status.success());
    let fit: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((fit["eta"].as_f64().unwrap() - 0.4).abs() < 1e-9, "{fit}");
    assert!((fit["C"].as_f64().unwrap() - 3.0).abs() < 1e-8, "{fit}");
}

#[test]
fn help_documents_csv_columns() {
    let o = xylab(&["run", "--help"], None);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("distance, mean, stderr, count"));
    assert!(text.contains("XYLAB_WORKERS"));
}
