use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use joint_discord::pipeline::export::sha256_hex;
use joint_discord::pipeline::{run_pipeline, run_stages, RunConfig, Stage};

const TINY: &str = r#"
seed = 99
output_dir = "unused"
lambdas = [0.0, 1.3]
shots_total = 6000

[grid]
n_i = 5
n_q = 5
span_sigma = 3.0

[bootstrap]
n_resamples = 4
percentile = 95.0
min_records = 50

[xi_search]
half_range_rad = 1.0
step_rad = 0.1
"#;

fn tiny(out: &Path) -> RunConfig {
    let mut cfg = RunConfig::from_toml(TINY).unwrap();
    cfg.output_dir = out.to_path_buf();
    cfg
}

fn workspace_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

#[test]
fn shipped_configs_validate() {
    for name in ["configs/device.toml", "configs/quick.toml"] {
        let cfg = RunConfig::load(&workspace_file(name)).unwrap();
        assert!(cfg.validate().is_empty(), "{name}: {:?}", cfg.validate());
    }
    let device = RunConfig::load(&workspace_file("configs/device.toml")).unwrap();
    assert_eq!(device.shots_total, 4_500_000);
    assert_eq!((device.grid.n_i, device.grid.n_q), (51, 51));
}

#[test]
fn violations_name_their_paths() {
    let mut cfg = RunConfig::from_toml(TINY).unwrap();
    cfg.model.eta_a = 1.3;
    cfg.lambdas = vec![1.0, 0.3];
    let v = cfg.validate();
    assert!(v.iter().any(|x| x.path == "model.eta_a"));
    let unsorted = v.iter().find(|x| x.path == "lambdas").unwrap();
    assert!(unsorted.message.contains("[0.3, 1.0]"), "{}", unsorted.message);
    assert!(RunConfig::from_toml("seed = 1\nbogus = 2\n").is_err());
}

#[test]
fn runs_are_byte_identical_and_manifest_complete() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(dir.path());
    let summary = run_pipeline(&cfg).unwrap();
    let first = snapshot(dir.path());
    run_pipeline(&cfg).unwrap();
    assert_eq!(first, snapshot(dir.path()));

    let manifest: serde_json::Value = serde_json::from_slice(&first["manifest.json"]).unwrap();
    let listed: BTreeMap<String, String> = manifest["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| (e["path"].as_str().unwrap().to_string(), e["sha256"].as_str().unwrap().to_string()))
        .collect();
    for (path, bytes) in &first {
        if path == "manifest.json" {
            continue;
        }
        assert_eq!(listed.get(path), Some(&sha256_hex(bytes)), "{path}");
    }
    assert_eq!(listed.len(), first.len() - 1);
    assert_eq!(manifest["seed"], 99);

    for s in &summary.strengths {
        assert_eq!(s.shots, cfg.shots_total as u64);
        let hist = &first[&format!("{}/histogram.csv", s.directory)];
        let mut rdr = csv::Reader::from_reader(hist.as_slice());
        let total: u64 = rdr.records().map(|r| r.unwrap()[2].parse::<u64>().unwrap()).sum();
        assert_eq!(total, cfg.shots_total as u64);
        let counts = &first[&format!("{}/counts.csv", s.directory)];
        let mut rdr = csv::Reader::from_reader(counts.as_slice());
        let records: u64 =
            rdr.records().map(|r| (4..8).map(|k| r.as_ref().unwrap()[k].parse::<u64>().unwrap()).sum::<u64>()).sum();
        assert_eq!(records, cfg.shots_total as u64);
    }
}

#[test]
fn lambda_filter_reproduces_the_full_run() {
    let full = tempfile::tempdir().unwrap();
    let part = tempfile::tempdir().unwrap();
    run_stages(&tiny(full.path()), Stage::Reconstruct, None).unwrap();
    run_stages(&tiny(part.path()), Stage::Reconstruct, Some(&[1.3])).unwrap();
    let (a, b) = (snapshot(full.path()), snapshot(part.path()));
    for name in ["histogram.csv", "counts.csv", "tomogram.csv", "states.json"] {
        let key = format!("lambda_1.300/{name}");
        assert_eq!(a[&key], b[&key], "{key}");
    }
    assert!(!b.keys().any(|k| k.starts_with("lambda_0.000")));
    assert!(run_stages(&tiny(part.path()), Stage::Sample, Some(&[0.5])).is_err());
}

#[test]
fn zero_strength_band_contains_zero() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(dir.path());
    cfg.lambdas = vec![0.0];
    cfg.shots_total = 100_000;
    run_pipeline(&cfg).unwrap();
    let text = std::fs::read_to_string(dir.path().join("lambda_0.000/discord.json")).unwrap();
    let rows: Vec<serde_json::Value> = serde_json::from_str(&text).unwrap();
    assert!(!rows.is_empty());
    for r in rows {
        let band = r["ci_a"].as_array().unwrap();
        // discord is non-negative, so the band can only approach zero from above
        assert!(band[0].as_f64().unwrap() < 0.02, "{r}");
        assert!(band[1].as_f64().unwrap() < 0.05, "{r}");
    }
}

#[test]
fn cli_validates_and_runs() {
    let exe = env!("CARGO_BIN_EXE_joint-discord");
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("tiny.toml");
    std::fs::write(&good, TINY).unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, TINY.replace("lambdas = [0.0, 1.3]", "lambdas = [1.3, 0.0]")).unwrap();

    let ok = Command::new(exe).args(["validate", "--config"]).arg(&good).output().unwrap();
    assert!(ok.status.success());
    let fail = Command::new(exe).args(["validate", "--config"]).arg(&bad).output().unwrap();
    assert!(!fail.status.success());
    assert!(String::from_utf8_lossy(&fail.stdout).contains("lambdas"));

    let out = dir.path().join("out");
    let run = Command::new(exe)
        .args(["sample", "--config"])
        .arg(&good)
        .arg("--out")
        .arg(&out)
        .args(["--seed", "5", "--workers", "1", "--lambda-filter", "1.3"])
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(out.join("lambda_1.300/histogram.csv").exists());
    assert!(!out.join("lambda_1.300/counts.csv").exists());
    assert!(out.join("pulses/drive_bob.csv").exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["stage"], "sample");
}
