//! Artifact writers and the manifest.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::marginal::ConditionalGrid;
use crate::measurement::{ClosedFormPaulis, ConditionalModel};
use crate::quantum::{PauliLabel, PauliVector};
use crate::sampling::BinIndex;
use crate::tomography::TomoSetting;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn pauli_header() -> Vec<String> {
    PauliLabel::all().map(|l| l.to_string()).collect()
}

/// Per-bin tomography counts, nine rows per populated bin.
pub fn write_counts(path: &Path, grid: &ConditionalGrid) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    wtr.write_record(["bin_i_center", "bin_q_center", "setting_a", "setting_b", "n_gg", "n_ge", "n_eg", "n_ee"])?;
    let settings = TomoSetting::all();
    for b in grid.bins.iter().filter(|b| b.shots > 0) {
        let centre = grid.spec.center(b.index);
        for (s, row) in settings.iter().zip(&b.counts.counts) {
            let mut rec = vec![centre.i_m.to_string(), centre.q_m.to_string(), s.rot_a.to_string(), s.rot_b.to_string()];
            rec.extend(row.iter().map(|n| n.to_string()));
            wtr.write_record(&rec)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Conditional tomogram: bin coordinates, shots and all 16 Pauli components.
pub fn write_tomogram(path: &Path, grid: &ConditionalGrid) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let mut header = vec!["bin_i_center".to_string(), "bin_q_center".to_string(), "shots".to_string()];
    header.extend(pauli_header());
    wtr.write_record(&header)?;
    for (b, s) in grid.reconstructed() {
        let centre = grid.spec.center(b.index);
        let mut rec = vec![centre.i_m.to_string(), centre.q_m.to_string(), b.shots.to_string()];
        rec.extend(s.pauli_expectations().components().iter().map(|v| v.to_string()));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct StateRecord<'a> {
    bin_i_center: f64,
    bin_q_center: f64,
    shots: u64,
    pauli: &'a PauliVector,
    eigenvalues: [f64; 4],
}

#[derive(Serialize)]
struct FailureRecord<'a> {
    bin_i_center: f64,
    bin_q_center: f64,
    shots: u64,
    error: &'a str,
}

#[derive(Serialize)]
struct StatesFile<'a> {
    lambda: f64,
    states: Vec<StateRecord<'a>>,
    failures: Vec<FailureRecord<'a>>,
}

pub fn write_states(path: &Path, grid: &ConditionalGrid) -> Result<()> {
    let paulis: Vec<(BinIndex, u64, PauliVector, [f64; 4])> = grid
        .reconstructed()
        .map(|(b, s)| (b.index, b.shots, s.pauli_expectations(), s.eigenvalues()))
        .collect();
    let states = paulis
        .iter()
        .map(|(idx, shots, pv, ev)| {
            let c = grid.spec.center(*idx);
            StateRecord { bin_i_center: c.i_m, bin_q_center: c.q_m, shots: *shots, pauli: pv, eigenvalues: *ev }
        })
        .collect();
    let failures = grid
        .bins
        .iter()
        .filter_map(|b| {
            b.failure.as_deref().map(|e| {
                let c = grid.spec.center(b.index);
                FailureRecord { bin_i_center: c.i_m, bin_q_center: c.q_m, shots: b.shots, error: e }
            })
        })
        .collect();
    write_json(path, &StatesFile { lambda: grid.lambda, states, failures })
}

/// Tidy cuts through the tomogram at `I_m = 0` and `Q_m = 0`, with theory.
pub fn write_slices(path: &Path, grid: &ConditionalGrid, model: &ConditionalModel) -> Result<()> {
    let spec = &grid.spec;
    let nearest = |n: usize, centre: &dyn Fn(usize) -> f64| {
        (0..n).min_by(|&a, &b| centre(a).abs().total_cmp(&centre(b).abs())).unwrap_or(0)
    };
    let i0 = nearest(spec.n_i, &|k| spec.i_center(k));
    let q0 = nearest(spec.n_q, &|k| spec.q_center(k));
    let mut wtr = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    wtr.write_record(["cut", "lambda", "i_m", "q_m", "component", "measured", "theory", "theory_source", "shots"])?;
    let cuts: [(&str, Vec<BinIndex>); 2] = [
        ("i_m=0", (0..spec.n_q).map(|q| BinIndex { i: i0, q }).collect()),
        ("q_m=0", (0..spec.n_i).map(|i| BinIndex { i, q: q0 }).collect()),
    ];
    for (cut, bins) in cuts {
        for idx in bins {
            let b = grid.bin(idx);
            let Some(state) = &b.state else { continue };
            let centre = spec.center(idx);
            let measured = state.pauli_expectations();
            let theory_state = model.state(centre)?;
            let theory = theory_state.pauli_expectations();
            for label in PauliLabel::all().skip(1) {
                let name = label.to_string();
                let source = if ClosedFormPaulis::LABELS.contains(&name.as_str()) { "closed_form" } else { "model_completed" };
                wtr.write_record([
                    cut.to_string(),
                    grid.lambda.to_string(),
                    centre.i_m.to_string(),
                    centre.q_m.to_string(),
                    name,
                    measured.get(label).to_string(),
                    theory.get(label).to_string(),
                    source.to_string(),
                    b.shots.to_string(),
                ])?;
            }
        }
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub config_sha256: String,
    pub seed: u64,
    pub stage: String,
    pub lambdas: Vec<f64>,
    pub files: Vec<ManifestEntry>,
}

/// Hash every emitted file, keyed by its path relative to `root`.
pub fn build_manifest(root: &Path, files: &[PathBuf], config_sha256: String, seed: u64, stage: &str, lambdas: Vec<f64>) -> Result<Manifest> {
    let mut entries = BTreeMap::new();
    for f in files {
        let bytes = std::fs::read(f)?;
        let rel = f.strip_prefix(root).unwrap_or(f).to_string_lossy().replace('\\', "/");
        entries.insert(rel.clone(), ManifestEntry { path: rel, sha256: sha256_hex(&bytes), bytes: bytes.len() as u64 });
    }
    Ok(Manifest { config_sha256, seed, stage: stage.to_string(), lambdas, files: entries.into_values().collect() })
}
