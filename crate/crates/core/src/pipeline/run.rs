//! Stage orchestration.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::config::RunConfig;
use super::export::{
    build_manifest, sha256_hex, write_counts, write_json, write_slices, write_states, write_tomogram,
};
use crate::analysis::{analyze, bootstrap_discord, reconstruct_grid, BootstrapConfig};
use crate::error::{Error, Result};
use crate::experiment::simulate_strength;
use crate::measurement::ConditionalModel;
use crate::pulse::{target_envelope, MatchedPulses, PulseSummary};
use crate::sampling::{derive_seed, BinSpec};

/// Pipeline stages in execution order; each subcommand runs up to its stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    SynthPulses,
    Sample,
    Tomo,
    Reconstruct,
    Discord,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::SynthPulses => "synth-pulses",
            Stage::Sample => "sample",
            Stage::Tomo => "tomo",
            Stage::Reconstruct => "reconstruct",
            Stage::Discord => "discord",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StrengthSummary {
    pub lambda: f64,
    pub directory: String,
    pub shots: u64,
    pub clamped: u64,
    pub reconstructed_bins: usize,
    pub failed_bins: usize,
    pub xi_opt: Option<[f64; 2]>,
    pub gamma_opt: Option<f64>,
    pub gamma_avg: Option<f64>,
    pub r: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub pulses: Option<PulseSummary>,
    pub strengths: Vec<StrengthSummary>,
}

/// Directory name for one strength.
pub fn strength_dir(lambda: f64) -> String {
    format!("lambda_{lambda:.3}")
}

fn timed<T>(stage: &str, lambda: Option<f64>, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f();
    let secs = start.elapsed().as_secs_f64();
    match lambda {
        Some(l) => tracing::info!(stage, lambda = l, seconds = secs, "stage finished"),
        None => tracing::info!(stage, seconds = secs, "stage finished"),
    }
    out
}

#[derive(Serialize)]
struct PulsesFile {
    reference_strength: f64,
    summary: PulseSummary,
    uncompensated_mismatch: f64,
    /// Drive amplitude factor relative to the exported pulses, per strength.
    amplitude_scale: Vec<(f64, f64)>,
}

fn synth_pulses(cfg: &RunConfig, out: &Path, files: &mut Vec<PathBuf>) -> Result<PulseSummary> {
    let dir = out.join("pulses");
    std::fs::create_dir_all(&dir)?;
    let grid = cfg.envelope.grid();
    let target = target_envelope(&cfg.envelope.spec(), &grid)?;
    let alice = (cfg.cavities.alice.params(), cfg.jpc.alice.channel());
    let bob = (cfg.cavities.bob.params(), cfg.jpc.bob.channel());
    let pulses = MatchedPulses::synthesize(&target, (&alice.0, &alice.1), (&bob.0, &bob.1))?.normalized_to(1.0)?;
    let skipped = MatchedPulses::without_bob_compensation(&target, (&alice.0, &alice.1), (&bob.0, &bob.1))?;
    let summary = pulses.summary()?;
    for (name, w) in [
        ("target.csv", &pulses.target),
        ("drive_alice.csv", &pulses.drive_alice),
        ("drive_bob.csv", &pulses.drive_bob),
        ("signal_alice.csv", &pulses.signal_alice),
        ("signal_bob.csv", &pulses.signal_bob),
    ] {
        let path = dir.join(name);
        w.save(&path)?;
        files.push(path);
    }
    let path = dir.join("pulses.json");
    write_json(
        &path,
        &PulsesFile {
            reference_strength: 1.0,
            summary,
            uncompensated_mismatch: skipped.mismatch()?,
            amplitude_scale: cfg.lambdas.iter().map(|&l| (l, l.sqrt())).collect(),
        },
    )?;
    files.push(path);
    tracing::info!(mismatch = summary.mismatch, "pulses synthesised");
    Ok(summary)
}

fn selected_lambdas(cfg: &RunConfig, filter: Option<&[f64]>) -> Result<Vec<(usize, f64)>> {
    let all: Vec<(usize, f64)> = cfg.lambdas.iter().copied().enumerate().collect();
    let Some(filter) = filter else { return Ok(all) };
    for f in filter {
        if !cfg.lambdas.iter().any(|l| (l - f).abs() < 1e-9) {
            return Err(Error::Config(format!("lambda {f} from the filter is not in the config")));
        }
    }
    Ok(all.into_iter().filter(|(_, l)| filter.iter().any(|f| (l - f).abs() < 1e-9)).collect())
}

#[derive(Serialize)]
struct AnalysisFile {
    lambda: f64,
    xi_opt: [f64; 2],
    gamma_opt: f64,
    gamma_zero: f64,
    gamma_avg: f64,
    r: f64,
    reconstructed_bins: usize,
    reconstructed_shots: u64,
}

fn run_strength(
    cfg: &RunConfig,
    k: usize,
    lambda: f64,
    stage: Stage,
    out: &Path,
    files: &mut Vec<PathBuf>,
) -> Result<StrengthSummary> {
    let params = cfg.model_params(k);
    let name = strength_dir(lambda);
    let dir = out.join(&name);
    std::fs::create_dir_all(&dir)?;
    let seed = derive_seed(cfg.seed, &[lambda.to_bits()]);
    let spec = BinSpec::new(
        {
            let h = params.pointer_separation(lambda) + cfg.grid.span_sigma * params.sigma_m;
            (-h, h)
        },
        {
            let h = cfg.grid.span_sigma * params.sigma_m;
            (params.q_bar - h, params.q_bar + h)
        },
        cfg.grid.n_i,
        cfg.grid.n_q,
    )?;
    let mut data = timed("sample", Some(lambda), || {
        simulate_strength(lambda, &params, cfg.shots_total, &spec, cfg.tomography.readout_contrast, seed)
    })?;
    let mut summary = StrengthSummary {
        lambda,
        directory: name,
        shots: data.grid.total_shots(),
        clamped: data.histogram.clamped,
        reconstructed_bins: 0,
        failed_bins: 0,
        xi_opt: None,
        gamma_opt: None,
        gamma_avg: None,
        r: None,
    };
    let path = dir.join("histogram.csv");
    data.histogram.write_csv(std::io::BufWriter::new(std::fs::File::create(&path)?))?;
    files.push(path);
    if stage < Stage::Tomo {
        return Ok(summary);
    }

    let path = dir.join("counts.csv");
    write_counts(&path, &data.grid)?;
    files.push(path);
    if stage < Stage::Reconstruct {
        return Ok(summary);
    }

    let grid = &mut data.grid;
    summary.reconstructed_bins = timed("reconstruct", Some(lambda), || {
        reconstruct_grid(grid, cfg.tomography.readout_contrast, cfg.tomography.min_shots_per_bin)
    })?;
    summary.failed_bins = grid.bins.iter().filter(|b| b.failure.is_some()).count();
    let model = ConditionalModel::new(lambda, &params)?;
    for (file, writer) in [
        ("tomogram.csv", write_tomogram as fn(&Path, &crate::marginal::ConditionalGrid) -> Result<()>),
        ("states.json", write_states),
    ] {
        let path = dir.join(file);
        writer(&path, grid)?;
        files.push(path);
    }
    let path = dir.join("slices.csv");
    write_slices(&path, grid, &model)?;
    files.push(path);
    if stage < Stage::Discord || summary.reconstructed_bins == 0 {
        if summary.reconstructed_bins == 0 {
            tracing::warn!(lambda, "no bin reached the shot minimum; discord skipped");
        }
        return Ok(summary);
    }

    let opts = cfg.analysis_options();
    let point = timed("xi-fit", Some(lambda), || analyze(grid, &opts))?;
    let path = dir.join("analysis.json");
    write_json(
        &path,
        &AnalysisFile {
            lambda,
            xi_opt: point.fit.xi.as_array(),
            gamma_opt: point.fit.gamma_opt,
            gamma_zero: point.fit.gamma_zero,
            gamma_avg: point.fit.gamma_avg,
            r: point.r,
            reconstructed_bins: summary.reconstructed_bins,
            reconstructed_shots: grid.reconstructed_shots(),
        },
    )?;
    files.push(path);
    summary.xi_opt = Some(point.fit.xi.as_array());
    summary.gamma_opt = Some(point.fit.gamma_opt);
    summary.gamma_avg = Some(point.fit.gamma_avg);
    summary.r = Some(point.r);

    let base = cfg.bootstrap_config();
    let boot = BootstrapConfig { seed: derive_seed(base.seed, &[lambda.to_bits()]), ..base };
    let results = timed("bootstrap", Some(lambda), || bootstrap_discord(grid, &boot, &opts))?;
    let path = dir.join("discord.json");
    write_json(&path, &results)?;
    files.push(path);
    Ok(summary)
}

/// Run every stage up to and including `stage`, writing artifacts and a manifest.
pub fn run_stages(cfg: &RunConfig, stage: Stage, lambda_filter: Option<&[f64]>) -> Result<RunSummary> {
    let violations = cfg.validate();
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(Error::Config(list.join("; ")));
    }
    let out = cfg.output_dir.clone();
    std::fs::create_dir_all(&out)?;
    let mut files = Vec::new();

    let pulses = Some(timed("synth-pulses", None, || synth_pulses(cfg, &out, &mut files))?);
    let mut strengths = Vec::new();
    if stage > Stage::SynthPulses {
        for (k, lambda) in selected_lambdas(cfg, lambda_filter)? {
            strengths.push(run_strength(cfg, k, lambda, stage, &out, &mut files)?);
        }
        let path = out.join("summary.json");
        write_json(&path, &strengths)?;
        files.push(path);
    }

    let config_text = cfg.to_toml()?;
    let manifest = build_manifest(
        &out,
        &files,
        sha256_hex(config_text.as_bytes()),
        cfg.seed,
        stage.name(),
        strengths.iter().map(|s| s.lambda).collect(),
    )?;
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(RunSummary { output_dir: out, files, pulses, strengths })
}

/// Full pipeline for every configured strength.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunSummary> {
    run_stages(cfg, Stage::Discord, None)
}
