//! Run configuration. Every dimensional key carries its unit in the name.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{AnalysisOptions, BootstrapConfig};
use crate::discord::DiscordOptions;
use crate::error::{Error, Result};
use crate::marginal::XiSearch;
use crate::measurement::ModelParams;
use crate::pulse::{CavityParams, EnvelopeSpec, JpcChannel, TimeGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub c_t2_alice: f64,
    pub c_t2_bob: f64,
    pub c_tomo: f64,
    pub eta_a: f64,
    pub eta_b: f64,
    pub xi_a_rad: f64,
    pub xi_b_rad: f64,
    /// `Q_m` offset for every strength, in units of `sigma_m`.
    pub q_bar_sigma: f64,
    /// Optional per-strength offsets, parallel to `lambdas`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_bar_sigma_per_lambda: Option<Vec<f64>>,
    pub sigma_m: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let p = ModelParams::device();
        Self {
            c_t2_alice: p.c_t2_alice,
            c_t2_bob: p.c_t2_bob,
            c_tomo: p.c_tomo,
            eta_a: p.eta_a,
            eta_b: p.eta_b,
            xi_a_rad: p.xi_a,
            xi_b_rad: p.xi_b,
            q_bar_sigma: p.q_bar,
            q_bar_sigma_per_lambda: None,
            sigma_m: p.sigma_m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySection {
    pub kappa_over_2pi_hz: f64,
    pub chi_over_2pi_hz: f64,
    pub eta: f64,
}

impl CavitySection {
    pub fn params(&self) -> CavityParams {
        CavityParams { kappa: 2.0 * PI * self.kappa_over_2pi_hz, chi: 2.0 * PI * self.chi_over_2pi_hz, eta: self.eta }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityPair {
    pub alice: CavitySection,
    pub bob: CavitySection,
}

impl Default for CavityPair {
    fn default() -> Self {
        Self {
            alice: CavitySection { kappa_over_2pi_hz: 5.1e6, chi_over_2pi_hz: 3.8e6, eta: 1.0 },
            bob: CavitySection { kappa_over_2pi_hz: 3.8e6, chi_over_2pi_hz: 1.8e6, eta: 1.0 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JpcSection {
    pub gain: f64,
    pub kappa_over_2pi_hz: f64,
    pub delta_over_2pi_hz: f64,
}

impl JpcSection {
    pub fn channel(&self) -> JpcChannel {
        JpcChannel { gain: self.gain, kappa_jpc: 2.0 * PI * self.kappa_over_2pi_hz, delta: 2.0 * PI * self.delta_over_2pi_hz }
    }
}

impl Default for JpcSection {
    fn default() -> Self {
        Self { gain: 1.0, kappa_over_2pi_hz: 20e6, delta_over_2pi_hz: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct JpcPair {
    pub alice: JpcSection,
    pub bob: JpcSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeSection {
    pub amplitude: f64,
    pub t_slew_ns: f64,
    pub t_duration_ns: f64,
    pub dt_ns: f64,
    pub n_samples: usize,
}

impl Default for EnvelopeSection {
    fn default() -> Self {
        Self { amplitude: 1.0, t_slew_ns: 80.0, t_duration_ns: 800.0, dt_ns: 2.0, n_samples: 1 << 14 }
    }
}

impl EnvelopeSection {
    pub fn spec(&self) -> EnvelopeSpec {
        EnvelopeSpec { amplitude: self.amplitude, t_slew: self.t_slew_ns * 1e-9, t_duration: self.t_duration_ns * 1e-9 }
    }

    pub fn grid(&self) -> TimeGrid {
        TimeGrid { n: self.n_samples, dt: self.dt_ns * 1e-9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n_i: usize,
    pub n_q: usize,
    /// Margin beyond the outer pointer means, units of `sigma_m`.
    pub span_sigma: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { n_i: 51, n_q: 51, span_sigma: 5.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomographySection {
    /// Extra symmetric readout contrast applied at readout and inverted in
    /// reconstruction. Contrast already contained in the conditional state
    /// (`c_tomo`) is not applied twice.
    pub readout_contrast: f64,
    pub min_shots_per_bin: u64,
}

impl Default for TomographySection {
    fn default() -> Self {
        Self { readout_contrast: 1.0, min_shots_per_bin: 50 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapSection {
    pub n_resamples: usize,
    pub percentile: f64,
    pub min_records: u64,
}

impl Default for BootstrapSection {
    fn default() -> Self {
        let d = BootstrapConfig::default();
        Self { n_resamples: d.n_resamples, percentile: d.percentile, min_records: d.min_records }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XiSearchSection {
    pub half_range_rad: f64,
    pub step_rad: f64,
}

impl Default for XiSearchSection {
    fn default() -> Self {
        let d = XiSearch::default();
        Self { half_range_rad: d.half_range, step_rad: d.step }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub lambdas: Vec<f64>,
    pub shots_total: usize,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub cavities: CavityPair,
    #[serde(default)]
    pub jpc: JpcPair,
    #[serde(default)]
    pub envelope: EnvelopeSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub tomography: TomographySection,
    #[serde(default)]
    pub bootstrap: BootstrapSection,
    #[serde(default)]
    pub xi_search: XiSearchSection,
    #[serde(default)]
    pub discord: DiscordOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            output_dir: PathBuf::from("out"),
            lambdas: vec![0.0, 0.3, 0.6, 1.0, 1.3, 6.0],
            shots_total: 4_500_000,
            model: ModelSection::default(),
            cavities: CavityPair::default(),
            jpc: JpcPair::default(),
            envelope: EnvelopeSection::default(),
            grid: GridSection::default(),
            tomography: TomographySection::default(),
            bootstrap: BootstrapSection::default(),
            xi_search: XiSearchSection::default(),
            discord: DiscordOptions::default(),
        }
    }
}

/// One invariant violation, addressed by its dotted config path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Model parameters for strength index `k`.
    pub fn model_params(&self, k: usize) -> ModelParams {
        let m = &self.model;
        let q_bar = m.q_bar_sigma_per_lambda.as_ref().and_then(|v| v.get(k).copied()).unwrap_or(m.q_bar_sigma);
        ModelParams {
            c_t2_alice: m.c_t2_alice,
            c_t2_bob: m.c_t2_bob,
            c_tomo: m.c_tomo,
            eta_a: m.eta_a,
            eta_b: m.eta_b,
            xi_a: m.xi_a_rad,
            xi_b: m.xi_b_rad,
            q_bar,
            sigma_m: m.sigma_m,
        }
    }

    pub fn analysis_options(&self) -> AnalysisOptions {
        AnalysisOptions {
            c_readout: self.tomography.readout_contrast,
            discord: self.discord,
            xi_search: XiSearch {
                half_range: self.xi_search.half_range_rad,
                step: self.xi_search.step_rad,
                ..XiSearch::default()
            },
        }
    }

    pub fn bootstrap_config(&self) -> BootstrapConfig {
        BootstrapConfig {
            n_resamples: self.bootstrap.n_resamples,
            percentile: self.bootstrap.percentile,
            seed: crate::sampling::derive_seed(self.seed, &[0x626f_6f74]),
            min_records: self.bootstrap.min_records,
        }
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |path: &str, message: String| out.push(Violation { path: path.to_string(), message });

        for (field, msg) in self.model_params(0).violations() {
            let key = match field {
                "xi_a" => "xi_a_rad",
                "xi_b" => "xi_b_rad",
                "q_bar" => "q_bar_sigma",
                other => other,
            };
            push(&format!("model.{key}"), msg);
        }
        if let Some(v) = &self.model.q_bar_sigma_per_lambda {
            if v.len() != self.lambdas.len() {
                push(
                    "model.q_bar_sigma_per_lambda",
                    format!("has {} entries but there are {} lambdas", v.len(), self.lambdas.len()),
                );
            }
            if v.iter().any(|x| !x.is_finite()) {
                push("model.q_bar_sigma_per_lambda", "entries must be finite".into());
            }
        }

        if self.lambdas.is_empty() {
            push("lambdas", "at least one strength is required".into());
        }
        for (k, l) in self.lambdas.iter().enumerate() {
            if !(l.is_finite() && *l >= 0.0) {
                push(&format!("lambdas[{k}]"), format!("{l} must be finite and non-negative"));
            }
        }
        if self.lambdas.windows(2).any(|w| w[0] > w[1]) {
            let mut sorted = self.lambdas.clone();
            sorted.sort_by(f64::total_cmp);
            push("lambdas", format!("not sorted ascending; use {sorted:?}"));
        }
        if self.shots_total == 0 {
            push("shots_total", "must be at least 1".into());
        }

        for (name, cav) in [("alice", &self.cavities.alice), ("bob", &self.cavities.bob)] {
            if let Err(e) = cav.params().validate() {
                push(&format!("cavities.{name}"), e.to_string());
            }
        }
        for (name, jpc) in [("alice", &self.jpc.alice), ("bob", &self.jpc.bob)] {
            if let Err(e) = jpc.channel().validate() {
                push(&format!("jpc.{name}"), e.to_string());
            }
        }
        let env = &self.envelope;
        if !(env.t_slew_ns > 0.0) {
            push("envelope.t_slew_ns", format!("{} must be positive", env.t_slew_ns));
        }
        if !(env.t_duration_ns > 0.0) {
            push("envelope.t_duration_ns", format!("{} must be positive", env.t_duration_ns));
        }
        if !(env.dt_ns > 0.0) {
            push("envelope.dt_ns", format!("{} must be positive", env.dt_ns));
        }
        if env.n_samples < 2 || !env.n_samples.is_power_of_two() {
            push("envelope.n_samples", format!("{} must be a power of two", env.n_samples));
        } else if env.dt_ns > 0.0 && (env.n_samples as f64 * env.dt_ns / 2.0) < env.t_duration_ns {
            push("envelope.n_samples", "time grid shorter than twice the pulse duration".into());
        }

        if self.grid.n_i == 0 {
            push("grid.n_i", "must be at least 1".into());
        }
        if self.grid.n_q == 0 {
            push("grid.n_q", "must be at least 1".into());
        }
        if !(self.grid.span_sigma > 0.0) {
            push("grid.span_sigma", format!("{} must be positive", self.grid.span_sigma));
        }
        let rc = self.tomography.readout_contrast;
        if !(rc > 0.0 && rc <= 1.0) {
            push("tomography.readout_contrast", format!("{rc} outside (0, 1]"));
        }
        for (field, msg) in self.bootstrap_config().violations() {
            push(&format!("bootstrap.{field}"), msg);
        }
        if !(self.xi_search.half_range_rad > 0.0) {
            push("xi_search.half_range_rad", "must be positive".into());
        }
        if !(self.xi_search.step_rad > 0.0 && self.xi_search.step_rad <= self.xi_search.half_range_rad) {
            push("xi_search.step_rad", "must be positive and no larger than the half range".into());
        }
        if self.discord.n_theta < 2 || self.discord.n_phi < 1 || self.discord.n_refine < 1 {
            push("discord", "grid needs n_theta ≥ 2, n_phi ≥ 1, n_refine ≥ 1".into());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid_and_round_trips() {
        let cfg = RunConfig::default();
        assert!(cfg.validate().is_empty(), "{:?}", cfg.validate());
        let back = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn reports_paths() {
        let mut cfg = RunConfig::default();
        cfg.model.eta_a = 1.3;
        cfg.lambdas = vec![1.0, 0.0, 0.5];
        let v = cfg.validate();
        assert!(v.iter().any(|x| x.path == "model.eta_a"));
        let lam = v.iter().find(|x| x.path == "lambdas").unwrap();
        assert!(lam.message.contains("[0.0, 0.5, 1.0]"), "{}", lam.message);
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = "seed = 1\noutput_dir = \"o\"\nlambdas = [0.0]\nshots_total = 10\nbogus = 3\n";
        assert!(RunConfig::from_toml(text).is_err());
    }
}
