//! Temporal mode matching of the two cavity readout channels.
//!
//! Spectra use the forward transform `X[ω] = Σ x(t) e^{-iωt}` on a uniform,
//! zero-centred time grid, so a time derivative maps to `iω`. All rates are
//! angular (rad/s) and times are in seconds.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quantum::{c, C64};

/// Vacuum fluctuation per quadrature of the output field.
pub const SIGMA_Q: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    pub kappa: f64,
    pub chi: f64,
    pub eta: f64,
}

impl CavityParams {
    pub fn new(kappa: f64, chi: f64, eta: f64) -> Result<Self> {
        let p = Self { kappa, chi, eta };
        p.validate()?;
        Ok(p)
    }

    /// Construct from ordinary frequencies in Hz (`κ/2π`, `χ/2π`).
    pub fn from_hz(kappa_hz: f64, chi_hz: f64, eta: f64) -> Result<Self> {
        Self::new(2.0 * PI * kappa_hz, 2.0 * PI * chi_hz, eta)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0) {
            return Err(invalid("kappa", format!("{} must be positive", self.kappa)));
        }
        if self.chi == 0.0 || !self.chi.is_finite() {
            return Err(invalid("chi", "dispersive shift must be finite and nonzero"));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(invalid("eta", format!("{} outside (0, 1]", self.eta)));
        }
        Ok(())
    }

    /// Cavity A of the characterised device, unit collection efficiency.
    pub fn alice() -> Self {
        Self::from_hz(5.1e6, 3.8e6, 1.0).expect("valid constants")
    }

    /// Cavity B of the characterised device, unit collection efficiency.
    pub fn bob() -> Self {
        Self::from_hz(3.8e6, 1.8e6, 1.0).expect("valid constants")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JpcChannel {
    pub gain: f64,
    pub kappa_jpc: f64,
    pub delta: f64,
}

impl JpcChannel {
    pub fn new(gain: f64, kappa_jpc: f64, delta: f64) -> Result<Self> {
        let ch = Self { gain, kappa_jpc, delta };
        ch.validate()?;
        Ok(ch)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gain > 0.0) {
            return Err(invalid("gain", format!("{} must be positive", self.gain)));
        }
        if !(self.kappa_jpc > 0.0) {
            return Err(invalid("kappa_jpc", format!("{} must be positive", self.kappa_jpc)));
        }
        if !self.delta.is_finite() {
            return Err(invalid("delta", "detuning must be finite"));
        }
        Ok(())
    }
}

impl Default for JpcChannel {
    /// Unit gain, 20 MHz bandwidth, on resonance.
    fn default() -> Self {
        Self { gain: 1.0, kappa_jpc: 2.0 * PI * 20e6, delta: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSpec {
    pub amplitude: f64,
    pub t_slew: f64,
    pub t_duration: f64,
}

impl EnvelopeSpec {
    pub fn new(amplitude: f64, t_slew: f64, t_duration: f64) -> Result<Self> {
        if !(t_slew > 0.0) {
            return Err(invalid("t_slew", format!("{t_slew} must be positive")));
        }
        if !(t_duration > 0.0) {
            return Err(invalid("t_duration", format!("{t_duration} must be positive")));
        }
        Ok(Self { amplitude, t_slew, t_duration })
    }

    /// 80 ns slew, 800 ns plateau, unit amplitude.
    pub fn device() -> Self {
        Self { amplitude: 1.0, t_slew: 80e-9, t_duration: 800e-9 }
    }
}

/// Uniform, zero-centred sampling grid: `t_k = (k − n/2)·dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub n: usize,
    pub dt: f64,
}

impl TimeGrid {
    pub fn new(n: usize, dt: f64) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(invalid("n", format!("{n} must be a power of two ≥ 2")));
        }
        if !(dt > 0.0) {
            return Err(invalid("dt", format!("{dt} must be positive")));
        }
        Ok(Self { n, dt })
    }

    /// 2¹⁴ samples at 2 ns.
    pub fn standard() -> Self {
        Self { n: 1 << 14, dt: 2e-9 }
    }

    pub fn t0(&self) -> f64 {
        -((self.n / 2) as f64) * self.dt
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0() + k as f64 * self.dt
    }

    /// Angular frequency of FFT bin `k`, wrapped to `[-π/dt, π/dt)`.
    pub fn omega(&self, k: usize) -> f64 {
        let n = self.n as i64;
        let k = k as i64;
        let signed = if k < n / 2 { k } else { k - n };
        2.0 * PI * signed as f64 / (self.n as f64 * self.dt)
    }

    pub fn omegas(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.omega(k)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexWaveform {
    pub samples: Vec<C64>,
    pub dt: f64,
    /// Time of the first sample.
    pub t0: f64,
}

impl ComplexWaveform {
    pub fn new(samples: Vec<C64>, dt: f64, t0: f64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(invalid("samples", "waveform needs at least two samples"));
        }
        if !(dt > 0.0) {
            return Err(invalid("dt", format!("{dt} must be positive")));
        }
        Ok(Self { samples, dt, t0 })
    }

    pub fn zeros(grid: &TimeGrid) -> Self {
        Self { samples: vec![C64::new(0.0, 0.0); grid.n], dt: grid.dt, t0: grid.t0() }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.len(), self.dt)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { samples: self.samples.iter().map(|s| s * factor).collect(), ..self.clone() }
    }

    pub fn conj(&self) -> Self {
        Self { samples: self.samples.iter().map(|s| s.conj()).collect(), ..self.clone() }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.len() != other.len() || self.dt != other.dt || self.t0 != other.t0 {
            return Err(invalid("waveform", "waveforms are not on a common time grid"));
        }
        Ok(())
    }

    /// Columns `t_seconds, re, im`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["t_seconds", "re", "im"])?;
        for (k, s) in self.samples.iter().enumerate() {
            wtr.write_record([self.time(k).to_string(), s.re.to_string(), s.im.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            t_seconds: f64,
            re: f64,
            im: f64,
        }
        let mut rdr = csv::Reader::from_reader(r);
        let rows: Vec<Row> = rdr.deserialize().collect::<std::result::Result<_, _>>()?;
        if rows.len() < 2 {
            return Err(invalid("samples", "waveform needs at least two samples"));
        }
        let dt = rows[1].t_seconds - rows[0].t_seconds;
        for pair in rows.windows(2) {
            let step = pair[1].t_seconds - pair[0].t_seconds;
            if (step - dt).abs() > 1e-6 * dt.abs() {
                return Err(invalid("t_seconds", "samples are not uniformly spaced"));
            }
        }
        Self::new(rows.iter().map(|r| c(r.re, r.im)).collect(), dt, rows[0].t_seconds)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

fn forward(samples: &[C64]) -> Vec<C64> {
    let mut buf = samples.to_vec();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

fn inverse(spectrum: &[C64]) -> Vec<C64> {
    let mut buf = spectrum.to_vec();
    FftPlanner::new().plan_fft_inverse(buf.len()).process(&mut buf);
    let scale = 1.0 / buf.len() as f64;
    buf.iter_mut().for_each(|x| *x *= scale);
    buf
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QubitLevel {
    Ground,
    Excited,
}

/// Intracavity field response `α[ω]` to a drive spectrum.
pub fn cavity_alpha(grid: &TimeGrid, cavity: &CavityParams, drive: &[C64], level: QubitLevel) -> Vec<C64> {
    let shift = match level {
        QubitLevel::Ground => -cavity.chi / 2.0,
        QubitLevel::Excited => cavity.chi / 2.0,
    };
    drive
        .iter()
        .enumerate()
        .map(|(k, &eps)| {
            let den = c(-cavity.kappa / 2.0, shift - grid.omega(k));
            eps * (cavity.kappa / 2.0) / den
        })
        .collect()
}

pub fn jpc_transfer(grid: &TimeGrid, ch: &JpcChannel) -> Vec<C64> {
    let num = c(ch.kappa_jpc / 2.0, ch.delta) * ch.gain;
    (0..grid.n).map(|k| num / c(ch.kappa_jpc / 2.0, ch.delta + grid.omega(k))).collect()
}

/// `√(κη)·H[ω]·(α_g[ω] − α_e[ω])/ε[ω]`, drive-to-signal transfer.
pub fn signal_transfer(grid: &TimeGrid, cavity: &CavityParams, ch: &JpcChannel) -> Vec<C64> {
    let h = jpc_transfer(grid, ch);
    let pre = (cavity.kappa * cavity.eta).sqrt();
    (0..grid.n)
        .map(|k| {
            let w = grid.omega(k);
            let kk = c(cavity.kappa, 2.0 * w);
            let cav = c(0.0, 2.0 * cavity.kappa * cavity.chi) / (kk * kk + cavity.chi * cavity.chi);
            h[k] * cav * pre
        })
        .collect()
}

pub fn target_envelope(spec: &EnvelopeSpec, grid: &TimeGrid) -> Result<ComplexWaveform> {
    let half_span = grid.n as f64 * grid.dt / 2.0;
    if half_span < spec.t_duration {
        return Err(invalid(
            "grid",
            format!("grid half-span {half_span:e} s shorter than pulse duration {:e} s", spec.t_duration),
        ));
    }
    let samples = (0..grid.n)
        .map(|k| {
            let t = grid.time(k);
            let ts = spec.t_slew;
            let half = spec.t_duration / 2.0;
            c(spec.amplitude / 2.0 * (((t + half) / ts).tanh() - ((t - half) / ts).tanh()), 0.0)
        })
        .collect();
    ComplexWaveform::new(samples, grid.dt, grid.t0())
}

/// Drive whose filtered signal difference regenerates `target`.
pub fn synthesize_drive(target: &ComplexWaveform, cavity: &CavityParams, ch: &JpcChannel) -> Result<ComplexWaveform> {
    cavity.validate()?;
    ch.validate()?;
    let grid = target.grid()?;
    let transfer = signal_transfer(&grid, cavity, ch);
    let spectrum = forward(&target.samples);
    let t_max = transfer.iter().map(|t| t.norm()).fold(0.0, f64::max);
    let f_max = spectrum.iter().map(|f| f.norm()).fold(0.0, f64::max);
    let reg = 1e-6 * t_max;
    let mut drive = Vec::with_capacity(grid.n);
    for (k, (f, t)) in spectrum.iter().zip(&transfer).enumerate() {
        if f.norm() >= 1e-9 * f_max && t.norm() < reg {
            return Err(Error::IllConditioned { magnitude: t.norm(), floor: reg, omega: grid.omega(k) });
        }
        drive.push(f * t.conj() / (t.norm_sqr() + reg * reg));
    }
    ComplexWaveform::new(inverse(&drive), target.dt, target.t0)
}

/// Output signal difference `S(t) = √(κη)(α'_g − α'_e)` after the amplifier.
pub fn signal_difference(cavity: &CavityParams, ch: &JpcChannel, drive: &ComplexWaveform) -> Result<ComplexWaveform> {
    let grid = drive.grid()?;
    let transfer = signal_transfer(&grid, cavity, ch);
    let spectrum: Vec<C64> = forward(&drive.samples).iter().zip(&transfer).map(|(e, t)| e * t).collect();
    ComplexWaveform::new(inverse(&spectrum), drive.dt, drive.t0)
}

fn trapezoid(values: impl Iterator<Item = f64>, dt: f64) -> f64 {
    let v: Vec<f64> = values.collect();
    if v.len() < 2 {
        return 0.0;
    }
    let inner: f64 = v.iter().sum();
    dt * (inner - 0.5 * (v[0] + v[v.len() - 1]))
}

/// `√(∫|S_A − S_B|² / ∫|S_A + S_B|²)`.
pub fn mismatch(sa: &ComplexWaveform, sb: &ComplexWaveform) -> Result<f64> {
    sa.check_compatible(sb)?;
    let pairs = || sa.samples.iter().zip(&sb.samples);
    let num = trapezoid(pairs().map(|(a, b)| (a - b).norm_sqr()), sa.dt);
    let den = trapezoid(pairs().map(|(a, b)| (a + b).norm_sqr()), sa.dt);
    if !(den > 0.0) {
        return Err(Error::Degenerate("summed signal has zero energy".into()));
    }
    Ok((num / den).sqrt())
}

/// `Λ = ∫|S(t)|² dt`, trapezoid rule.
pub fn strength_integral(s: &ComplexWaveform) -> f64 {
    trapezoid(s.samples.iter().map(|x| x.norm_sqr()), s.dt)
}

/// `∫|S|² dt` evaluated from the spectrum (Parseval).
pub fn spectral_strength(s: &ComplexWaveform) -> f64 {
    let n = s.len() as f64;
    forward(&s.samples).iter().map(|x| x.norm_sqr()).sum::<f64>() * s.dt / n
}

/// Mean output-mode amplitudes for `gg, ge, eg, ee` of the summed channel,
/// projected on the mode `S_A/‖S_A‖`. `sb_received` is Bob's signal after the
/// conjugating conversion.
pub fn pointer_means(sa: &ComplexWaveform, sb_received: &ComplexWaveform) -> Result<[C64; 4]> {
    sa.check_compatible(sb_received)?;
    let norm = strength_integral(sa).sqrt();
    if !(norm > 0.0) {
        return Err(Error::Degenerate("Alice's signal has zero energy".into()));
    }
    let overlap = |zb: f64| -> C64 {
        let vals: Vec<C64> = sa
            .samples
            .iter()
            .zip(&sb_received.samples)
            .map(|(a, b)| a.conj() * (a + b * zb) * 0.5)
            .collect();
        let re = trapezoid(vals.iter().map(|v| v.re), sa.dt);
        let im = trapezoid(vals.iter().map(|v| v.im), sa.dt);
        c(re, im) / norm
    };
    let even = overlap(1.0);
    let odd = overlap(-1.0);
    Ok([even, odd, -odd, -even])
}

/// `Ī²/(2σ²)` of the outcome distribution induced by the two signals, with
/// the phase-preserving amplifier doubling the vacuum variance.
pub fn induced_strength(sa: &ComplexWaveform, sb_received: &ComplexWaveform) -> Result<f64> {
    let means = pointer_means(sa, sb_received)?;
    let odd_mid = (means[1] + means[2]) * 0.5;
    let i_bar = (means[0] - odd_mid).norm();
    let sigma2 = 2.0 * SIGMA_Q * SIGMA_Q;
    Ok(i_bar * i_bar / (2.0 * sigma2))
}

/// Drives and signals for both channels.
#[derive(Debug, Clone)]
pub struct MatchedPulses {
    pub target: ComplexWaveform,
    pub drive_alice: ComplexWaveform,
    pub drive_bob: ComplexWaveform,
    pub signal_alice: ComplexWaveform,
    /// Bob's signal after conjugating conversion.
    pub signal_bob: ComplexWaveform,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PulseSummary {
    pub mismatch: f64,
    pub strength_alice: f64,
    pub strength_bob: f64,
    pub induced_strength: f64,
    pub round_trip_error_alice: f64,
    pub round_trip_error_bob: f64,
    pub drive_peak_alice: f64,
    pub drive_peak_bob: f64,
}

fn relative_l2(a: &ComplexWaveform, b: &ComplexWaveform) -> f64 {
    let num: f64 = a.samples.iter().zip(&b.samples).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.samples.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

impl MatchedPulses {
    /// Invert each channel against the common target. Bob's received signal is
    /// conjugated, so his own output is synthesised against `conj(target)`.
    pub fn synthesize(
        target: &ComplexWaveform,
        alice: (&CavityParams, &JpcChannel),
        bob: (&CavityParams, &JpcChannel),
    ) -> Result<Self> {
        let drive_alice = synthesize_drive(target, alice.0, alice.1)?;
        let drive_bob = synthesize_drive(&target.conj(), bob.0, bob.1)?;
        Self::from_drives(target, drive_alice, drive_bob, alice, bob)
    }

    /// Bob is driven with Alice's pulse, rescaled only for DC gain.
    pub fn without_bob_compensation(
        target: &ComplexWaveform,
        alice: (&CavityParams, &JpcChannel),
        bob: (&CavityParams, &JpcChannel),
    ) -> Result<Self> {
        let drive_alice = synthesize_drive(target, alice.0, alice.1)?;
        let grid = target.grid()?;
        let dc_a = signal_transfer(&grid, alice.0, alice.1)[0];
        let dc_b = signal_transfer(&grid, bob.0, bob.1)[0];
        let ratio = dc_a.conj() / dc_b;
        let drive_bob = ComplexWaveform {
            samples: drive_alice.samples.iter().map(|e| e.conj() * ratio).collect(),
            ..drive_alice.clone()
        };
        Self::from_drives(target, drive_alice, drive_bob, alice, bob)
    }

    fn from_drives(
        target: &ComplexWaveform,
        drive_alice: ComplexWaveform,
        drive_bob: ComplexWaveform,
        alice: (&CavityParams, &JpcChannel),
        bob: (&CavityParams, &JpcChannel),
    ) -> Result<Self> {
        let signal_alice = signal_difference(alice.0, alice.1, &drive_alice)?;
        let signal_bob = signal_difference(bob.0, bob.1, &drive_bob)?.conj();
        Ok(Self { target: target.clone(), drive_alice, drive_bob, signal_alice, signal_bob })
    }

    pub fn mismatch(&self) -> Result<f64> {
        mismatch(&self.signal_alice, &self.signal_bob)
    }

    pub fn summary(&self) -> Result<PulseSummary> {
        let peak = |w: &ComplexWaveform| w.samples.iter().map(|s| s.norm()).fold(0.0, f64::max);
        Ok(PulseSummary {
            mismatch: self.mismatch()?,
            strength_alice: strength_integral(&self.signal_alice),
            strength_bob: strength_integral(&self.signal_bob),
            induced_strength: induced_strength(&self.signal_alice, &self.signal_bob)?,
            round_trip_error_alice: relative_l2(&self.signal_alice, &self.target),
            round_trip_error_bob: relative_l2(&self.signal_bob, &self.target),
            drive_peak_alice: peak(&self.drive_alice),
            drive_peak_bob: peak(&self.drive_bob),
        })
    }

    /// Rescale both drives so that `∫|S_A|² = lambda`.
    pub fn normalized_to(&self, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(invalid("lambda", format!("{lambda} must be non-negative")));
        }
        let current = strength_integral(&self.signal_alice);
        if !(current > 0.0) {
            return Err(Error::Degenerate("signal has zero energy".into()));
        }
        let s = (lambda / current).sqrt();
        Ok(Self {
            target: self.target.scaled(s),
            drive_alice: self.drive_alice.scaled(s),
            drive_bob: self.drive_bob.scaled(s),
            signal_alice: self.signal_alice.scaled(s),
            signal_bob: self.signal_bob.scaled(s),
        })
    }
}
