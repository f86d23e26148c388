//! Nine-setting two-qubit tomography with symmetric readout error, linear
//! inversion and maximum-likelihood reconstruction.

use std::fmt;
use std::io::Write;

use nalgebra::Cholesky;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::optimize::Bfgs;
use crate::quantum::{
    c, kron, rx, ry, state_from_pauli, DensityMatrix, Mat2, Mat4, Pauli, PauliLabel, PauliVector,
};

/// Pre-measurement rotation on one qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TomoRotation {
    #[serde(rename = "I")]
    Identity,
    #[serde(rename = "X90")]
    X90,
    #[serde(rename = "Y90")]
    Y90,
}

impl TomoRotation {
    pub const ALL: [TomoRotation; 3] = [TomoRotation::Identity, TomoRotation::X90, TomoRotation::Y90];

    pub fn unitary(self) -> Mat2 {
        match self {
            TomoRotation::Identity => Mat2::identity(),
            TomoRotation::X90 => rx(std::f64::consts::FRAC_PI_2),
            TomoRotation::Y90 => ry(std::f64::consts::FRAC_PI_2),
        }
    }

    /// Signed Pauli read out by a Z measurement after this rotation.
    pub fn measured_axis(self) -> (Pauli, f64) {
        let u = self.unitary();
        let heis = u.adjoint() * Pauli::Z.matrix() * u;
        for p in [Pauli::X, Pauli::Y, Pauli::Z] {
            let coeff = (p.matrix() * heis).trace().re / 2.0;
            if coeff.abs() > 0.5 {
                return (p, coeff.signum());
            }
        }
        unreachable!("rotation maps Z onto a Pauli axis")
    }
}

impl fmt::Display for TomoRotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TomoRotation::Identity => "I",
            TomoRotation::X90 => "X90",
            TomoRotation::Y90 => "Y90",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct TomoSetting {
    pub rot_a: TomoRotation,
    pub rot_b: TomoRotation,
}

impl TomoSetting {
    pub const COUNT: usize = 9;

    /// Settings in canonical order, Alice's rotation major.
    pub fn all() -> [TomoSetting; 9] {
        let mut out = [TomoSetting { rot_a: TomoRotation::Identity, rot_b: TomoRotation::Identity }; 9];
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = TomoSetting { rot_a: TomoRotation::ALL[k / 3], rot_b: TomoRotation::ALL[k % 3] };
        }
        out
    }

    pub fn unitary(&self) -> Mat4 {
        kron(&self.rot_a.unitary(), &self.rot_b.unitary())
    }
}

/// Outcome frequencies per setting over `gg, ge, eg, ee`.
pub type Frequencies = [[f64; 4]; 9];

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct CountsTable {
    pub counts: [[u64; 4]; 9],
}

impl CountsTable {
    pub fn new(counts: [[u64; 4]; 9]) -> Self {
        Self { counts }
    }

    pub fn record(&mut self, setting: usize, outcome: usize) {
        self.counts[setting][outcome] += 1;
    }

    pub fn setting_shots(&self, setting: usize) -> u64 {
        self.counts[setting].iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Shots per setting when all settings are equally populated.
    pub fn shots_per_setting(&self) -> Option<u64> {
        let first = self.setting_shots(0);
        (1..9).all(|s| self.setting_shots(s) == first).then_some(first)
    }

    pub fn frequencies(&self) -> Frequencies {
        let mut f = [[0.0; 4]; 9];
        for (row, counts) in f.iter_mut().zip(&self.counts) {
            for (x, &n) in row.iter_mut().zip(counts) {
                *x = n as f64;
            }
        }
        f
    }

    pub fn merge(&mut self, other: &CountsTable) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    /// Columns `setting_a, setting_b, n_gg, n_ge, n_eg, n_ee`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["setting_a", "setting_b", "n_gg", "n_ge", "n_eg", "n_ee"])?;
        for (setting, row) in TomoSetting::all().iter().zip(&self.counts) {
            let mut rec = vec![setting.rot_a.to_string(), setting.rot_b.to_string()];
            rec.extend(row.iter().map(|n| n.to_string()));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn check_contrast(c_tomo: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&c_tomo) {
        return Err(invalid("c_tomo", format!("{c_tomo} outside [0, 1]")));
    }
    Ok(())
}

/// Measurement operators for every (setting, outcome), readout error included.
#[derive(Debug, Clone)]
pub struct TomographyModel {
    c_tomo: f64,
    povm: [[Mat4; 4]; 9],
}

impl TomographyModel {
    pub fn new(c_tomo: f64) -> Result<Self> {
        check_contrast(c_tomo)?;
        let flip = (1.0 - c_tomo) / 2.0;
        let f1 = |obs: usize, actual: usize| if obs == actual { 1.0 - flip } else { flip };
        let mut povm = [[Mat4::zeros(); 4]; 9];
        for (s, setting) in TomoSetting::all().iter().enumerate() {
            let u = setting.unitary();
            let projectors: Vec<Mat4> = (0..4)
                .map(|k| {
                    let mut p = Mat4::zeros();
                    p[(k, k)] = c(1.0, 0.0);
                    u.adjoint() * p * u
                })
                .collect();
            for (o, e) in povm[s].iter_mut().enumerate() {
                for (k, proj) in projectors.iter().enumerate() {
                    let w = f1(o / 2, k / 2) * f1(o % 2, k % 2);
                    *e += proj.scale(w);
                }
            }
        }
        Ok(Self { c_tomo, povm })
    }

    pub fn c_tomo(&self) -> f64 {
        self.c_tomo
    }

    pub fn effect(&self, setting: usize, outcome: usize) -> &Mat4 {
        &self.povm[setting][outcome]
    }

    pub fn probabilities(&self, rho: &Mat4) -> Frequencies {
        let mut p = [[0.0; 4]; 9];
        for (s, row) in p.iter_mut().enumerate() {
            for (o, x) in row.iter_mut().enumerate() {
                *x = trace_product(&self.povm[s][o], rho).max(0.0);
            }
        }
        p
    }
}

/// `Re Tr(A·B)` for Hermitian arguments.
fn trace_product(a: &Mat4, b: &Mat4) -> f64 {
    let mut acc = 0.0;
    for j in 0..4 {
        for k in 0..4 {
            let x = a[(j, k)] * b[(k, j)];
            acc += x.re;
        }
    }
    acc
}

/// Multinomial draw of `n` trials over four cells.
pub(crate) fn multinomial4<R: rand::Rng>(rng: &mut R, n: u64, p: &[f64; 4]) -> [u64; 4] {
    let mut out = [0u64; 4];
    let mut left = n;
    let mut mass: f64 = p.iter().sum();
    for k in 0..3 {
        if left == 0 {
            break;
        }
        let prob = if mass > 0.0 { (p[k] / mass).clamp(0.0, 1.0) } else { 0.0 };
        let draw = Binomial::new(left, prob).map(|b| b.sample(rng)).unwrap_or(0);
        out[k] = draw;
        left -= draw;
        mass -= p[k];
    }
    out[3] = left;
    out
}

pub fn simulate_tomography(rho: &DensityMatrix, shots: u64, c_tomo: f64, seed: u64) -> Result<CountsTable> {
    if shots == 0 {
        return Err(invalid("shots", "must be at least 1"));
    }
    let model = TomographyModel::new(c_tomo)?;
    let probs = model.probabilities(rho.matrix());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = CountsTable::default();
    for (row, p) in table.counts.iter_mut().zip(&probs) {
        *row = multinomial4(&mut rng, shots, p);
    }
    Ok(table)
}

/// Linear inversion from outcome frequencies (any non-negative weights).
pub fn linear_estimate_from(freq: &Frequencies, c_tomo: f64) -> Result<PauliVector> {
    check_contrast(c_tomo)?;
    if c_tomo == 0.0 {
        return Err(Error::Degenerate("zero readout contrast cannot be inverted".into()));
    }
    let mut sums = [0.0; 16];
    let mut weights = [0.0; 16];
    for (setting, row) in TomoSetting::all().iter().zip(freq) {
        let n: f64 = row.iter().sum();
        if n <= 0.0 {
            continue;
        }
        let za = (row[0] + row[1] - row[2] - row[3]) / n;
        let zb = (row[0] - row[1] + row[2] - row[3]) / n;
        let zz = (row[0] - row[1] - row[2] + row[3]) / n;
        let (pa, sa) = setting.rot_a.measured_axis();
        let (pb, sb) = setting.rot_b.measured_axis();
        let mut add = |label: PauliLabel, value: f64| {
            sums[label.index()] += n * value;
            weights[label.index()] += n;
        };
        add(PauliLabel::new(pa, Pauli::I), sa * za / c_tomo);
        add(PauliLabel::new(Pauli::I, pb), sb * zb / c_tomo);
        add(PauliLabel::new(pa, pb), sa * sb * zz / (c_tomo * c_tomo));
    }
    let mut out = [0.0; 16];
    out[0] = 1.0;
    for k in 1..16 {
        if weights[k] > 0.0 {
            out[k] = sums[k] / weights[k];
        }
    }
    Ok(PauliVector::new(out))
}

pub fn linear_estimate(counts: &CountsTable, c_tomo: f64) -> Result<PauliVector> {
    if counts.total() == 0 {
        return Err(Error::InsufficientData("empty counts table".into()));
    }
    linear_estimate_from(&counts.frequencies(), c_tomo)
}

/// Reconstruction diagnostics.
#[derive(Debug, Clone)]
pub struct MleOutcome {
    pub state: DensityMatrix,
    /// Mean smoothed log-likelihood per record at the optimum.
    pub log_likelihood: f64,
    /// Same objective at the PSD-projected linear estimate.
    pub linear_log_likelihood: f64,
    pub iterations: usize,
}

/// Pseudo-count added to every cell inside the likelihood.
pub const SMOOTHING: f64 = 0.5;

/// Reusable maximum-likelihood reconstructor for one readout contrast.
#[derive(Debug, Clone)]
pub struct Reconstructor {
    model: TomographyModel,
    optimizer: Bfgs,
    smoothing: f64,
}

impl Reconstructor {
    pub fn new(c_tomo: f64) -> Result<Self> {
        Ok(Self { model: TomographyModel::new(c_tomo)?, optimizer: Bfgs::default(), smoothing: SMOOTHING })
    }

    pub fn with_smoothing(mut self, smoothing: f64) -> Self {
        self.smoothing = smoothing;
        self
    }

    pub fn model(&self) -> &TomographyModel {
        &self.model
    }

    /// Mean smoothed log-likelihood of a density matrix.
    pub fn log_likelihood(&self, freq: &Frequencies, rho: &Mat4) -> f64 {
        let probs = self.model.probabilities(rho);
        let mut total = 0.0;
        let mut ll = 0.0;
        for (fr, pr) in freq.iter().zip(&probs) {
            for (&n, &p) in fr.iter().zip(pr) {
                let w = n + self.smoothing;
                total += w;
                ll += w * p.max(1e-300).ln();
            }
        }
        ll / total
    }

    pub fn reconstruct(&self, counts: &CountsTable) -> Result<MleOutcome> {
        if counts.total() == 0 {
            return Err(Error::InsufficientData("empty counts table".into()));
        }
        self.reconstruct_from(&counts.frequencies())
    }

    pub fn reconstruct_from(&self, freq: &Frequencies) -> Result<MleOutcome> {
        let start_state = self.linear_start(freq)?;
        let linear_ll = self.log_likelihood(freq, start_state.matrix());
        let mixed = start_state.matrix().scale(0.98) + Mat4::identity().scale(0.02 / 4.0);
        let x0 = params_from_state(&mixed)?;

        let weights: Vec<f64> = freq.iter().flatten().map(|n| n + self.smoothing).collect();
        let total: f64 = weights.iter().sum();
        let setting_totals: Vec<f64> = freq.iter().map(|row| row.iter().map(|n| n + self.smoothing).sum()).collect();
        let norm_weight: f64 = setting_totals.iter().sum::<f64>();
        let objective = |x: &[f64], grad: &mut [f64]| -> f64 {
            let t = lower_triangular(x);
            let a = t.adjoint() * t;
            let tr = a.trace().re;
            if !(tr > 0.0) {
                grad.iter_mut().for_each(|g| *g = 0.0);
                return f64::NEG_INFINITY;
            }
            let mut value = 0.0;
            let mut g = Mat4::zeros();
            for s in 0..9 {
                for o in 0..4 {
                    let w = weights[s * 4 + o];
                    let e = self.model.effect(s, o);
                    let p = trace_product(e, &a).max(1e-300);
                    value += w * p.ln();
                    g += e.scale(w / p);
                }
            }
            value -= norm_weight * tr.ln();
            g -= Mat4::identity().scale(norm_weight / tr);
            let m = t * g;
            write_gradient(&m, grad, 1.0 / total);
            value / total
        };
        // the objective is per record; the gain tolerance applies to the total
        let optimizer = Bfgs { gain_tol: self.optimizer.gain_tol / total, ..self.optimizer };
        let ascent = optimizer.maximize(objective, &x0);
        if !ascent.converged {
            return Err(Error::NotConverged { iterations: ascent.iterations, last_gain: ascent.last_gain });
        }
        let t = lower_triangular(&ascent.x);
        let state = DensityMatrix::from_approx(t.adjoint() * t)?;
        let log_likelihood = self.log_likelihood(freq, state.matrix());
        Ok(MleOutcome { state, log_likelihood, linear_log_likelihood: linear_ll, iterations: ascent.iterations })
    }

    fn linear_start(&self, freq: &Frequencies) -> Result<DensityMatrix> {
        if self.model.c_tomo() == 0.0 {
            return Ok(DensityMatrix::maximally_mixed());
        }
        let pv = linear_estimate_from(freq, self.model.c_tomo())?;
        Ok(state_from_pauli(&pv)?.project_psd())
    }
}

pub fn mle_reconstruct(counts: &CountsTable, c_tomo: f64) -> Result<DensityMatrix> {
    Ok(Reconstructor::new(c_tomo)?.reconstruct(counts)?.state)
}

/// Parameter layout: four real diagonals, then real/imaginary pairs of the
/// six strictly-lower entries in row-major order.
fn lower_triangular(x: &[f64]) -> Mat4 {
    let mut t = Mat4::zeros();
    for d in 0..4 {
        t[(d, d)] = c(x[d], 0.0);
    }
    let mut k = 4;
    for j in 1..4 {
        for i in 0..j {
            t[(j, i)] = c(x[k], x[k + 1]);
            k += 2;
        }
    }
    t
}

fn write_gradient(m: &Mat4, grad: &mut [f64], scale: f64) {
    for d in 0..4 {
        grad[d] = 2.0 * m[(d, d)].re * scale;
    }
    let mut k = 4;
    for j in 1..4 {
        for i in 0..j {
            grad[k] = 2.0 * m[(j, i)].re * scale;
            grad[k + 1] = 2.0 * m[(j, i)].im * scale;
            k += 2;
        }
    }
}

/// Lower-triangular `T` with `T†T = A` for positive-definite `A`.
fn params_from_state(a: &Mat4) -> Result<Vec<f64>> {
    // reversing the basis turns the usual L·L† factorisation into T†·T
    let rev = Mat4::from_fn(|i, j| a[(3 - i, 3 - j)]);
    let chol = Cholesky::new(rev).ok_or_else(|| Error::InvalidState("start state not positive definite".into()))?;
    let l = chol.l();
    let upper = Mat4::from_fn(|i, j| l[(3 - i, 3 - j)]);
    let t: Mat4 = upper.adjoint();
    let mut x = vec![0.0; 16];
    for d in 0..4 {
        x[d] = t[(d, d)].re;
    }
    let mut k = 4;
    for j in 1..4 {
        for i in 0..j {
            x[k] = t[(j, i)].re;
            x[k + 1] = t[(j, i)].im;
            k += 2;
        }
    }
    Ok(x)
}
