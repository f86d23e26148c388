//! Outcome sampling and two-dimensional outcome binning.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::measurement::{ModelParams, Outcome};

/// Draws per shard; shards are generated in parallel and concatenated in order.
pub const SHARD_SIZE: usize = 1 << 16;

/// Deterministic generator for one shard of one stream.
pub fn shard_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derive a sub-seed from a seed and a path of indices (splitmix64 mixing).
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    path.iter().fold(mix(seed), |acc, &p| mix(acc ^ mix(p)))
}

/// Weak-measurement outcomes from one strength.
#[derive(Debug, Clone)]
pub struct OutcomeBatch {
    pub lambda: f64,
    pub seed: u64,
    pub outcomes: Vec<Outcome>,
}

impl OutcomeBatch {
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }
}

/// One draw from the four-pointer Gaussian mixture with the `|++⟩` input.
///
/// Pointer means along `I_m` are `+Ī, 0, 0, −Ī` for `gg, ge, eg, ee`.
fn draw(rng: &mut ChaCha8Rng, i_bar: f64, q_bar: f64, sigma: f64) -> Outcome {
    let component: u8 = rng.random_range(0..4);
    let mean = match component {
        0 => i_bar,
        3 => -i_bar,
        _ => 0.0,
    };
    let ni: f64 = rng.sample(StandardNormal);
    let nq: f64 = rng.sample(StandardNormal);
    Outcome::new(mean + sigma * ni, q_bar + sigma * nq)
}

pub fn sample_outcomes(lambda: f64, n_shots: usize, seed: u64, p: &ModelParams) -> Result<OutcomeBatch> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(invalid("lambda", format!("{lambda} must be finite and non-negative")));
    }
    if n_shots == 0 {
        return Err(invalid("n_shots", "must be at least 1"));
    }
    p.validate()?;
    let i_bar = p.pointer_separation(lambda);
    let n_shards = n_shots.div_ceil(SHARD_SIZE);
    let shards: Vec<Vec<Outcome>> = (0..n_shards)
        .into_par_iter()
        .map(|shard| {
            let len = SHARD_SIZE.min(n_shots - shard * SHARD_SIZE);
            let mut rng = shard_rng(seed, shard as u64);
            (0..len).map(|_| draw(&mut rng, i_bar, p.q_bar, p.sigma_m)).collect()
        })
        .collect();
    Ok(OutcomeBatch { lambda, seed, outcomes: shards.concat() })
}

/// Rectangular outcome grid with half-open bins `[lo, lo + width)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinSpec {
    pub i_min: f64,
    pub i_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub n_i: usize,
    pub n_q: usize,
}

impl BinSpec {
    pub fn new(i_range: (f64, f64), q_range: (f64, f64), n_i: usize, n_q: usize) -> Result<Self> {
        if n_i == 0 || n_q == 0 {
            return Err(invalid("bins", "grid needs at least one bin per axis"));
        }
        if !(i_range.1 > i_range.0) || !(q_range.1 > q_range.0) {
            return Err(invalid("bins", "ranges must have max > min"));
        }
        Ok(Self { i_min: i_range.0, i_max: i_range.1, q_min: q_range.0, q_max: q_range.1, n_i, n_q })
    }

    /// Grid spanning `±(Ī + 5σ)` in `I_m` and `q̄ ± 5σ` in `Q_m`.
    pub fn default_for(lambda: f64, p: &ModelParams, n_i: usize, n_q: usize) -> Result<Self> {
        let half_i = p.pointer_separation(lambda) + 5.0 * p.sigma_m;
        let half_q = 5.0 * p.sigma_m;
        Self::new((-half_i, half_i), (p.q_bar - half_q, p.q_bar + half_q), n_i, n_q)
    }

    pub fn n_bins(&self) -> usize {
        self.n_i * self.n_q
    }

    pub fn i_width(&self) -> f64 {
        (self.i_max - self.i_min) / self.n_i as f64
    }

    pub fn q_width(&self) -> f64 {
        (self.q_max - self.q_min) / self.n_q as f64
    }

    pub fn i_center(&self, col: usize) -> f64 {
        self.i_min + (col as f64 + 0.5) * self.i_width()
    }

    pub fn q_center(&self, row: usize) -> f64 {
        self.q_min + (row as f64 + 0.5) * self.q_width()
    }

    pub fn center(&self, idx: BinIndex) -> Outcome {
        Outcome::new(self.i_center(idx.i), self.q_center(idx.q))
    }

    /// Linear index, `I_m`-major.
    pub fn flat(&self, idx: BinIndex) -> usize {
        idx.i * self.n_q + idx.q
    }

    pub fn unflat(&self, k: usize) -> BinIndex {
        BinIndex { i: k / self.n_q, q: k % self.n_q }
    }

    pub fn indices(&self) -> impl Iterator<Item = BinIndex> + '_ {
        (0..self.n_bins()).map(|k| self.unflat(k))
    }

    fn axis_index(x: f64, lo: f64, hi: f64, n: usize) -> (usize, bool) {
        if x < lo {
            return (0, true);
        }
        if x >= hi {
            return (n - 1, true);
        }
        let k = ((x - lo) / (hi - lo) * n as f64).floor() as usize;
        (k.min(n - 1), false)
    }

    /// Bin of an outcome; out-of-range outcomes are clamped to the edge bin.
    pub fn locate(&self, o: Outcome) -> (BinIndex, bool) {
        let (i, ci) = Self::axis_index(o.i_m, self.i_min, self.i_max, self.n_i);
        let (q, cq) = Self::axis_index(o.q_m, self.q_min, self.q_max, self.n_q);
        (BinIndex { i, q }, ci || cq)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct BinIndex {
    pub i: usize,
    pub q: usize,
}

#[derive(Debug, Clone)]
pub struct Histogram {
    pub spec: BinSpec,
    counts: Vec<u64>,
    pub clamped: u64,
}

impl Histogram {
    pub fn empty(spec: BinSpec) -> Self {
        Self { spec, counts: vec![0; spec.n_bins()], clamped: 0 }
    }

    pub fn add(&mut self, o: Outcome) -> BinIndex {
        let (idx, clamped) = self.spec.locate(o);
        self.counts[self.spec.flat(idx)] += 1;
        if clamped {
            self.clamped += 1;
        }
        idx
    }

    pub fn count(&self, idx: BinIndex) -> u64 {
        self.counts[self.spec.flat(idx)]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Columns `bin_i_center, bin_q_center, count`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["bin_i_center", "bin_q_center", "count"])?;
        for idx in self.spec.indices() {
            let c = self.spec.center(idx);
            wtr.write_record([c.i_m.to_string(), c.q_m.to_string(), self.count(idx).to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub fn bin_outcomes(batch: &OutcomeBatch, spec: &BinSpec) -> Histogram {
    let mut h = Histogram::empty(*spec);
    for &o in &batch.outcomes {
        h.add(o);
    }
    if h.clamped > 0 {
        tracing::debug!(clamped = h.clamped, "outcomes outside the bin grid were clamped to edge bins");
    }
    h
}
