//! Synthetic experiment: weak measurement followed by one strong tomography
//! readout per shot, accumulated into a conditional grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::marginal::ConditionalGrid;
use crate::measurement::{ConditionalModel, ModelParams, Outcome};
use crate::quantum::{c, Mat4, C64};
use crate::sampling::{bin_outcomes, derive_seed, sample_outcomes, BinSpec, Histogram, OutcomeBatch, SHARD_SIZE};
use crate::tomography::{TomoSetting, TomographyModel};

const TOMOGRAPHY_STREAM: u64 = 0x746f_6d6f;

/// Fast tomography outcome probabilities for conditional states of one model.
///
/// With `ρ = c·(M∘ψψ†) + (1−c)I/4`, `Tr(E ρ) = c·ψᵀ K conj(ψ) + (1−c)/4`
/// where `K_jk = E_kj M_jk` is precomputed per (setting, outcome).
#[derive(Debug, Clone)]
pub struct ShotSimulator {
    model: ConditionalModel,
    kernels: Vec<[Mat4; 4]>,
}

impl ShotSimulator {
    pub fn new(model: ConditionalModel, c_readout: f64) -> Result<Self> {
        let tomo = TomographyModel::new(c_readout)?;
        let mask = model.dephasing_mask();
        let kernels = (0..TomoSetting::COUNT)
            .map(|s| {
                let mut k = [Mat4::zeros(); 4];
                for (o, slot) in k.iter_mut().enumerate() {
                    let e = tomo.effect(s, o);
                    *slot = Mat4::from_fn(|j, kk| e[(kk, j)] * mask[(j, kk)]);
                }
                k
            })
            .collect();
        Ok(Self { model, kernels })
    }

    pub fn model(&self) -> &ConditionalModel {
        &self.model
    }

    pub fn probabilities(&self, outcome: Outcome, setting: usize) -> [f64; 4] {
        let psi = self.model.amplitudes(outcome);
        let ct = self.model.params().c_tomo;
        let mut p = [0.0; 4];
        for (o, k) in self.kernels[setting].iter().enumerate() {
            let mut acc = c(0.0, 0.0);
            for j in 0..4 {
                let mut row = C64::new(0.0, 0.0);
                for l in 0..4 {
                    row += k[(j, l)] * psi[l].conj();
                }
                acc += psi[j] * row;
            }
            p[o] = (ct * acc.re + (1.0 - ct) / 4.0).max(0.0);
        }
        p
    }

    fn draw(&self, rng: &mut ChaCha8Rng, outcome: Outcome, setting: usize) -> usize {
        let p = self.probabilities(outcome, setting);
        let total: f64 = p.iter().sum();
        let u = rng.random::<f64>() * total;
        let mut acc = 0.0;
        for (k, &pk) in p.iter().enumerate() {
            acc += pk;
            if u < acc {
                return k;
            }
        }
        3
    }
}

/// Sampled data of one strength.
#[derive(Debug, Clone)]
pub struct StrengthData {
    pub batch: OutcomeBatch,
    pub histogram: Histogram,
    pub grid: ConditionalGrid,
}

/// Sample `n_shots` weak outcomes, bin them, and give shot `k` one strong
/// readout in setting `k mod 9` drawn from its conditional state.
pub fn simulate_strength(
    lambda: f64,
    params: &ModelParams,
    n_shots: usize,
    spec: &BinSpec,
    c_readout: f64,
    seed: u64,
) -> Result<StrengthData> {
    let batch = sample_outcomes(lambda, n_shots, seed, params)?;
    let histogram = bin_outcomes(&batch, spec);
    let sim = ShotSimulator::new(ConditionalModel::new(lambda, params)?, c_readout)?;
    let tomo_seed = derive_seed(seed, &[TOMOGRAPHY_STREAM]);
    let shards: Vec<Vec<(u32, u8, u8)>> = batch
        .outcomes
        .par_chunks(SHARD_SIZE)
        .enumerate()
        .map(|(shard, chunk)| {
            let mut rng = ChaCha8Rng::seed_from_u64(tomo_seed);
            rng.set_stream(shard as u64);
            chunk
                .iter()
                .enumerate()
                .map(|(offset, &o)| {
                    let k = shard * SHARD_SIZE + offset;
                    let setting = k % TomoSetting::COUNT;
                    let (idx, _) = spec.locate(o);
                    let outcome = sim.draw(&mut rng, o, setting);
                    (spec.flat(idx) as u32, setting as u8, outcome as u8)
                })
                .collect()
        })
        .collect();
    let mut grid = ConditionalGrid::empty(*spec, lambda);
    for &(flat, setting, outcome) in shards.iter().flatten() {
        let bin = &mut grid.bins[flat as usize];
        bin.shots += 1;
        bin.counts.record(setting as usize, outcome as usize);
    }
    Ok(StrengthData { batch, histogram, grid })
}
