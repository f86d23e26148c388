//! Per-bin reconstruction, marginal discord and bootstrap bands.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discord::{discord, DiscordOptions, XiPair};
use crate::error::{invalid, Error, Result};
use crate::marginal::{fit_xi, marginalize, refine_xi, ConditionalGrid, PurityLandscape, XiFit, XiSearch};
use crate::optimize::quantile_sorted;
use crate::quantum::{DensityMatrix, Subsystem};
use crate::sampling::derive_seed;
use crate::tomography::{CountsTable, Reconstructor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    pub n_resamples: usize,
    pub percentile: f64,
    pub seed: u64,
    pub min_records: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { n_resamples: 2000, percentile: 95.0, seed: 0, min_records: 50 }
    }
}

impl BootstrapConfig {
    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if self.n_resamples == 0 {
            out.push(("n_resamples", "must be at least 1".to_string()));
        }
        if !(self.percentile > 50.0 && self.percentile < 100.0) {
            out.push(("percentile", format!("{} outside (50, 100)", self.percentile)));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            None => Ok(()),
            Some((name, reason)) => Err(invalid(name, reason)),
        }
    }

    /// Lower and upper quantiles of the central band.
    pub fn band_quantiles(&self) -> (f64, f64) {
        let tail = (100.0 - self.percentile) / 200.0;
        (tail, 1.0 - tail)
    }
}

/// Settings shared by the point estimate and every resample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    /// Readout contrast assumed by the reconstruction.
    pub c_readout: f64,
    pub discord: DiscordOptions,
    pub xi_search: XiSearch,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self { c_readout: 1.0, discord: DiscordOptions::default(), xi_search: XiSearch::default() }
    }
}

/// Reconstruct every bin with at least `min_shots` records; failures are
/// recorded on the bin and do not abort the grid.
pub fn reconstruct_grid(grid: &mut ConditionalGrid, c_readout: f64, min_shots: u64) -> Result<usize> {
    let rec = Reconstructor::new(c_readout)?;
    let results: Vec<Option<Result<DensityMatrix>>> = grid
        .bins
        .par_iter()
        .map(|b| (b.counts.total() >= min_shots.max(1)).then(|| rec.reconstruct(&b.counts).map(|o| o.state)))
        .collect();
    let mut failures = 0;
    for (bin, res) in grid.bins.iter_mut().zip(results) {
        bin.state = None;
        bin.failure = None;
        match res {
            Some(Ok(state)) => bin.state = Some(state),
            Some(Err(e)) => {
                failures += 1;
                bin.failure = Some(e.to_string());
            }
            None => {}
        }
    }
    if failures > 0 {
        tracing::warn!(failures, "bins failed to reconstruct");
    }
    Ok(grid.reconstructed().count())
}

/// Discord of each marginal column plus the shot-weighted bin average.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ColumnDiscord {
    pub i: usize,
    pub i_m: f64,
    pub weight: f64,
    pub shots: u64,
    pub d_alice: f64,
    pub d_bob: f64,
    pub d_alice_bin_avg: f64,
    pub d_bob_bin_avg: f64,
}

fn both_sides(rho: &DensityMatrix, opts: &DiscordOptions) -> Result<(f64, f64)> {
    Ok((discord(rho, Subsystem::Alice, opts)?, discord(rho, Subsystem::Bob, opts)?))
}

fn marginal_discords(grid: &ConditionalGrid, xi: XiPair, opts: &DiscordOptions) -> Result<Vec<(usize, f64, f64)>> {
    marginalize(grid, xi)?
        .par_iter()
        .map(|m| both_sides(&m.state, opts).map(|(a, b)| (m.i, a, b)))
        .collect()
}

/// Point estimates for a reconstructed grid.
#[derive(Debug, Clone)]
pub struct PointAnalysis {
    pub fit: XiFit,
    pub r: f64,
    pub columns: Vec<ColumnDiscord>,
}

pub fn analyze(grid: &ConditionalGrid, opts: &AnalysisOptions) -> Result<PointAnalysis> {
    let fit = fit_xi(grid, &opts.xi_search)?;
    let marginals = marginalize(grid, fit.xi)?;
    let columns = grid.columns();
    let rows: Vec<ColumnDiscord> = marginals
        .par_iter()
        .zip(columns.par_iter())
        .map(|(m, col)| -> Result<ColumnDiscord> {
            let (d_alice, d_bob) = both_sides(&m.state, &opts.discord)?;
            let shots = col.shots();
            let mut avg = (0.0, 0.0);
            for (b, s) in &col.members {
                let (a, bb) = both_sides(s, &opts.discord)?;
                let w = b.shots as f64 / shots as f64;
                avg.0 += w * a;
                avg.1 += w * bb;
            }
            Ok(ColumnDiscord {
                i: m.i,
                i_m: m.i_m,
                weight: m.weight,
                shots,
                d_alice,
                d_bob,
                d_alice_bin_avg: avg.0,
                d_bob_bin_avg: avg.1,
            })
        })
        .collect::<Result<_>>()?;
    let r = 1.0 - fit.gamma_opt / fit.gamma_avg;
    Ok(PointAnalysis { fit, r, columns: rows })
}

/// Exported per-column record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscordResult {
    pub lambda: f64,
    pub i_m_center: f64,
    pub d_alice: f64,
    pub d_bob: f64,
    pub ci_a: [f64; 2],
    pub ci_b: [f64; 2],
    pub gamma_opt: f64,
    pub gamma_avg: f64,
    pub r: f64,
    pub xi_opt: [f64; 2],
    pub d_alice_bin_avg: f64,
    pub d_bob_bin_avg: f64,
    pub shots: u64,
    pub n_resamples: usize,
}

/// Draw `counts.total()` records with replacement from the empirical table.
pub fn resample_counts(counts: &CountsTable, seed: u64) -> CountsTable {
    let total = counts.total();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells: Vec<f64> = counts.counts.iter().flatten().map(|&n| n as f64).collect();
    let mut out = [[0u64; 4]; 9];
    let mut left = total;
    let mut mass: f64 = cells.iter().sum();
    for (k, &p) in cells.iter().enumerate() {
        if left == 0 {
            break;
        }
        let draw = if k + 1 == cells.len() || mass <= p {
            left
        } else {
            let prob = (p / mass).clamp(0.0, 1.0);
            rand_distr::Distribution::sample(&rand_distr::Binomial::new(left, prob).expect("valid binomial"), &mut rng)
        };
        out[k / 4][k % 4] = draw;
        left -= draw;
        mass -= p;
    }
    CountsTable::new(out)
}

/// Bins with too few records are dropped from both the point estimate and the
/// resamples so that the two describe the same data.
fn eligible_grid(grid: &ConditionalGrid, min_records: u64) -> Result<ConditionalGrid> {
    let mut g = grid.clone();
    let mut dropped = 0;
    for b in &mut g.bins {
        if b.state.is_some() && b.counts.total() < min_records {
            b.state = None;
            dropped += 1;
        }
    }
    if dropped > 0 {
        tracing::info!(dropped, min_records, "bins below the record minimum excluded from bootstrap");
    }
    if g.reconstructed().next().is_none() {
        return Err(Error::InsufficientData(format!("no bin has at least {min_records} tomography records")));
    }
    Ok(g)
}

/// Point estimate plus percentile bands from resampling each bin's records.
pub fn bootstrap_discord(grid: &ConditionalGrid, cfg: &BootstrapConfig, opts: &AnalysisOptions) -> Result<Vec<DiscordResult>> {
    cfg.validate()?;
    let grid = eligible_grid(grid, cfg.min_records)?;
    let point = analyze(&grid, opts)?;
    let rec = Reconstructor::new(opts.c_readout)?;
    let xi0 = point.fit.xi;

    let draws: Vec<Vec<(usize, f64, f64)>> = (0..cfg.n_resamples)
        .into_par_iter()
        .map(|r| -> Result<Vec<(usize, f64, f64)>> {
            let mut g = grid.clone();
            for (flat, b) in g.bins.iter_mut().enumerate() {
                if b.state.is_none() {
                    continue;
                }
                let resampled = resample_counts(&b.counts, derive_seed(cfg.seed, &[r as u64, flat as u64]));
                match rec.reconstruct(&resampled) {
                    Ok(o) => b.state = Some(o.state),
                    Err(e) => tracing::debug!(resample = r, bin = flat, "resample reconstruction failed: {e}"),
                }
            }
            let landscape = PurityLandscape::new(&g)?;
            let xi = refine_xi(&landscape, xi0, &opts.xi_search).xi;
            marginal_discords(&g, xi, &opts.discord)
        })
        .collect::<Result<_>>()?;

    let (q_lo, q_hi) = cfg.band_quantiles();
    let band = |values: &mut Vec<f64>| -> [f64; 2] {
        values.sort_by(f64::total_cmp);
        [quantile_sorted(values, q_lo), quantile_sorted(values, q_hi)]
    };
    let mut out = Vec::with_capacity(point.columns.len());
    for col in &point.columns {
        let mut a: Vec<f64> = Vec::with_capacity(draws.len());
        let mut b: Vec<f64> = Vec::with_capacity(draws.len());
        for d in &draws {
            if let Some(&(_, da, db)) = d.iter().find(|(i, _, _)| *i == col.i) {
                a.push(da);
                b.push(db);
            }
        }
        if a.is_empty() {
            continue;
        }
        out.push(DiscordResult {
            lambda: grid.lambda,
            i_m_center: col.i_m,
            d_alice: col.d_alice,
            d_bob: col.d_bob,
            ci_a: band(&mut a),
            ci_b: band(&mut b),
            gamma_opt: point.fit.gamma_opt,
            gamma_avg: point.fit.gamma_avg,
            r: point.r,
            xi_opt: xi0.as_array(),
            d_alice_bin_avg: col.d_alice_bin_avg,
            d_bob_bin_avg: col.d_bob_bin_avg,
            shots: col.shots,
            n_resamples: cfg.n_resamples,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resample_preserves_total_and_support() {
        let mut t = CountsTable::default();
        t.counts[0] = [5, 0, 3, 0];
        t.counts[4] = [0, 7, 0, 1];
        let r = resample_counts(&t, 99);
        assert_eq!(r.total(), t.total());
        for (a, b) in r.counts.iter().flatten().zip(t.counts.iter().flatten()) {
            if *b == 0 {
                assert_eq!(*a, 0);
            }
        }
        assert_eq!(resample_counts(&t, 99), r);
    }

    #[test]
    fn config_validation() {
        assert!(BootstrapConfig::default().validate().is_ok());
        assert!(BootstrapConfig { n_resamples: 0, ..Default::default() }.validate().is_err());
        assert!(BootstrapConfig { percentile: 40.0, ..Default::default() }.validate().is_err());
        let (lo, hi) = BootstrapConfig::default().band_quantiles();
        assert!((lo - 0.025).abs() < 1e-15 && (hi - 0.975).abs() < 1e-15);
    }
}
