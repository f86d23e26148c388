//! Conditional-state grids, Ξ-unwound marginalisation over `Q_m` and the
//! purity objective used to choose Ξ.

use rayon::prelude::*;
use serde::Serialize;

use crate::discord::{rotate_by_xi, XiPair};
use crate::error::{Error, Result};
use crate::optimize::NelderMead;
use crate::quantum::{DensityMatrix, Mat4, C64};
use crate::sampling::{BinIndex, BinSpec};
use crate::tomography::CountsTable;

/// Aggregates of one `(I_m, Q_m)` bin.
#[derive(Debug, Clone)]
pub struct BinRecord {
    pub index: BinIndex,
    pub shots: u64,
    pub counts: CountsTable,
    pub state: Option<DensityMatrix>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ConditionalGrid {
    pub spec: BinSpec,
    pub lambda: f64,
    /// One record per bin, `I_m`-major.
    pub bins: Vec<BinRecord>,
}

impl ConditionalGrid {
    pub fn empty(spec: BinSpec, lambda: f64) -> Self {
        let bins = spec
            .indices()
            .map(|index| BinRecord { index, shots: 0, counts: CountsTable::default(), state: None, failure: None })
            .collect();
        Self { spec, lambda, bins }
    }

    /// Grid with known states, e.g. for theory curves; weights are `shots`.
    pub fn from_states(spec: BinSpec, lambda: f64, states: impl IntoIterator<Item = (BinIndex, u64, DensityMatrix)>) -> Self {
        let mut grid = Self::empty(spec, lambda);
        for (idx, shots, state) in states {
            let k = spec.flat(idx);
            grid.bins[k].shots = shots;
            grid.bins[k].state = Some(state);
        }
        grid
    }

    pub fn bin(&self, idx: BinIndex) -> &BinRecord {
        &self.bins[self.spec.flat(idx)]
    }

    pub fn bin_mut(&mut self, idx: BinIndex) -> &mut BinRecord {
        let k = self.spec.flat(idx);
        &mut self.bins[k]
    }

    pub fn total_shots(&self) -> u64 {
        self.bins.iter().map(|b| b.shots).sum()
    }

    pub fn reconstructed(&self) -> impl Iterator<Item = (&BinRecord, &DensityMatrix)> + '_ {
        self.bins.iter().filter_map(|b| b.state.as_ref().map(|s| (b, s)))
    }

    pub fn reconstructed_shots(&self) -> u64 {
        self.reconstructed().map(|(b, _)| b.shots).sum()
    }

    /// Reconstructed bins grouped by `I_m` column, skipping empty columns.
    pub fn columns(&self) -> Vec<Column<'_>> {
        let mut cols: Vec<Column<'_>> = Vec::new();
        for i in 0..self.spec.n_i {
            let members: Vec<(&BinRecord, &DensityMatrix)> = (0..self.spec.n_q)
                .map(|q| self.bin(BinIndex { i, q }))
                .filter(|b| b.shots > 0)
                .filter_map(|b| b.state.as_ref().map(|s| (b, s)))
                .collect();
            if !members.is_empty() {
                cols.push(Column { i, i_m: self.spec.i_center(i), members });
            }
        }
        cols
    }
}

#[derive(Debug, Clone)]
pub struct Column<'a> {
    pub i: usize,
    pub i_m: f64,
    pub members: Vec<(&'a BinRecord, &'a DensityMatrix)>,
}

impl Column<'_> {
    pub fn shots(&self) -> u64 {
        self.members.iter().map(|(b, _)| b.shots).sum()
    }
}

/// Marginal state of one `I_m` column.
#[derive(Debug, Clone)]
pub struct MarginalState {
    pub i: usize,
    pub i_m: f64,
    /// Fraction of reconstructed shots falling in this column.
    pub weight: f64,
    pub state: DensityMatrix,
}

pub fn marginalize(grid: &ConditionalGrid, xi: XiPair) -> Result<Vec<MarginalState>> {
    let total = grid.reconstructed_shots();
    if total == 0 {
        return Err(Error::InsufficientData("grid has no reconstructed bins".into()));
    }
    let mut skipped = 0;
    let mut out = Vec::new();
    for i in 0..grid.spec.n_i {
        if (0..grid.spec.n_q).all(|q| grid.bin(BinIndex { i, q }).state.is_none()) {
            skipped += 1;
        }
    }
    for col in grid.columns() {
        let col_shots = col.shots() as f64;
        let mut parts = Vec::with_capacity(col.members.len());
        for (b, s) in &col.members {
            let q = grid.spec.q_center(b.index.q);
            parts.push((b.shots as f64 / col_shots, rotate_by_xi(s, q, xi)?));
        }
        let state = DensityMatrix::mixture(parts.iter().map(|(w, s)| (*w, s)))?;
        out.push(MarginalState { i: col.i, i_m: col.i_m, weight: col_shots / total as f64, state });
    }
    if skipped > 0 {
        tracing::debug!(skipped, "I_m columns without reconstructed bins were skipped");
    }
    Ok(out)
}

/// Precomputed phasor form of the grid for fast purity evaluation.
///
/// Under `U_Ξ` the element `ρ_jk` acquires `exp(i q (θ_j − θ_k))` with
/// `θ_j = Ξ_A z_a + Ξ_B z_b`; only the per-qubit flips `2Ξ_A`, `2Ξ_B` enter.
#[derive(Debug, Clone)]
pub struct PurityLandscape {
    columns: Vec<LandscapeColumn>,
    gamma_avg: f64,
}

#[derive(Debug, Clone)]
struct LandscapeColumn {
    weight: f64,
    entries: Vec<(f64, Mat4)>,
}

impl PurityLandscape {
    pub fn new(grid: &ConditionalGrid) -> Result<Self> {
        let total = grid.reconstructed_shots() as f64;
        if total == 0.0 {
            return Err(Error::InsufficientData("grid has no reconstructed bins".into()));
        }
        let columns = grid
            .columns()
            .iter()
            .map(|col| {
                let cs = col.shots() as f64;
                LandscapeColumn {
                    weight: cs / total,
                    entries: col
                        .members
                        .iter()
                        .map(|(b, s)| (grid.spec.q_center(b.index.q), s.matrix().scale(b.shots as f64 / cs)))
                        .collect(),
                }
            })
            .collect();
        let gamma_avg = grid.reconstructed().map(|(b, s)| b.shots as f64 / total * s.purity()).sum();
        Ok(Self { columns, gamma_avg })
    }

    pub fn gamma_avg(&self) -> f64 {
        self.gamma_avg
    }

    /// `γ_Ξ = Σ P(I_m) Tr[(ρ^M_Ξ(I_m))²]`.
    pub fn gamma(&self, xi: XiPair) -> f64 {
        let z = [1.0, -1.0];
        let theta: Vec<f64> = (0..4).map(|k| xi.xi_a * z[k / 2] + xi.xi_b * z[k % 2]).collect();
        let mut gamma = 0.0;
        for col in &self.columns {
            let mut acc = Mat4::zeros();
            for (q, m) in &col.entries {
                for j in 0..4 {
                    acc[(j, j)] += m[(j, j)];
                    for k in (j + 1)..4 {
                        let ph = C64::from_polar(1.0, q * (theta[j] - theta[k]));
                        acc[(j, k)] += m[(j, k)] * ph;
                    }
                }
            }
            let mut purity = 0.0;
            for j in 0..4 {
                purity += acc[(j, j)].re * acc[(j, j)].re;
                for k in (j + 1)..4 {
                    purity += 2.0 * acc[(j, k)].norm_sqr();
                }
            }
            gamma += col.weight * purity;
        }
        gamma
    }
}

pub fn purity_objective(grid: &ConditionalGrid, xi: XiPair) -> Result<f64> {
    Ok(PurityLandscape::new(grid)?.gamma(xi))
}

/// Coarse search box and refinement settings for Ξ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct XiSearch {
    pub half_range: f64,
    pub step: f64,
    pub refine_tol: f64,
}

impl Default for XiSearch {
    fn default() -> Self {
        Self { half_range: 3.0, step: 0.05, refine_tol: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XiFit {
    pub xi: XiPair,
    pub gamma_opt: f64,
    pub gamma_zero: f64,
    pub gamma_avg: f64,
}

fn refine(landscape: &PurityLandscape, start: XiPair, step: f64, tol: f64) -> (XiPair, f64) {
    let nm = NelderMead { initial_step: step, f_tol: tol, x_tol: 1e-10, max_iter: 4000 };
    let m = nm.minimize(|x| -landscape.gamma(XiPair::new(x[0], x[1])), &start.as_array());
    (XiPair::new(m.x[0], m.x[1]), -m.value)
}

/// Grid search over the box then simplex refinement of the incumbent.
/// Returns [`Error::FlatObjective`] when the landscape shows no structure.
pub fn optimize_xi_with(landscape: &PurityLandscape, search: &XiSearch) -> Result<XiFit> {
    let n = (2.0 * search.half_range / search.step).round() as i64;
    let axis: Vec<f64> = (0..=n).map(|k| -search.half_range + k as f64 * search.step).collect();
    let points: Vec<(f64, f64)> = axis.iter().flat_map(|&a| axis.iter().map(move |&b| (a, b))).collect();
    let values: Vec<f64> = points.par_iter().map(|&(a, b)| landscape.gamma(XiPair::new(a, b))).collect();
    let (mut best_k, mut max, mut min) = (0, f64::NEG_INFINITY, f64::INFINITY);
    for (k, &v) in values.iter().enumerate() {
        if v > max {
            max = v;
            best_k = k;
        }
        min = min.min(v);
    }
    if max - min < 1e-12 * max.abs().max(1e-300) {
        return Err(Error::FlatObjective);
    }
    let start = XiPair::new(points[best_k].0, points[best_k].1);
    let (xi, gamma_opt) = refine(landscape, start, search.step / 2.0, search.refine_tol);
    let (xi, gamma_opt) = if gamma_opt >= max { (xi, gamma_opt) } else { (start, max) };
    Ok(XiFit { xi, gamma_opt, gamma_zero: landscape.gamma(XiPair::default()), gamma_avg: landscape.gamma_avg() })
}

/// Local refinement only, from a known starting Ξ.
pub fn refine_xi(landscape: &PurityLandscape, start: XiPair, search: &XiSearch) -> XiFit {
    let (xi, gamma_opt) = refine(landscape, start, search.step / 2.0, search.refine_tol);
    let start_gamma = landscape.gamma(start);
    let (xi, gamma_opt) = if gamma_opt >= start_gamma { (xi, gamma_opt) } else { (start, start_gamma) };
    XiFit { xi, gamma_opt, gamma_zero: landscape.gamma(XiPair::default()), gamma_avg: landscape.gamma_avg() }
}

pub fn optimize_xi(grid: &ConditionalGrid, search: &XiSearch) -> Result<XiPair> {
    Ok(optimize_xi_with(&PurityLandscape::new(grid)?, search)?.xi)
}

/// Like [`optimize_xi`] but falls back to `Ξ = 0` on a flat landscape.
pub fn fit_xi(grid: &ConditionalGrid, search: &XiSearch) -> Result<XiFit> {
    let landscape = PurityLandscape::new(grid)?;
    match optimize_xi_with(&landscape, search) {
        Err(Error::FlatObjective) => {
            tracing::info!("purity landscape is flat; using Xi = (0, 0)");
            let g0 = landscape.gamma(XiPair::default());
            Ok(XiFit { xi: XiPair::default(), gamma_opt: g0, gamma_zero: g0, gamma_avg: landscape.gamma_avg() })
        }
        other => other,
    }
}

/// `r = 1 − γ_Ξ/γ_avg`.
pub fn purity_reduction(grid: &ConditionalGrid, xi_opt: XiPair) -> Result<f64> {
    let landscape = PurityLandscape::new(grid)?;
    Ok(1.0 - landscape.gamma(xi_opt) / landscape.gamma_avg())
}
