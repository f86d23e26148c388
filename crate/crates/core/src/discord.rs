//! Mutual information, classical correlation and discord of two-qubit states.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::NelderMead;
use crate::quantum::{
    apply_local_unitary, entropy_of_spectrum, hermitian_eigenvalues2, partial_trace, rz, BlochProjector,
    DensityMatrix, Mat2, Subsystem, C64,
};

/// Search settings for the projective-measurement minimisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscordOptions {
    pub n_theta: usize,
    pub n_phi: usize,
    /// Number of best grid points refined locally.
    pub n_refine: usize,
    pub tolerance: f64,
}

impl Default for DiscordOptions {
    fn default() -> Self {
        Self { n_theta: 24, n_phi: 48, n_refine: 3, tolerance: 1e-12 }
    }
}

/// Discord slightly below zero from optimizer noise is reported as zero.
pub const NEGATIVE_CLAMP: f64 = -1e-9;

pub fn mutual_information(rho: &DensityMatrix) -> f64 {
    let sa = partial_trace(rho, Subsystem::Alice).entropy();
    let sb = partial_trace(rho, Subsystem::Bob).entropy();
    (sa + sb - rho.entropy()).max(0.0)
}

/// Unnormalised state of the unmeasured qubit after projecting the measured
/// one onto `proj`.
fn conditioned(rho: &DensityMatrix, measured: Subsystem, proj: &Mat2) -> Mat2 {
    let m = rho.matrix();
    let mut out = Mat2::zeros();
    for r in 0..2 {
        for s in 0..2 {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..2 {
                for j in 0..2 {
                    // ⟨j|Π|i⟩ contracts the measured index
                    let (row, col) = match measured {
                        Subsystem::Alice => (2 * i + r, 2 * j + s),
                        Subsystem::Bob => (2 * r + i, 2 * s + j),
                    };
                    acc += proj[(j, i)] * m[(row, col)];
                }
            }
            out[(r, s)] = acc;
        }
    }
    out
}

/// Probability-weighted entropy of the unmeasured qubit after measuring
/// `measured` along the Bloch direction `(theta, phi)`.
pub fn measured_conditional_entropy(rho: &DensityMatrix, measured: Subsystem, theta: f64, phi: f64) -> f64 {
    let (plus, minus) = BlochProjector::new(theta, phi).projectors();
    [plus, minus]
        .iter()
        .map(|proj| {
            let cond = conditioned(rho, measured, proj);
            let p = cond.trace().re;
            if p <= 1e-15 {
                return 0.0;
            }
            let ev = hermitian_eigenvalues2(&cond.unscale(p));
            p * entropy_of_spectrum(&ev)
        })
        .sum()
}

/// Minimum conditional entropy with the argmin direction.
pub fn minimize_conditional_entropy(rho: &DensityMatrix, measured: Subsystem, opts: &DiscordOptions) -> Result<(f64, [f64; 2])> {
    let mut grid = Vec::with_capacity(opts.n_theta * opts.n_phi);
    for i in 0..opts.n_theta {
        let theta = if opts.n_theta > 1 { PI * i as f64 / (opts.n_theta - 1) as f64 } else { 0.0 };
        for j in 0..opts.n_phi {
            let phi = 2.0 * PI * j as f64 / opts.n_phi as f64;
            grid.push((measured_conditional_entropy(rho, measured, theta, phi), theta, phi));
        }
    }
    grid.sort_by(|a, b| a.0.total_cmp(&b.0));
    let incumbent = grid[0];
    let nm = NelderMead {
        initial_step: PI / opts.n_theta.max(2) as f64,
        f_tol: opts.tolerance,
        x_tol: 1e-9,
        max_iter: 2000,
    };
    let mut best = (incumbent.0, [incumbent.1, incumbent.2]);
    for &(_, theta, phi) in grid.iter().take(opts.n_refine.max(1)) {
        let m = nm.minimize(|x| measured_conditional_entropy(rho, measured, x[0], x[1]), &[theta, phi]);
        if m.value < best.0 {
            best = (m.value, [m.x[0], m.x[1]]);
        }
    }
    if best.0 > incumbent.0 + 1e-12 {
        return Err(Error::Optimizer(format!(
            "refinement ended at {} above grid incumbent {}",
            best.0, incumbent.0
        )));
    }
    Ok(best)
}

/// `J` for measurements on `side`: entropy of the other qubit minus the
/// minimal post-measurement conditional entropy.
pub fn classical_correlation(rho: &DensityMatrix, side: Subsystem, opts: &DiscordOptions) -> Result<f64> {
    let s_other = partial_trace(rho, side.other()).entropy();
    let (min, _) = minimize_conditional_entropy(rho, side, opts)?;
    Ok((s_other - min).max(0.0))
}

pub fn discord(rho: &DensityMatrix, side: Subsystem, opts: &DiscordOptions) -> Result<f64> {
    let d = mutual_information(rho) - classical_correlation(rho, side, opts)?;
    if d < NEGATIVE_CLAMP {
        return Err(Error::NegativeDiscord(d));
    }
    Ok(d.max(0.0))
}

/// Linear coupling between `Q_m` and the local phase applied to each qubit.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct XiPair {
    pub xi_a: f64,
    pub xi_b: f64,
}

impl XiPair {
    pub fn new(xi_a: f64, xi_b: f64) -> Self {
        Self { xi_a, xi_b }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.xi_a, self.xi_b]
    }
}

/// `U_Ξ ρ U_Ξ†` with `U_Ξ = exp(i Z Ξ_A q) ⊗ exp(i Z Ξ_B q)`.
pub fn rotate_by_xi(rho: &DensityMatrix, q_m: f64, xi: XiPair) -> Result<DensityMatrix> {
    apply_local_unitary(rho, &rz(-2.0 * xi.xi_a * q_m), &rz(-2.0 * xi.xi_b * q_m))
}
