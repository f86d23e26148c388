//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::f64::consts::PI;

use joint_discord::marginal::ConditionalGrid;
use joint_discord::measurement::{ConditionalModel, ModelParams, Outcome};
use joint_discord::quantum::{DensityMatrix, Subsystem, C64};
use joint_discord::sampling::BinSpec;
use nalgebra::{Matrix2, Matrix4, SymmetricEigen, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Normalised sum of `rank` random rank-one projectors.
pub fn random_state(rng: &mut ChaCha8Rng, rank: usize) -> DensityMatrix {
    let mut m = Matrix4::<C64>::zeros();
    for _ in 0..rank {
        let v = Vector4::from_fn(|_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        m += v * v.adjoint();
    }
    let tr = m.trace();
    DensityMatrix::from_approx(m / tr).unwrap()
}

/// Direct transcription of the five printed components, no overflow guards.
pub fn closed_form_oracle(lambda: f64, o: Outcome, p: &ModelParams) -> [f64; 5] {
    let scale = (2.0 * lambda).sqrt() / p.sigma_m;
    let (i, q, qb) = (o.i_m * scale, o.q_m * scale, p.q_bar * scale);
    let decay = (1.0 - p.eta_a) / p.eta_a + (1.0 - p.eta_b) / p.eta_b;
    let contrast = p.c_t2_alice * p.c_t2_bob * p.c_tomo * (-decay * lambda / 2.0).exp();
    let tm = qb + p.xi_a * lambda - p.xi_b * lambda;
    let tp = p.xi_a * lambda + p.xi_b * lambda;
    let x = (-lambda).exp() * i.cosh();
    let e = (-lambda).exp();
    let den = x + 1.0;
    [
        contrast * (-e * tp.cos() + (q - tm).cos()) / den,
        contrast * (e * tp.cos() + (q - tm).cos()) / den,
        contrast * (e * tp.sin() - (q - tm).sin()) / den,
        contrast * (e * tp.sin() + (q - tm).sin()) / den,
        p.c_tomo * (x - 1.0) / den,
    ]
}

/// Outcome density of the four-pointer mixture, in σ units.
pub fn outcome_density(lambda: f64, p: &ModelParams, i_m: f64, q_m: f64) -> f64 {
    let i_bar = p.pointer_separation(lambda);
    let s = p.sigma_m;
    let g = |x: f64| (-(x * x) / (2.0 * s * s)).exp() / (s * (2.0 * PI).sqrt());
    (0.25 * g(i_m - i_bar) + 0.5 * g(i_m) + 0.25 * g(i_m + i_bar)) * g(q_m - p.q_bar)
}

/// Noise-free grid: each bin holds the density-weighted average of the model
/// state over its area (`sub × sub` midpoint quadrature) and a shot weight
/// proportional to its probability mass.
pub fn theory_grid(lambda: f64, p: &ModelParams, spec: BinSpec, scale: f64, sub: usize) -> ConditionalGrid {
    let model = ConditionalModel::new(lambda, p).unwrap();
    let (wi, wq) = (spec.i_width(), spec.q_width());
    let cell = wi * wq / (sub * sub) as f64;
    let states: Vec<_> = spec
        .indices()
        .filter_map(|idx| {
            let centre = spec.center(idx);
            let mut acc = Matrix4::<C64>::zeros();
            let mut mass = 0.0;
            for a in 0..sub {
                for b in 0..sub {
                    let i_m = centre.i_m + wi * ((a as f64 + 0.5) / sub as f64 - 0.5);
                    let q_m = centre.q_m + wq * ((b as f64 + 0.5) / sub as f64 - 0.5);
                    let w = outcome_density(lambda, p, i_m, q_m) * cell;
                    acc += model.state(Outcome::new(i_m, q_m)).unwrap().matrix().scale(w);
                    mass += w;
                }
            }
            let shots = (scale * mass).round() as u64;
            (shots > 0).then(|| (idx, shots, DensityMatrix::from_approx(acc / C64::new(mass, 0.0)).unwrap()))
        })
        .collect();
    ConditionalGrid::from_states(spec, lambda, states)
}

pub fn ket(a: &[C64; 4]) -> DensityMatrix {
    DensityMatrix::from_pure(&Vector4::from_column_slice(a).normalize()).unwrap()
}

/// `¼(|ge⟩⟨ge| + |eg⟩⟨eg| + |−+⟩⟨−+| + |+−⟩⟨+−|)`: separable but not
/// diagonal in any local product basis.
pub fn four_term_mixture() -> DensityMatrix {
    let ge = DensityMatrix::basis(0, 1);
    let eg = DensityMatrix::basis(1, 0);
    let mp = ket(&[C64::new(0.5, 0.0), C64::new(0.5, 0.0), C64::new(-0.5, 0.0), C64::new(-0.5, 0.0)]);
    let pm = ket(&[C64::new(0.5, 0.0), C64::new(-0.5, 0.0), C64::new(0.5, 0.0), C64::new(-0.5, 0.0)]);
    DensityMatrix::mixture([(0.25, &ge), (0.25, &eg), (0.25, &mp), (0.25, &pm)]).unwrap()
}

fn entropy_bits(ev: impl IntoIterator<Item = f64>) -> f64 {
    ev.into_iter().filter(|&l| l > 1e-14).map(|l| -l * l.log2()).sum()
}

fn entropy4(m: &Matrix4<C64>) -> f64 {
    entropy_bits(SymmetricEigen::new(*m).eigenvalues.iter().copied())
}

/// Entropy of a (possibly unnormalised) 2×2 Hermitian block, normalised first.
fn entropy2(m: &Matrix2<C64>) -> f64 {
    let tr = (m[(0, 0)] + m[(1, 1)]).re;
    let dz = (m[(0, 0)] - m[(1, 1)]).re / tr;
    let off = m[(0, 1)].norm() / tr;
    let r = (dz * dz + 4.0 * off * off).sqrt().min(1.0);
    entropy_bits([(1.0 + r) / 2.0, (1.0 - r) / 2.0])
}

/// Block of `rho` with the measured qubit fixed to rows `a`, cols `b`.
fn block(rho: &Matrix4<C64>, measured: Subsystem, a: usize, b: usize) -> Matrix2<C64> {
    Matrix2::from_fn(|i, j| match measured {
        Subsystem::Alice => rho[(2 * a + i, 2 * b + j)],
        Subsystem::Bob => rho[(2 * i + a, 2 * j + b)],
    })
}

fn reduced(rho: &Matrix4<C64>, keep: Subsystem) -> Matrix2<C64> {
    let traced = match keep {
        Subsystem::Alice => Subsystem::Bob,
        Subsystem::Bob => Subsystem::Alice,
    };
    block(rho, traced, 0, 0) + block(rho, traced, 1, 1)
}

/// Discord by exhaustive search over an `n_theta × n_phi` grid of projective
/// measurements on `measured`, computed from the matrix definitions only.
pub fn brute_force_discord(rho: &DensityMatrix, measured: Subsystem, n_theta: usize, n_phi: usize) -> f64 {
    let m = rho.matrix();
    let s_measured = entropy2(&reduced(m, measured));
    let s_joint = entropy4(m);
    let blocks = [[block(m, measured, 0, 0), block(m, measured, 0, 1)], [block(m, measured, 1, 0), block(m, measured, 1, 1)]];
    let mut best = f64::INFINITY;
    for t in 0..n_theta {
        let theta = PI * t as f64 / (n_theta - 1) as f64;
        for p in 0..n_phi {
            let phi = 2.0 * PI * p as f64 / n_phi as f64;
            // unit vectors |n+> and |n->
            let plus = [C64::new((theta / 2.0).cos(), 0.0), C64::from_polar((theta / 2.0).sin(), phi)];
            let minus = [C64::new(-(theta / 2.0).sin(), 0.0), C64::from_polar((theta / 2.0).cos(), phi)];
            let mut h = 0.0;
            for v in [plus, minus] {
                // <v| rho |v> on the measured qubit leaves a 2×2 block on the other
                let mut post = Matrix2::<C64>::zeros();
                for a in 0..2 {
                    for b in 0..2 {
                        post += blocks[a][b] * (v[a].conj() * v[b]);
                    }
                }
                let prob = (post[(0, 0)] + post[(1, 1)]).re;
                if prob > 1e-14 {
                    h += prob * entropy2(&post);
                }
            }
            best = best.min(h);
        }
    }
    s_measured - s_joint + best
}
