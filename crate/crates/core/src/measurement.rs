//! Conditional two-qubit state after a weak joint `ZI + IZ` measurement.
//!
//! Outcomes `(I_m, Q_m)` are expressed in the same units as `sigma_m`
//! (σ units with the default `sigma_m = 1`). The closed forms are evaluated in
//! likelihood-ratio coordinates `I_m·Ī/σ²`, `Q_m·Ī/σ²`, where `Ī = σ√(2Λ)` is
//! the distance between the `|gg⟩` pointer and the odd-parity pointer. In those
//! coordinates the even/odd posterior ratio is exactly `e^{-Λ} cosh(I)`.
//!
//! States are expressed in the tomography frame, in which the prepared `|++⟩`
//! appears as `|−i,−i⟩` (the printed Λ = 0 forms give `⟨YY⟩ = C`, `⟨XX⟩ = 0`).

use std::f64::consts::FRAC_PI_2;

use nalgebra::Vector4;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quantum::{c, DensityMatrix, Mat4, PauliLabel, C64};

/// Characterisation parameters of the measurement chain and tomography.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub c_t2_alice: f64,
    pub c_t2_bob: f64,
    pub c_tomo: f64,
    pub eta_a: f64,
    pub eta_b: f64,
    /// Stark phase accrued by Alice per unit measurement strength (rad).
    pub xi_a: f64,
    /// Stark phase accrued by Bob per unit measurement strength (rad).
    pub xi_b: f64,
    /// Mean of the `Q_m` outcome distribution, units of `sigma_m`.
    pub q_bar: f64,
    /// Per-quadrature outcome noise; defines the outcome unit.
    pub sigma_m: f64,
}

impl ModelParams {
    /// Characterised device values, zero `Q_m` offset, σ units.
    pub fn device() -> Self {
        Self {
            c_t2_alice: 0.86,
            c_t2_bob: 0.85,
            c_tomo: 0.90,
            eta_a: 0.53,
            eta_b: 0.42,
            xi_a: 0.27,
            xi_b: 1.02,
            q_bar: 0.0,
            sigma_m: 1.0,
        }
    }

    /// Unit contrasts and efficiencies, no Stark shifts.
    pub fn ideal() -> Self {
        Self {
            c_t2_alice: 1.0,
            c_t2_bob: 1.0,
            c_tomo: 1.0,
            eta_a: 1.0,
            eta_b: 1.0,
            xi_a: 0.0,
            xi_b: 0.0,
            q_bar: 0.0,
            sigma_m: 1.0,
        }
    }

    /// `(field, message)` for every violated invariant.
    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        for (name, v) in [
            ("c_t2_alice", self.c_t2_alice),
            ("c_t2_bob", self.c_t2_bob),
            ("c_tomo", self.c_tomo),
        ] {
            if !(0.0..=1.0).contains(&v) {
                out.push((name, format!("contrast {v} outside [0, 1]")));
            }
        }
        for (name, v) in [("eta_a", self.eta_a), ("eta_b", self.eta_b)] {
            if !(v > 0.0 && v <= 1.0) {
                out.push((name, format!("efficiency {v} outside (0, 1]")));
            }
        }
        for (name, v) in [("xi_a", self.xi_a), ("xi_b", self.xi_b), ("q_bar", self.q_bar)] {
            if !v.is_finite() {
                out.push((name, format!("{v} is not finite")));
            }
        }
        if !(self.sigma_m > 0.0 && self.sigma_m.is_finite()) {
            out.push(("sigma_m", format!("{} must be positive", self.sigma_m)));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            None => Ok(()),
            Some((name, reason)) => Err(invalid(name, reason)),
        }
    }

    /// Pointer separation `Ī` for the given strength.
    pub fn pointer_separation(&self, lambda: f64) -> f64 {
        self.sigma_m * (2.0 * lambda).sqrt()
    }

    /// Per-qubit coherence factor `C_T2 · exp(-(1-η)/η · Λ/2)`.
    fn qubit_coherence(c_t2: f64, eta: f64, lambda: f64) -> f64 {
        c_t2 * (-(1.0 - eta) / eta * lambda / 2.0).exp()
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::device()
    }
}

/// Weak-measurement outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub i_m: f64,
    pub q_m: f64,
}

impl Outcome {
    pub fn new(i_m: f64, q_m: f64) -> Self {
        Self { i_m, q_m }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(invalid("lambda", format!("{lambda} must be finite and non-negative")));
    }
    Ok(())
}

pub fn contrast(lambda: f64, p: &ModelParams) -> Result<f64> {
    check_lambda(lambda)?;
    let decay = (1.0 - p.eta_a) / p.eta_a + (1.0 - p.eta_b) / p.eta_b;
    Ok(p.c_t2_alice * p.c_t2_bob * p.c_tomo * (-decay * lambda / 2.0).exp())
}

pub fn strength_from_separation(i_bar: f64, sigma_m: f64) -> Result<f64> {
    if !(sigma_m > 0.0) {
        return Err(invalid("sigma_m", format!("{sigma_m} must be positive")));
    }
    Ok(i_bar * i_bar / (2.0 * sigma_m * sigma_m))
}

/// The five printed conditional Pauli components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedFormPaulis {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
    pub yx: f64,
    pub zz: f64,
    pub theta_minus: f64,
    pub theta_plus: f64,
}

impl ClosedFormPaulis {
    pub const LABELS: [&'static str; 5] = ["XX", "YY", "XY", "YX", "ZZ"];

    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "XX" => Some(self.xx),
            "YY" => Some(self.yy),
            "XY" => Some(self.xy),
            "YX" => Some(self.yx),
            "ZZ" => Some(self.zz),
            _ => None,
        }
    }

    pub fn values(&self) -> [(&'static str, f64); 5] {
        [("XX", self.xx), ("YY", self.yy), ("XY", self.xy), ("YX", self.yx), ("ZZ", self.zz)]
    }
}

/// `ln(e^{-Λ} cosh I)` without overflow.
fn ln_even_odd_ratio(lambda: f64, i: f64) -> f64 {
    let a = i.abs();
    -lambda + a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Precomputed conditional-state model at one measurement strength.
#[derive(Debug, Clone)]
pub struct ConditionalModel {
    lambda: f64,
    params: ModelParams,
    /// `Ī/σ²`: converts outcome units to likelihood-ratio coordinates.
    llr_scale: f64,
    m_alice: f64,
    m_bob: f64,
    contrast: f64,
}

impl ConditionalModel {
    pub fn new(lambda: f64, params: &ModelParams) -> Result<Self> {
        check_lambda(lambda)?;
        params.validate()?;
        let i_bar = params.pointer_separation(lambda);
        Ok(Self {
            lambda,
            params: *params,
            llr_scale: i_bar / (params.sigma_m * params.sigma_m),
            m_alice: ModelParams::qubit_coherence(params.c_t2_alice, params.eta_a, lambda),
            m_bob: ModelParams::qubit_coherence(params.c_t2_bob, params.eta_b, lambda),
            contrast: contrast(lambda, params)?,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn contrast(&self) -> f64 {
        self.contrast
    }

    /// Likelihood-ratio coordinates `(I, Q, Q̄)` of an outcome.
    pub fn llr_coordinates(&self, o: Outcome) -> (f64, f64, f64) {
        (o.i_m * self.llr_scale, o.q_m * self.llr_scale, self.params.q_bar * self.llr_scale)
    }

    /// Rate (rad per outcome unit of `Q_m`) at which the odd-manifold phase
    /// winds; the purity-optimal unwinding is `Ξ = (rate/4, −rate/4)`.
    pub fn fringe_rate(&self) -> f64 {
        self.llr_scale
    }

    fn thetas(&self, q_bar_llr: f64) -> (f64, f64) {
        let p = &self.params;
        let minus = q_bar_llr + (p.xi_a - p.xi_b) * self.lambda;
        let plus = (p.xi_a + p.xi_b) * self.lambda;
        (minus, plus)
    }

    /// Closed forms at likelihood-ratio coordinates.
    pub fn closed_form_llr(&self, i: f64, q: f64, q_bar: f64) -> ClosedFormPaulis {
        let (theta_minus, theta_plus) = self.thetas(q_bar);
        let ln_x = ln_even_odd_ratio(self.lambda, i);
        // 1/(x+1) and (x-1)/(x+1) in overflow-safe form
        let inv_den = 1.0 / (1.0 + ln_x.exp());
        let zz_shape = (0.5 * ln_x).tanh();
        let e = (-self.lambda).exp();
        let fringe = q - theta_minus;
        let c = self.contrast;
        ClosedFormPaulis {
            xx: c * (-e * theta_plus.cos() + fringe.cos()) * inv_den,
            yy: c * (e * theta_plus.cos() + fringe.cos()) * inv_den,
            xy: c * (e * theta_plus.sin() - fringe.sin()) * inv_den,
            yx: c * (e * theta_plus.sin() + fringe.sin()) * inv_den,
            zz: self.params.c_tomo * zz_shape,
            theta_minus,
            theta_plus,
        }
    }

    pub fn closed_form(&self, o: Outcome) -> ClosedFormPaulis {
        let (i, q, qb) = self.llr_coordinates(o);
        self.closed_form_llr(i, q, qb)
    }

    /// Normalised post-measurement pure state before dephasing.
    pub fn amplitudes(&self, o: Outcome) -> Vector4<C64> {
        let (i, q, qb) = self.llr_coordinates(o);
        self.amplitudes_llr(i, q, qb)
    }

    fn amplitudes_llr(&self, i: f64, q: f64, q_bar: f64) -> Vector4<C64> {
        let lam = self.lambda;
        // log pointer weights for gg, ge, eg, ee
        let lw = [-lam + i, 0.0, 0.0, -lam - i];
        let max = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = lw.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = w.iter().sum();
        let kick = 0.5 * (q_bar - q);
        let alpha_a = FRAC_PI_2 + self.params.xi_a * lam + kick;
        let alpha_b = FRAC_PI_2 + self.params.xi_b * lam - kick;
        Vector4::from_fn(|k, _| {
            let za = if k < 2 { 1.0 } else { -1.0 };
            let zb = if k % 2 == 0 { 1.0 } else { -1.0 };
            let phase = 0.5 * (alpha_a * za + alpha_b * zb);
            C64::from_polar((w[k] / total).sqrt(), phase)
        })
    }

    /// Real Schur-product dephasing mask (per-qubit T2 and inefficiency).
    pub fn dephasing_mask(&self) -> Mat4 {
        Mat4::from_fn(|r, col| {
            let flip_a = (r / 2) != (col / 2);
            let flip_b = (r % 2) != (col % 2);
            let mut v = 1.0;
            if flip_a {
                v *= self.m_alice;
            }
            if flip_b {
                v *= self.m_bob;
            }
            c(v, 0.0)
        })
    }

    fn state_matrix(&self, psi: &Vector4<C64>) -> Mat4 {
        let pure = psi * psi.adjoint();
        let mask = self.dephasing_mask();
        let ct = self.params.c_tomo;
        pure.component_mul(&mask).scale(ct) + Mat4::identity().scale((1.0 - ct) / 4.0)
    }

    /// Full conditional state; the five printed components are cross-checked.
    pub fn state(&self, o: Outcome) -> Result<DensityMatrix> {
        let rho = DensityMatrix::from_approx(self.state_matrix(&self.amplitudes(o)))?;
        let closed = self.closed_form(o);
        for (name, expected) in closed.values() {
            let got = rho.expectation(PauliLabel::parse(name).expect("static label"));
            if (got - expected).abs() > 1e-6 {
                return Err(Error::ModelInconsistency(format!(
                    "<{name}> = {got} but closed form gives {expected} at {o:?}, lambda {}",
                    self.lambda
                )));
            }
        }
        Ok(rho)
    }
}

pub fn conditional_pauli_closed_form(lambda: f64, outcome: Outcome, p: &ModelParams) -> Result<ClosedFormPaulis> {
    Ok(ConditionalModel::new(lambda, p)?.closed_form(outcome))
}

pub fn conditional_state(lambda: f64, outcome: Outcome, p: &ModelParams) -> Result<DensityMatrix> {
    ConditionalModel::new(lambda, p)?.state(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn contrast_values() {
        let p = ModelParams::device();
        assert_abs_diff_eq!(contrast(0.0, &p).unwrap(), 0.86 * 0.85 * 0.90, epsilon = 1e-15);
        assert_abs_diff_eq!(contrast(0.0, &p).unwrap(), 0.6579, epsilon = 1e-12);
        let mut unit = p;
        unit.eta_a = 1.0;
        unit.eta_b = 1.0;
        assert_abs_diff_eq!(contrast(3.7, &unit).unwrap(), 0.6579, epsilon = 1e-12);
        assert!(contrast(200.0, &p).unwrap() < 1e-50);
        assert!(contrast(-0.1, &p).is_err());
        let mut last = f64::INFINITY;
        for k in 0..50 {
            let v = contrast(k as f64 * 0.2, &p).unwrap();
            assert!(v <= last);
            last = v;
        }
    }

    #[test]
    fn strength_values() {
        assert_eq!(strength_from_separation(0.0, 1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(strength_from_separation(2.0, 1.0).unwrap(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(strength_from_separation(2.6f64.sqrt(), 1.0).unwrap(), 1.3, epsilon = 1e-14);
        assert!(strength_from_separation(1.0, 0.0).is_err());
        assert!(strength_from_separation(1.0, -1.0).is_err());
    }

    #[test]
    fn zz_closed_form_points() {
        let p = ModelParams { q_bar: 0.0, ..ModelParams::device() };
        let zero = conditional_pauli_closed_form(0.0, Outcome::new(0.0, 0.0), &p).unwrap();
        assert_abs_diff_eq!(zero.zz, 0.0, epsilon = 1e-15);

        let at = conditional_pauli_closed_form(1.3, Outcome::new(0.0, 0.0), &p).unwrap();
        let e = (-1.3f64).exp();
        assert_abs_diff_eq!(at.zz, 0.90 * (e - 1.0) / (e + 1.0), epsilon = 1e-14);
        assert_abs_diff_eq!(at.zz, -0.514, epsilon = 1e-3);

        let far = conditional_pauli_closed_form(1.3, Outcome::new(500.0, 0.0), &p).unwrap();
        assert_abs_diff_eq!(far.zz, 0.90, epsilon = 1e-12);
        assert!(far.xx.abs() < 1e-12);
    }

    #[test]
    fn ideal_zero_strength_is_frame_rotated_plus_plus() {
        let rho = conditional_state(0.0, Outcome::new(0.3, -1.2), &ModelParams::ideal()).unwrap();
        let pv = rho.pauli_expectations();
        // |−i,−i⟩: YI = IY = -1, YY = +1, everything else zero
        assert_abs_diff_eq!(pv.by_name("YY").unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pv.by_name("YI").unwrap(), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pv.by_name("IY").unwrap(), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pv.by_name("XX").unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn strong_measurement_dephases_odd_manifold() {
        let p = ModelParams::device();
        let rho = conditional_state(6.0, Outcome::new(0.0, 0.4), &p).unwrap();
        let pv = rho.pauli_expectations();
        assert_abs_diff_eq!(pv.by_name("ZZ").unwrap(), -0.90, epsilon = 0.01);
        for name in ["XX", "YY", "XY", "YX"] {
            assert!(pv.by_name(name).unwrap().abs() < 1e-3, "{name}");
        }
    }

    #[test]
    fn sum_identity_cancels_even_terms() {
        let p = ModelParams { q_bar: 0.4, ..ModelParams::device() };
        let model = ConditionalModel::new(0.8, &p).unwrap();
        for &(i, q) in &[(0.0, 0.0), (1.3, -2.0), (-0.7, 3.1)] {
            let cf = model.closed_form_llr(i, q, 0.4);
            let e = (-0.8f64).exp();
            let rhs = 2.0 * model.contrast() * (q - cf.theta_minus).cos() / (e * f64::cosh(i) + 1.0);
            assert_abs_diff_eq!(cf.xx + cf.yy, rhs, epsilon = 1e-12);
        }
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = ModelParams::device();
        p.eta_a = 1.3;
        assert!(ConditionalModel::new(1.0, &p).is_err());
        assert_eq!(p.violations()[0].0, "eta_a");
    }
}
