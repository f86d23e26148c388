//! Two-qubit state algebra.
//!
//! Basis ordering is `|ab⟩` with index `2a + b`, where `a` is Alice's bit,
//! `b` is Bob's bit and `0 ≡ |g⟩` (Z eigenvalue +1), `1 ≡ |e⟩`. Pauli
//! labels are written Alice-first, so `ZI` acts on Alice only.

use std::fmt;

use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;
pub type Mat4 = Matrix4<C64>;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_FLOOR: f64 = -1e-10;
const UNITARY_TOL: f64 = 1e-10;

/// Eigenvalues at or below this are treated as exact zeros inside entropies.
pub const ENTROPY_FLOOR: f64 = 1e-10;

pub(crate) const fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Which half of the two-qubit register an operation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subsystem {
    Alice,
    Bob,
}

impl Subsystem {
    pub fn other(self) -> Self {
        match self {
            Subsystem::Alice => Subsystem::Bob,
            Subsystem::Bob => Subsystem::Alice,
        }
    }
}

/// Single-qubit Pauli operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Pauli {
        Pauli::ALL[i]
    }

    pub fn matrix(self) -> Mat2 {
        let z = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        match self {
            Pauli::I => Mat2::new(one, z, z, one),
            Pauli::X => Mat2::new(z, one, one, z),
            Pauli::Y => Mat2::new(z, c(0.0, -1.0), c(0.0, 1.0), z),
            Pauli::Z => Mat2::new(one, z, z, -one),
        }
    }

    fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    fn from_letter(ch: char) -> Option<Pauli> {
        match ch {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// Two-qubit Pauli product, Alice first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliLabel {
    pub alice: Pauli,
    pub bob: Pauli,
}

impl PauliLabel {
    pub const fn new(alice: Pauli, bob: Pauli) -> Self {
        Self { alice, bob }
    }

    /// Lexicographic position: `II, IX, IY, IZ, XI, ..., ZZ`.
    pub fn index(self) -> usize {
        4 * self.alice.index() + self.bob.index()
    }

    pub fn from_index(k: usize) -> Self {
        Self::new(Pauli::from_index(k / 4), Pauli::from_index(k % 4))
    }

    pub fn all() -> impl Iterator<Item = PauliLabel> {
        (0..16).map(PauliLabel::from_index)
    }

    pub fn parse(s: &str) -> Option<Self> {
        let mut chars = s.chars();
        let a = Pauli::from_letter(chars.next()?)?;
        let b = Pauli::from_letter(chars.next()?)?;
        chars.next().is_none().then_some(Self::new(a, b))
    }

    pub fn matrix(self) -> Mat4 {
        kron(&self.alice.matrix(), &self.bob.matrix())
    }
}

impl fmt::Display for PauliLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.alice.letter(), self.bob.letter())
    }
}

pub fn kron(a: &Mat2, b: &Mat2) -> Mat4 {
    Mat4::from_fn(|r, col| a[(r / 2, col / 2)] * b[(r % 2, col % 2)])
}

/// Rotation `exp(-i θ/2 σ)` about the given axis.
pub fn rotation(axis: Pauli, theta: f64) -> Mat2 {
    let (s, co) = (theta / 2.0).sin_cos();
    Mat2::identity().scale(co) - axis.matrix() * c(0.0, s)
}

pub fn rx(theta: f64) -> Mat2 {
    rotation(Pauli::X, theta)
}

pub fn ry(theta: f64) -> Mat2 {
    rotation(Pauli::Y, theta)
}

pub fn rz(theta: f64) -> Mat2 {
    rotation(Pauli::Z, theta)
}

fn max_abs(m: impl Iterator<Item = C64>) -> f64 {
    m.map(|z| z.norm()).fold(0.0, f64::max)
}

fn hermitian_deviation4(m: &Mat4) -> f64 {
    max_abs((m - m.adjoint()).iter().copied())
}

pub fn unitary_deviation(u: &Mat2) -> f64 {
    max_abs((u.adjoint() * u - Mat2::identity()).iter().copied())
}

/// Eigenvalues of a Hermitian 4×4 matrix, ascending.
pub fn hermitian_eigenvalues(m: &Mat4) -> [f64; 4] {
    let ev = m.symmetric_eigenvalues();
    let mut out = [ev[0], ev[1], ev[2], ev[3]];
    out.sort_by(f64::total_cmp);
    out
}

/// Eigenvalues of a Hermitian 2×2 matrix, ascending.
pub fn hermitian_eigenvalues2(m: &Mat2) -> [f64; 2] {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = m[(0, 1)];
    let mean = 0.5 * (a + d);
    let half = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    [mean - half, mean + half]
}

/// Shannon entropy in bits of a spectrum, with the clamp floor applied.
pub fn entropy_of_spectrum(eigenvalues: &[f64]) -> f64 {
    eigenvalues
        .iter()
        .filter(|&&l| l > ENTROPY_FLOOR)
        .map(|&l| -l * l.log2())
        .sum::<f64>()
        .max(0.0)
}

/// Validated two-qubit density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    elements: Mat4,
}

impl DensityMatrix {
    pub fn new(elements: Mat4) -> Result<Self> {
        let herm = hermitian_deviation4(&elements);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:.3e})")));
        }
        let tr = elements.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min = hermitian_eigenvalues(&elements)[0];
        if min < PSD_FLOOR {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self { elements })
    }

    /// Symmetrises and renormalises before validating; for matrices built by
    /// floating-point arithmetic that are states up to rounding.
    pub fn from_approx(elements: Mat4) -> Result<Self> {
        let sym = (elements + elements.adjoint()).scale(0.5);
        let tr = sym.trace().re;
        if tr.abs() < f64::MIN_POSITIVE {
            return Err(Error::InvalidState("zero trace".into()));
        }
        Self::new(sym.unscale(tr))
    }

    pub fn from_pure(psi: &Vector4<C64>) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let v = psi.unscale(norm);
        Self::from_approx(v * v.adjoint())
    }

    pub fn maximally_mixed() -> Self {
        Self { elements: Mat4::identity().scale(0.25) }
    }

    /// Computational basis state `|ab⟩`.
    pub fn basis(a: u8, b: u8) -> Self {
        let mut m = Mat4::zeros();
        let k = 2 * a as usize + b as usize;
        m[(k, k)] = c(1.0, 0.0);
        Self { elements: m }
    }

    pub fn product(alice: &QubitState, bob: &QubitState) -> Self {
        Self { elements: kron(alice.matrix(), bob.matrix()) }
    }

    /// Convex combination; weights must be non-negative and are renormalised.
    pub fn mixture<'a>(parts: impl IntoIterator<Item = (f64, &'a DensityMatrix)>) -> Result<Self> {
        let mut acc = Mat4::zeros();
        let mut total = 0.0;
        for (w, rho) in parts {
            if !(w >= 0.0) {
                return Err(invalid("weight", format!("{w} is negative")));
            }
            acc += rho.elements.scale(w);
            total += w;
        }
        if total <= 0.0 {
            return Err(Error::InvalidState("mixture with zero total weight".into()));
        }
        Self::from_approx(acc.unscale(total))
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.elements
    }

    pub fn element(&self, row: usize, col: usize) -> C64 {
        self.elements[(row, col)]
    }

    pub fn eigenvalues(&self) -> [f64; 4] {
        hermitian_eigenvalues(&self.elements)
    }

    pub fn purity(&self) -> f64 {
        self.elements.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn expectation(&self, label: PauliLabel) -> f64 {
        (self.elements * label.matrix()).trace().re
    }

    pub fn pauli_expectations(&self) -> PauliVector {
        pauli_expectations(self)
    }

    pub fn entropy(&self) -> f64 {
        von_neumann_entropy(self)
    }
}

/// Validated single-qubit density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitState {
    elements: Mat2,
}

impl QubitState {
    pub fn new(elements: Mat2) -> Result<Self> {
        let herm = max_abs((elements - elements.adjoint()).iter().copied());
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("qubit state not Hermitian ({herm:.3e})")));
        }
        let tr = elements.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("qubit trace {tr} differs from 1")));
        }
        if hermitian_eigenvalues2(&elements)[0] < PSD_FLOOR {
            return Err(Error::InvalidState("qubit state not PSD".into()));
        }
        Ok(Self { elements })
    }

    /// State with the given Bloch vector (|r| ≤ 1).
    pub fn from_bloch(x: f64, y: f64, z: f64) -> Result<Self> {
        let m = (Pauli::I.matrix() + Pauli::X.matrix().scale(x) + Pauli::Y.matrix().scale(y)
            + Pauli::Z.matrix().scale(z))
        .scale(0.5);
        Self::new(m)
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.elements
    }

    pub fn bloch(&self) -> [f64; 3] {
        let m = &self.elements;
        [2.0 * m[(0, 1)].re, -2.0 * m[(0, 1)].im, (m[(0, 0)] - m[(1, 1)]).re]
    }

    pub fn entropy(&self) -> f64 {
        entropy_of_spectrum(&hermitian_eigenvalues2(&self.elements))
    }
}

/// Sixteen Pauli expectation values, `II` first, lexicographic, Alice first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliVector {
    components: [f64; 16],
}

impl PauliVector {
    pub fn new(components: [f64; 16]) -> Self {
        Self { components }
    }

    pub fn components(&self) -> &[f64; 16] {
        &self.components
    }

    pub fn get(&self, label: PauliLabel) -> f64 {
        self.components[label.index()]
    }

    pub fn set(&mut self, label: PauliLabel, value: f64) {
        self.components[label.index()] = value;
    }

    /// Lookup by two-letter name such as `"XY"`.
    pub fn by_name(&self, name: &str) -> Option<f64> {
        PauliLabel::parse(name).map(|l| self.get(l))
    }

    pub fn iter(&self) -> impl Iterator<Item = (PauliLabel, f64)> + '_ {
        PauliLabel::all().map(|l| (l, self.get(l)))
    }
}

impl Serialize for PauliVector {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(16))?;
        for (label, v) in self.iter() {
            map.serialize_entry(&label.to_string(), &v)?;
        }
        map.end()
    }
}

/// Hermitian unit-trace operator built from Pauli components. Not necessarily PSD.
#[derive(Debug, Clone, PartialEq)]
pub struct StateCandidate {
    elements: Mat4,
}

impl StateCandidate {
    pub fn matrix(&self) -> &Mat4 {
        &self.elements
    }

    pub fn eigenvalues(&self) -> [f64; 4] {
        hermitian_eigenvalues(&self.elements)
    }

    pub fn is_psd(&self) -> bool {
        self.eigenvalues()[0] >= PSD_FLOOR
    }

    pub fn into_density(self) -> Result<DensityMatrix> {
        DensityMatrix::from_approx(self.elements)
    }

    /// Clips negative eigenvalues and renormalises.
    pub fn project_psd(&self) -> DensityMatrix {
        let eig = self.elements.symmetric_eigen();
        let mut acc = Mat4::zeros();
        for k in 0..4 {
            let l = eig.eigenvalues[k].max(0.0);
            if l > 0.0 {
                let v = eig.eigenvectors.column(k);
                acc += (v * v.adjoint()).scale(l);
            }
        }
        DensityMatrix::from_approx(acc).unwrap_or_else(|_| DensityMatrix::maximally_mixed())
    }
}

pub fn pauli_expectations(rho: &DensityMatrix) -> PauliVector {
    let mut out = [0.0; 16];
    for label in PauliLabel::all() {
        out[label.index()] = rho.expectation(label);
    }
    PauliVector::new(out)
}

pub fn state_from_pauli(pv: &PauliVector) -> Result<StateCandidate> {
    let ii = pv.components[0];
    if (ii - 1.0).abs() > 1e-12 {
        return Err(invalid("II", format!("identity component must be 1, got {ii}")));
    }
    let mut m = Mat4::zeros();
    for (label, v) in pv.iter() {
        m += label.matrix().scale(v);
    }
    Ok(StateCandidate { elements: m.scale(0.25) })
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    entropy_of_spectrum(&rho.eigenvalues())
}

pub fn partial_trace(rho: &DensityMatrix, keep: Subsystem) -> QubitState {
    let m = rho.matrix();
    let el = |a: usize, b: usize, a2: usize, b2: usize| m[(2 * a + b, 2 * a2 + b2)];
    let reduced = match keep {
        Subsystem::Alice => Mat2::from_fn(|r, col| el(r, 0, col, 0) + el(r, 1, col, 1)),
        Subsystem::Bob => Mat2::from_fn(|r, col| el(0, r, 0, col) + el(1, r, 1, col)),
    };
    let sym = (reduced + reduced.adjoint()).scale(0.5);
    QubitState { elements: sym }
}

pub fn apply_local_unitary(rho: &DensityMatrix, ua: &Mat2, ub: &Mat2) -> Result<DensityMatrix> {
    let deviation = unitary_deviation(ua).max(unitary_deviation(ub));
    if deviation > UNITARY_TOL {
        return Err(Error::NotUnitary { deviation });
    }
    let u = kron(ua, ub);
    let out = u * rho.matrix() * u.adjoint();
    Ok(DensityMatrix { elements: (out + out.adjoint()).scale(0.5) })
}

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    let sqrt_rho = psd_sqrt(rho.matrix());
    let inner = sqrt_rho * sigma.matrix() * sqrt_rho;
    let inner = (inner + inner.adjoint()).scale(0.5);
    let tr: f64 = hermitian_eigenvalues(&inner).iter().map(|l| l.max(0.0).sqrt()).sum();
    (tr * tr).min(1.0)
}

fn psd_sqrt(m: &Mat4) -> Mat4 {
    let eig = m.symmetric_eigen();
    let mut acc = Mat4::zeros();
    for k in 0..4 {
        let l = eig.eigenvalues[k].max(0.0).sqrt();
        let v = eig.eigenvectors.column(k);
        acc += (v * v.adjoint()).scale(l);
    }
    acc
}

/// Projective measurement `{Π₊, Π₋}` along the Bloch direction `(θ, φ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochProjector {
    pub theta: f64,
    pub phi: f64,
}

impl BlochProjector {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    pub fn direction(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }

    /// `(Π₊, Π₋)`.
    pub fn projectors(&self) -> (Mat2, Mat2) {
        let [x, y, z] = self.direction();
        let n = Pauli::X.matrix().scale(x) + Pauli::Y.matrix().scale(y) + Pauli::Z.matrix().scale(z);
        let id = Mat2::identity();
        ((id + n).scale(0.5), (id - n).scale(0.5))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn plus_plus() -> DensityMatrix {
        let h = 0.5;
        DensityMatrix::from_pure(&Vector4::new(c(h, 0.0), c(h, 0.0), c(h, 0.0), c(h, 0.0))).unwrap()
    }

    fn bell_phi_plus() -> DensityMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DensityMatrix::from_pure(&Vector4::new(c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0))).unwrap()
    }

    fn odd_mixture() -> DensityMatrix {
        let ge = DensityMatrix::basis(0, 1);
        let eg = DensityMatrix::basis(1, 0);
        DensityMatrix::mixture([(0.5, &ge), (0.5, &eg)]).unwrap()
    }

    #[test]
    fn pauli_of_ground_state() {
        let pv = pauli_expectations(&DensityMatrix::basis(0, 0));
        for (label, v) in pv.iter() {
            let expected = match label.to_string().as_str() {
                "II" | "IZ" | "ZI" | "ZZ" => 1.0,
                _ => 0.0,
            };
            assert_abs_diff_eq!(v, expected, epsilon = 1e-14);
        }
    }

    #[test]
    fn pauli_of_maximally_mixed() {
        let pv = pauli_expectations(&DensityMatrix::maximally_mixed());
        assert_abs_diff_eq!(pv.components()[0], 1.0, epsilon = 1e-15);
        assert!(pv.components()[1..].iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn pauli_of_plus_plus() {
        let pv = plus_plus().pauli_expectations();
        for name in ["XI", "IX", "XX"] {
            assert_abs_diff_eq!(pv.by_name(name).unwrap(), 1.0, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(pv.by_name("YY").unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(pv.by_name("ZZ").unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn state_from_pauli_round_trip_and_errors() {
        let gg = DensityMatrix::basis(0, 0);
        let back = state_from_pauli(&gg.pauli_expectations()).unwrap().into_density().unwrap();
        assert!((back.matrix() - gg.matrix()).norm() < 1e-14);

        let mut only_ii = [0.0; 16];
        only_ii[0] = 1.0;
        let mixed = state_from_pauli(&PauliVector::new(only_ii)).unwrap();
        assert!((mixed.matrix() - DensityMatrix::maximally_mixed().matrix()).norm() < 1e-15);

        let mut bad = only_ii;
        bad[0] = 0.9;
        assert!(state_from_pauli(&PauliVector::new(bad)).is_err());
    }

    #[test]
    fn unphysical_pauli_vector_is_flagged() {
        let mut comps = [0.0; 16];
        comps[0] = 1.0;
        comps[PauliLabel::parse("ZZ").unwrap().index()] = 2.0;
        let cand = state_from_pauli(&PauliVector::new(comps)).unwrap();
        // diag(1+2, 1-2, 1-2, 1+2)/4 -> eigenvalues {-1/4, -1/4, 3/4, 3/4}
        let ev = cand.eigenvalues();
        assert_abs_diff_eq!(ev[0], -0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(ev[3], 0.75, epsilon = 1e-14);
        assert!(!cand.is_psd());
        assert!(cand.into_density().is_err());
    }

    #[test]
    fn entropies() {
        assert_abs_diff_eq!(plus_plus().entropy(), 0.0, epsilon = 1e-9);
        let half = QubitState::from_bloch(0.0, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(half.entropy(), 1.0, epsilon = 1e-14);
        let biased = QubitState::from_bloch(0.0, 0.0, 0.5).unwrap();
        let expected = -0.75 * 0.75f64.log2() - 0.25 * 0.25f64.log2();
        assert_abs_diff_eq!(biased.entropy(), expected, epsilon = 1e-14);
        assert_abs_diff_eq!(DensityMatrix::maximally_mixed().entropy(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn partial_traces() {
        let a = QubitState::from_bloch(0.3, -0.2, 0.5).unwrap();
        let b = QubitState::from_bloch(-0.1, 0.6, 0.2).unwrap();
        let prod = DensityMatrix::product(&a, &b);
        assert!((partial_trace(&prod, Subsystem::Alice).matrix() - a.matrix()).norm() < 1e-14);
        assert!((partial_trace(&prod, Subsystem::Bob).matrix() - b.matrix()).norm() < 1e-14);

        let half = Mat2::identity().scale(0.5);
        assert!((partial_trace(&bell_phi_plus(), Subsystem::Alice).matrix() - half).norm() < 1e-14);
        assert!((partial_trace(&odd_mixture(), Subsystem::Bob).matrix() - half).norm() < 1e-14);
    }

    #[test]
    fn local_unitaries() {
        let rho = plus_plus();
        let same = apply_local_unitary(&rho, &Mat2::identity(), &Mat2::identity()).unwrap();
        assert!((same.matrix() - rho.matrix()).norm() < 1e-15);

        let flipped = apply_local_unitary(&DensityMatrix::basis(0, 0), &rx(std::f64::consts::PI), &rx(std::f64::consts::PI))
            .unwrap();
        assert!((flipped.matrix() - DensityMatrix::basis(1, 1).matrix()).norm() < 1e-14);

        let not_unitary = Mat2::identity().scale(1.1);
        assert!(matches!(
            apply_local_unitary(&rho, &not_unitary, &Mat2::identity()),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn projector_pair_is_complete() {
        let p = BlochProjector::new(1.1, 4.0);
        let (plus, minus) = p.projectors();
        assert!((plus + minus - Mat2::identity()).norm() < 1e-14);
        assert!((plus * plus - plus).norm() < 1e-14);
        assert!((minus * minus - minus).norm() < 1e-14);
    }

    #[test]
    fn fidelity_bounds() {
        let rho = plus_plus();
        assert_abs_diff_eq!(fidelity(&rho, &rho), 1.0, epsilon = 1e-7);
        assert_abs_diff_eq!(fidelity(&DensityMatrix::basis(0, 0), &DensityMatrix::basis(1, 1)), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&rho, &DensityMatrix::maximally_mixed()), 0.25, epsilon = 1e-7);
    }

    #[test]
    fn label_parsing() {
        assert_eq!(PauliLabel::parse("XZ").unwrap().index(), 7);
        assert_eq!(PauliLabel::from_index(7).to_string(), "XZ");
        assert!(PauliLabel::parse("XQ").is_none());
        assert!(PauliLabel::parse("XYZ").is_none());
    }
}
