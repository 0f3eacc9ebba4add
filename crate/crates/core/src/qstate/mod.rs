//! Dense complex linear algebra on labelled tensor-product spaces.
//!
//! Every operator carries a [`HilbertLabel`] naming its tensor factors, so
//! tensor products, partial traces and the embedding of local operators into
//! a larger space can be checked against subsystem tags rather than raw
//! dimensions. Dimensions stay below ~64, so everything is a dense matrix.
//!
//! Qubit basis index 0 is `|↑_z⟩` and index 1 is `|↓_z⟩`. Polarisation is
//! stored in the circular basis `{|R⟩, |L⟩}`; the photon-number sector is a
//! Fock ladder `|0⟩..|N⟩`.

mod channel;
mod pauli;
mod psd;

pub use channel::{Channel, Superop};
pub use pauli::{pauli, pauli_assemble, pauli_expand, StokesTensor};
pub use psd::nearest_psd;

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Hermiticity tolerance for density operators.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Trace tolerance for density operators.
pub const TRACE_TOL: f64 = 1e-10;
/// Smallest admissible eigenvalue of a density operator.
pub const MIN_EIGEN_TOL: f64 = -1e-8;
/// Norm tolerance for pure states.
pub const NORM_TOL: f64 = 1e-12;

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub(crate) const I: C64 = C64 { re: 0.0, im: 1.0 };

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Subsystem tags of the simulated tensor space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tag {
    Atom1,
    Atom2,
    Polarization,
    PhotonNumber,
}

/// Ordered list of tensor factors with their dimensions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HilbertLabel {
    parts: Vec<(Tag, usize)>,
}

impl HilbertLabel {
    pub fn new(parts: impl IntoIterator<Item = (Tag, usize)>) -> Result<Self> {
        let parts: Vec<(Tag, usize)> = parts.into_iter().collect();
        for (i, (tag, dim)) in parts.iter().enumerate() {
            if parts[..i].iter().any(|(t, _)| t == tag) {
                return Err(Error::TagCollision(*tag));
            }
            if *dim == 0 {
                return Err(Error::param(format!("{tag:?}"), "dimension must be positive"));
            }
        }
        Ok(Self { parts })
    }

    pub fn single(tag: Tag, dim: usize) -> Self {
        Self { parts: vec![(tag, dim)] }
    }

    /// `atom1 ⊗ atom2`, the two-qubit space every protocol state lives on.
    pub fn atoms() -> Self {
        Self { parts: vec![(Tag::Atom1, 2), (Tag::Atom2, 2)] }
    }

    /// `polarization ⊗ photon-number` with a Fock cutoff of `cutoff`.
    pub fn photon(cutoff: usize) -> Self {
        Self { parts: vec![(Tag::Polarization, 2), (Tag::PhotonNumber, cutoff + 1)] }
    }

    pub fn parts(&self) -> &[(Tag, usize)] {
        &self.parts
    }

    pub fn dim(&self) -> usize {
        self.parts.iter().map(|(_, d)| d).product()
    }

    pub fn contains(&self, tag: Tag) -> bool {
        self.parts.iter().any(|(t, _)| *t == tag)
    }

    pub fn position(&self, tag: Tag) -> Option<usize> {
        self.parts.iter().position(|(t, _)| *t == tag)
    }

    pub fn dim_of(&self, tag: Tag) -> Option<usize> {
        self.parts.iter().find(|(t, _)| *t == tag).map(|(_, d)| *d)
    }

    pub fn concat(&self, other: &HilbertLabel) -> Result<Self> {
        Self::new(self.parts.iter().chain(other.parts.iter()).copied())
    }

    /// The label with `tags` removed.
    pub fn without(&self, tags: &[Tag]) -> Result<Self> {
        for t in tags {
            if !self.contains(*t) {
                return Err(Error::UnknownTag(*t));
            }
        }
        Ok(Self {
            parts: self.parts.iter().filter(|(t, _)| !tags.contains(t)).copied().collect(),
        })
    }

    /// Mixed-radix digits of a flat basis index, most significant factor first.
    fn digits(&self, mut index: usize, out: &mut [usize]) {
        for (k, (_, d)) in self.parts.iter().enumerate().rev() {
            out[k] = index % d;
            index /= d;
        }
    }
}

impl fmt::Display for HilbertLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.parts.iter().map(|(t, d)| format!("{t:?}({d})")).collect();
        write!(f, "{}", names.join(" ⊗ "))
    }
}

/// Index maps used by partial traces and embeddings: for every full basis
/// index, the flat index within the selected factors and within the rest.
struct Split {
    sel: Vec<usize>,
    rest: Vec<usize>,
}

fn split_indices(label: &HilbertLabel, selected: &[Tag]) -> Split {
    let n = label.parts.len();
    let is_sel: Vec<bool> = label.parts.iter().map(|(t, _)| selected.contains(t)).collect();
    // selected factors are ordered as in `selected`
    let sel_order: Vec<usize> = selected.iter().map(|t| label.position(*t).unwrap()).collect();
    let dim = label.dim();
    let mut digits = vec![0usize; n];
    let mut sel = Vec::with_capacity(dim);
    let mut rest = Vec::with_capacity(dim);
    for i in 0..dim {
        label.digits(i, &mut digits);
        let mut s = 0;
        for &k in &sel_order {
            s = s * label.parts[k].1 + digits[k];
        }
        let mut r = 0;
        for k in 0..n {
            if !is_sel[k] {
                r = r * label.parts[k].1 + digits[k];
            }
        }
        sel.push(s);
        rest.push(r);
    }
    Split { sel, rest }
}

/// A linear operator on a labelled space. No positivity or trace constraint.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    matrix: CMatrix,
    label: HilbertLabel,
}

impl Operator {
    pub fn new(matrix: CMatrix, label: HilbertLabel) -> Result<Self> {
        let d = label.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: matrix.nrows() });
        }
        Ok(Self { matrix, label })
    }

    pub fn identity(label: HilbertLabel) -> Self {
        let d = label.dim();
        Self { matrix: CMatrix::identity(d, d), label }
    }

    pub fn zeros(label: HilbertLabel) -> Self {
        let d = label.dim();
        Self { matrix: CMatrix::zeros(d, d), label }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn label(&self) -> &HilbertLabel {
        &self.label
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn hermitian_deviation(&self) -> f64 {
        hermitian_deviation(&self.matrix)
    }

    pub fn tensor(&self, other: &Operator) -> Result<Operator> {
        let label = self.label.concat(&other.label)?;
        Ok(Operator { matrix: self.matrix.kronecker(&other.matrix), label })
    }

    /// Trace out every factor not listed in `keep`; kept factors retain their
    /// original order.
    pub fn partial_trace(&self, keep: &[Tag]) -> Result<Operator> {
        for t in keep {
            if !self.label.contains(*t) {
                return Err(Error::UnknownTag(*t));
            }
        }
        let keep_ordered: Vec<Tag> = self
            .label
            .parts
            .iter()
            .map(|(t, _)| *t)
            .filter(|t| keep.contains(t))
            .collect();
        let kept = HilbertLabel::new(
            keep_ordered.iter().map(|t| (*t, self.label.dim_of(*t).unwrap())),
        )?;
        let split = split_indices(&self.label, &keep_ordered);
        let dk = kept.dim();
        let d = self.label.dim();
        let mut out = CMatrix::zeros(dk, dk);
        for i in 0..d {
            for j in 0..d {
                if split.rest[i] == split.rest[j] {
                    out[(split.sel[i], split.sel[j])] += self.matrix[(i, j)];
                }
            }
        }
        Ok(Operator { matrix: out, label: kept })
    }

    /// Matrix of this local operator acting on `full`, identity elsewhere.
    pub fn embed(&self, full: &HilbertLabel) -> Result<CMatrix> {
        let tags: Vec<Tag> = self.label.parts.iter().map(|(t, _)| *t).collect();
        for (t, d) in &self.label.parts {
            match full.dim_of(*t) {
                None => return Err(Error::UnknownTag(*t)),
                Some(fd) if fd != *d => {
                    return Err(Error::DimensionMismatch { expected: fd, actual: *d })
                }
                _ => {}
            }
        }
        let split = split_indices(full, &tags);
        let d = full.dim();
        let mut out = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                if split.rest[i] == split.rest[j] {
                    out[(i, j)] = self.matrix[(split.sel[i], split.sel[j])];
                }
            }
        }
        Ok(out)
    }

    /// `⟨bra| · |ket⟩` on the factors of `part`, leaving an operator on the rest.
    pub fn block(&self, part: &PureState, ket: &PureState) -> Result<Operator> {
        if part.label() != ket.label() {
            return Err(Error::DimensionMismatch {
                expected: part.label().dim(),
                actual: ket.label().dim(),
            });
        }
        let tags: Vec<Tag> = part.label().parts.iter().map(|(t, _)| *t).collect();
        let rest = self.label.without(&tags)?;
        let split = split_indices(&self.label, &tags);
        let dr = rest.dim();
        let d = self.label.dim();
        let mut out = CMatrix::zeros(dr, dr);
        let bra = part.vector();
        let ket = ket.vector();
        for i in 0..d {
            let bi = bra[split.sel[i]].conj();
            if bi == ZERO {
                continue;
            }
            for j in 0..d {
                let kj = ket[split.sel[j]];
                if kj == ZERO {
                    continue;
                }
                out[(split.rest[i], split.rest[j])] += bi * self.matrix[(i, j)] * kj;
            }
        }
        Ok(Operator { matrix: out, label: rest })
    }
}

pub(crate) fn hermitian_deviation(m: &CMatrix) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub(crate) fn min_eigenvalue(m: &CMatrix) -> f64 {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// A validated density operator: Hermitian, unit trace, positive semi-definite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator(Operator);

impl DensityOperator {
    pub fn new(op: Operator) -> Result<Self> {
        let herm = op.hermitian_deviation();
        if herm > HERMITIAN_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = op.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidTrace(tr.re));
        }
        let min = min_eigenvalue(op.matrix());
        if min < MIN_EIGEN_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(Self(op))
    }

    pub fn from_matrix(matrix: CMatrix, label: HilbertLabel) -> Result<Self> {
        Self::new(Operator::new(matrix, label)?)
    }

    /// Normalise a conditioned (trace ≤ 1) branch operator. Returns its weight
    /// and the renormalised state.
    pub fn normalize(op: Operator) -> Result<(f64, Self)> {
        let w = op.trace().re;
        if w <= 0.0 {
            return Err(Error::Degenerate(format!("branch weight {w} is not positive")));
        }
        let label = op.label.clone();
        let m = (&op.matrix + op.matrix.adjoint()) * c(0.5 / w, 0.0);
        Ok((w, Self::new(Operator::new(m, label)?)?))
    }

    pub fn pure(state: &PureState) -> Self {
        let v = state.vector();
        Self(Operator { matrix: v * v.adjoint(), label: state.label().clone() })
    }

    pub fn maximally_mixed(label: HilbertLabel) -> Self {
        let d = label.dim();
        Self(Operator {
            matrix: CMatrix::identity(d, d) * c(1.0 / d as f64, 0.0),
            label,
        })
    }

    pub fn operator(&self) -> &Operator {
        &self.0
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0.matrix
    }

    pub fn label(&self) -> &HilbertLabel {
        &self.0.label
    }

    pub fn into_operator(self) -> Operator {
        self.0
    }

    pub fn tensor(&self, other: &DensityOperator) -> Result<DensityOperator> {
        Ok(Self(self.0.tensor(&other.0)?))
    }

    pub fn partial_trace(&self, keep: &[Tag]) -> Result<DensityOperator> {
        Self::new(self.0.partial_trace(keep)?)
    }

    /// Convex combination `Σ w_i ρ_i`; weights must sum to 1.
    pub fn mix(parts: &[(f64, &DensityOperator)]) -> Result<DensityOperator> {
        let first = parts.first().ok_or_else(|| Error::Degenerate("empty mixture".into()))?;
        let label = first.1.label().clone();
        let d = label.dim();
        let mut m = CMatrix::zeros(d, d);
        for (w, rho) in parts {
            if rho.label() != &label {
                return Err(Error::DimensionMismatch { expected: d, actual: rho.label().dim() });
            }
            m += rho.matrix() * c(*w, 0.0);
        }
        Self::from_matrix(m, label)
    }

    /// `F(x) = ⟨x|ρ|x⟩`, clamped to `[0, 1]`.
    pub fn fidelity_pure(&self, x: &PureState) -> Result<f64> {
        fidelity_pure(self, x)
    }

    /// Trace distance `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityOperator) -> Result<f64> {
        if self.label().dim() != other.label().dim() {
            return Err(Error::DimensionMismatch {
                expected: self.label().dim(),
                actual: other.label().dim(),
            });
        }
        Ok(trace_norm_hermitian(&(self.matrix() - other.matrix())) / 2.0)
    }
}

pub(crate) fn trace_norm_hermitian(m: &CMatrix) -> f64 {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    h.symmetric_eigenvalues().iter().map(|e| e.abs()).sum()
}

/// `F(x) = ⟨x|ρ|x⟩`, clamped to `[0, 1]`.
pub fn fidelity_pure(rho: &DensityOperator, x: &PureState) -> Result<f64> {
    let d = rho.label().dim();
    if x.vector().len() != d {
        return Err(Error::DimensionMismatch { expected: d, actual: x.vector().len() });
    }
    let v = x.vector();
    let f = (v.adjoint() * rho.matrix() * v)[(0, 0)].re;
    if !(0.0..=1.0).contains(&f) {
        log::debug!("fidelity {f} clamped to [0, 1]");
    }
    Ok(f.clamp(0.0, 1.0))
}

/// A normalised state vector on a labelled space.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    vector: CVector,
    label: HilbertLabel,
}

impl PureState {
    pub fn new(vector: CVector, label: HilbertLabel) -> Result<Self> {
        if vector.len() != label.dim() {
            return Err(Error::DimensionMismatch { expected: label.dim(), actual: vector.len() });
        }
        let n = vector.norm();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n));
        }
        Ok(Self { vector, label })
    }

    /// Normalises `vector` before construction.
    pub fn normalized(vector: CVector, label: HilbertLabel) -> Result<Self> {
        let n = vector.norm();
        if n == 0.0 {
            return Err(Error::NotNormalized(0.0));
        }
        Self::new(vector / c(n, 0.0), label)
    }

    pub fn basis(label: HilbertLabel, index: usize) -> Result<Self> {
        let d = label.dim();
        if index >= d {
            return Err(Error::DimensionMismatch { expected: d, actual: index + 1 });
        }
        let mut v = CVector::zeros(d);
        v[index] = ONE;
        Ok(Self { vector: v, label })
    }

    pub fn qubit(tag: Tag, state: QubitState) -> Self {
        Self {
            vector: CVector::from_column_slice(&state.amplitudes()),
            label: HilbertLabel::single(tag, 2),
        }
    }

    pub fn polarization(pol: Polarization) -> Self {
        Self {
            vector: CVector::from_column_slice(&pol.jones()),
            label: HilbertLabel::single(Tag::Polarization, 2),
        }
    }

    pub fn fock(n: usize, cutoff: usize) -> Result<Self> {
        Self::basis(HilbertLabel::single(Tag::PhotonNumber, cutoff + 1), n)
    }

    pub fn bell(state: BellState) -> Self {
        Self {
            vector: CVector::from_column_slice(&state.amplitudes()),
            label: HilbertLabel::atoms(),
        }
    }

    /// A two-atom product state `|a⟩ ⊗ |b⟩`.
    pub fn atoms(a: QubitState, b: QubitState) -> Self {
        Self::qubit(Tag::Atom1, a).tensor(&Self::qubit(Tag::Atom2, b)).unwrap()
    }

    pub fn vector(&self) -> &CVector {
        &self.vector
    }

    pub fn label(&self) -> &HilbertLabel {
        &self.label
    }

    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let label = self.label.concat(&other.label)?;
        Ok(Self { vector: self.vector.kronecker(&other.vector), label })
    }

    pub fn projector(&self) -> DensityOperator {
        DensityOperator::pure(self)
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        self.vector.dotc(&other.vector)
    }
}

/// The six Pauli eigenstates of a qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QubitState {
    UpZ,
    DownZ,
    UpX,
    DownX,
    UpY,
    DownY,
}

impl QubitState {
    /// Probe order used by tomography tables.
    pub const ALL: [QubitState; 6] = [
        QubitState::UpX,
        QubitState::DownX,
        QubitState::UpY,
        QubitState::DownY,
        QubitState::UpZ,
        QubitState::DownZ,
    ];

    pub fn amplitudes(self) -> [C64; 2] {
        let h = FRAC_1_SQRT_2;
        match self {
            QubitState::UpZ => [ONE, ZERO],
            QubitState::DownZ => [ZERO, ONE],
            QubitState::UpX => [c(h, 0.0), c(h, 0.0)],
            QubitState::DownX => [c(h, 0.0), c(-h, 0.0)],
            QubitState::UpY => [c(h, 0.0), c(0.0, h)],
            QubitState::DownY => [c(h, 0.0), c(0.0, -h)],
        }
    }

    /// Pauli axis (1 = x, 2 = y, 3 = z) and eigenvalue sign.
    pub fn axis(self) -> (usize, f64) {
        match self {
            QubitState::UpX => (1, 1.0),
            QubitState::DownX => (1, -1.0),
            QubitState::UpY => (2, 1.0),
            QubitState::DownY => (2, -1.0),
            QubitState::UpZ => (3, 1.0),
            QubitState::DownZ => (3, -1.0),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            QubitState::UpZ => "uz",
            QubitState::DownZ => "dz",
            QubitState::UpX => "ux",
            QubitState::DownX => "dx",
            QubitState::UpY => "uy",
            QubitState::DownY => "dy",
        }
    }
}

impl FromStr for QubitState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        QubitState::ALL
            .into_iter()
            .find(|q| q.label() == s)
            .ok_or_else(|| Error::param("qubit state", format!("unknown label `{s}`")))
    }
}

/// Bell states in the canonical order `(Φ+, Φ−, Ψ+, Ψ−)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] =
        [BellState::PhiPlus, BellState::PhiMinus, BellState::PsiPlus, BellState::PsiMinus];

    pub fn amplitudes(self) -> [C64; 4] {
        let h = c(FRAC_1_SQRT_2, 0.0);
        match self {
            BellState::PhiPlus => [h, ZERO, ZERO, h],
            BellState::PhiMinus => [h, ZERO, ZERO, -h],
            BellState::PsiPlus => [ZERO, h, h, ZERO],
            BellState::PsiMinus => [ZERO, h, -h, ZERO],
        }
    }

    pub fn state(self) -> PureState {
        PureState::bell(self)
    }

    pub fn projector(self) -> CMatrix {
        let v = CVector::from_column_slice(&self.amplitudes());
        &v * v.adjoint()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            BellState::PhiPlus => "Phi+",
            BellState::PhiMinus => "Phi-",
            BellState::PsiPlus => "Psi+",
            BellState::PsiMinus => "Psi-",
        }
    }
}

impl fmt::Display for BellState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Unitary whose columns are the Bell states; `B† ρ B` is `ρ` in the Bell basis.
pub fn bell_basis_matrix() -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    for b in BellState::ALL {
        let amps = b.amplitudes();
        for (r, a) in amps.iter().enumerate() {
            m[(r, b.index())] = *a;
        }
    }
    m
}

/// Named polarisation states, stored as Jones vectors in the `{R, L}` basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    R,
    L,
    /// Antidiagonal, `(i|R⟩ + |L⟩)/√2`.
    A,
    /// Diagonal, `(i|R⟩ − |L⟩)/(√2 i) = (|R⟩ + i|L⟩)/√2`.
    D,
    /// Horizontal, `(|R⟩ + |L⟩)/√2`.
    H,
    /// Vertical, `i(|R⟩ − |L⟩)/√2`.
    V,
}

impl Polarization {
    pub fn jones(self) -> [C64; 2] {
        let h = FRAC_1_SQRT_2;
        match self {
            Polarization::R => [ONE, ZERO],
            Polarization::L => [ZERO, ONE],
            Polarization::A => [c(0.0, h), c(h, 0.0)],
            Polarization::D => [c(h, 0.0), c(0.0, h)],
            Polarization::H => [c(h, 0.0), c(h, 0.0)],
            Polarization::V => [c(0.0, h), c(0.0, -h)],
        }
    }

    pub fn vector(self) -> CVector {
        CVector::from_column_slice(&self.jones())
    }
}

impl FromStr for Polarization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "R" => Ok(Polarization::R),
            "L" => Ok(Polarization::L),
            "A" => Ok(Polarization::A),
            "D" => Ok(Polarization::D),
            "H" => Ok(Polarization::H),
            "V" => Ok(Polarization::V),
            _ => Err(Error::param("polarization", format!("unknown label `{s}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ket(amps: &[C64], label: HilbertLabel) -> PureState {
        PureState::new(CVector::from_column_slice(amps), label).unwrap()
    }

    #[test]
    fn label_rejects_duplicate_tags() {
        let err = HilbertLabel::new([(Tag::Atom1, 2), (Tag::Atom1, 2)]).unwrap_err();
        assert!(matches!(err, Error::TagCollision(Tag::Atom1)));
    }

    #[test]
    fn tensor_of_basis_states() {
        let up = PureState::qubit(Tag::Atom1, QubitState::UpZ);
        let a = PureState::polarization(Polarization::A);
        let joint = up.tensor(&a).unwrap();
        let h = FRAC_1_SQRT_2;
        let expected = [c(0.0, h), c(h, 0.0), ZERO, ZERO];
        for (x, y) in joint.vector().iter().zip(expected) {
            assert_abs_diff_eq!(x.re, y.re, epsilon = 1e-15);
            assert_abs_diff_eq!(x.im, y.im, epsilon = 1e-15);
        }
        assert_eq!(joint.label().dim(), 4);
    }

    #[test]
    fn tensor_of_mixed_qubits_is_quarter_identity() {
        let a = DensityOperator::maximally_mixed(HilbertLabel::single(Tag::Atom1, 2));
        let b = DensityOperator::maximally_mixed(HilbertLabel::single(Tag::Atom2, 2));
        let ab = a.tensor(&b).unwrap();
        let expected = CMatrix::identity(4, 4) * c(0.25, 0.0);
        assert!((ab.matrix() - expected).norm() < 1e-15);
    }

    #[test]
    fn tensor_of_x_eigenstates_is_uniform_superposition() {
        let s = PureState::atoms(QubitState::UpX, QubitState::UpX);
        for a in s.vector().iter() {
            assert_abs_diff_eq!(a.re, 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(a.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn tensor_rejects_tag_collision() {
        let a = PureState::qubit(Tag::Atom1, QubitState::UpZ);
        assert!(matches!(a.tensor(&a), Err(Error::TagCollision(Tag::Atom1))));
    }

    #[test]
    fn partial_trace_of_product_state() {
        let phi = BellState::PhiPlus.state().projector();
        let photon = PureState::polarization(Polarization::A).projector();
        let joint = phi.tensor(&photon).unwrap();
        let back = joint.partial_trace(&[Tag::Atom1, Tag::Atom2]).unwrap();
        assert!((back.matrix() - phi.matrix()).norm() < 1e-14);
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        let phi = BellState::PhiPlus.state().projector();
        let reduced = phi.partial_trace(&[Tag::Atom1]).unwrap();
        let expected = CMatrix::identity(2, 2) * c(0.5, 0.0);
        assert!((reduced.matrix() - expected).norm() < 1e-15);
    }

    #[test]
    fn partial_trace_of_parity_entangled_state() {
        // (α|↑↑⟩ + β|↓↓⟩)|A⟩ + (γ|↑↓⟩ + δ|↓↑⟩)|D⟩ with all coefficients 1/2
        let a = Polarization::A.jones();
        let d = Polarization::D.jones();
        let h = c(0.5, 0.0);
        let mut v = CVector::zeros(8);
        for (atoms, pol) in [(0usize, a), (3, a), (1, d), (2, d)] {
            for k in 0..2 {
                v[atoms * 2 + k] += h * pol[k];
            }
        }
        let label = HilbertLabel::atoms().concat(&HilbertLabel::single(Tag::Polarization, 2)).unwrap();
        let psi = PureState::new(v, label).unwrap();
        let reduced = psi.projector().partial_trace(&[Tag::Atom1, Tag::Atom2]).unwrap();
        let even = BellState::PhiPlus.projector();
        let odd = BellState::PsiPlus.projector();
        let expected = (even + odd) * c(0.5, 0.0);
        assert!((reduced.matrix() - expected).norm() < 1e-14);
    }

    #[test]
    fn partial_trace_unknown_tag() {
        let phi = BellState::PhiPlus.state().projector();
        assert!(matches!(phi.partial_trace(&[Tag::Polarization]), Err(Error::UnknownTag(_))));
    }

    #[test]
    fn fidelity_examples() {
        let phi = BellState::PhiPlus.state();
        assert_abs_diff_eq!(phi.projector().fidelity_pure(&phi).unwrap(), 1.0, epsilon = 1e-15);
        let mixed = DensityOperator::maximally_mixed(HilbertLabel::atoms());
        assert_abs_diff_eq!(mixed.fidelity_pure(&phi).unwrap(), 0.25, epsilon = 1e-15);
        let psi = BellState::PsiPlus.state().projector();
        assert_abs_diff_eq!(psi.fidelity_pure(&phi).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn fidelity_dimension_mismatch() {
        let phi = BellState::PhiPlus.state();
        let q = PureState::qubit(Tag::Atom1, QubitState::UpZ).projector();
        assert!(matches!(q.fidelity_pure(&phi), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn density_operator_validation() {
        let label = HilbertLabel::single(Tag::Atom1, 2);
        let bad_trace = CMatrix::identity(2, 2);
        assert!(matches!(
            DensityOperator::from_matrix(bad_trace, label.clone()),
            Err(Error::InvalidTrace(_))
        ));
        let mut not_herm = CMatrix::identity(2, 2) * c(0.5, 0.0);
        not_herm[(0, 1)] = c(0.1, 0.0);
        assert!(matches!(
            DensityOperator::from_matrix(not_herm, label.clone()),
            Err(Error::NotHermitian(_))
        ));
        let mut neg = CMatrix::zeros(2, 2);
        neg[(0, 0)] = c(1.5, 0.0);
        neg[(1, 1)] = c(-0.5, 0.0);
        assert!(matches!(DensityOperator::from_matrix(neg, label), Err(Error::NotPositive(_))));
    }

    #[test]
    fn embed_matches_kronecker_with_identity() {
        let x = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        let local = Operator::new(x.clone(), HilbertLabel::single(Tag::Atom2, 2)).unwrap();
        let full = HilbertLabel::atoms();
        let embedded = local.embed(&full).unwrap();
        let expected = CMatrix::identity(2, 2).kronecker(&x);
        assert!((embedded - expected).norm() < 1e-15);
    }

    #[test]
    fn block_extracts_conditional_operator() {
        let psi = PureState::atoms(QubitState::UpZ, QubitState::DownZ)
            .tensor(&PureState::polarization(Polarization::D))
            .unwrap();
        let rho = psi.projector();
        let d = PureState::polarization(Polarization::D);
        let a = PureState::polarization(Polarization::A);
        let on_d = rho.operator().block(&d, &d).unwrap();
        let on_a = rho.operator().block(&a, &a).unwrap();
        assert_abs_diff_eq!(on_d.trace().re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(on_a.trace().re, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn linear_polarizations_are_orthonormal() {
        let a = PureState::polarization(Polarization::A);
        let d = PureState::polarization(Polarization::D);
        let h = PureState::polarization(Polarization::H);
        let v = PureState::polarization(Polarization::V);
        assert!(a.inner(&d).norm() < 1e-15);
        assert!(h.inner(&v).norm() < 1e-15);
        assert_abs_diff_eq!(h.inner(&a).norm_sqr(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(h.inner(&d).norm_sqr(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn qubit_states_parse_and_print() {
        for q in QubitState::ALL {
            assert_eq!(q.label().parse::<QubitState>().unwrap(), q);
        }
        let s = ket(&QubitState::UpY.amplitudes(), HilbertLabel::single(Tag::Atom1, 2));
        assert_abs_diff_eq!(s.vector().norm(), 1.0, epsilon = 1e-15);
    }
}
