use super::{c, CMatrix, HilbertLabel, Operator};
use crate::{Error, Result};

/// A completely positive map in operator-sum form, `ρ ↦ Σ_k K_k ρ K_k†`,
/// acting on the factors named by its label.
///
/// Trace-preserving channels satisfy `Σ K†K = I`; conditioning maps (a single
/// measurement branch) only need `Σ K†K ≼ I`.
#[derive(Clone, Debug)]
pub struct Channel {
    label: HilbertLabel,
    kraus: Vec<CMatrix>,
}

impl Channel {
    pub fn new(label: HilbertLabel, kraus: Vec<CMatrix>) -> Result<Self> {
        let d = label.dim();
        for k in &kraus {
            if k.nrows() != d || k.ncols() != d {
                return Err(Error::DimensionMismatch { expected: d, actual: k.nrows() });
            }
        }
        Ok(Self { label, kraus })
    }

    pub fn unitary(label: HilbertLabel, u: CMatrix) -> Result<Self> {
        Self::new(label, vec![u])
    }

    pub fn identity(label: HilbertLabel) -> Self {
        let d = label.dim();
        Self { label, kraus: vec![CMatrix::identity(d, d)] }
    }

    pub fn label(&self) -> &HilbertLabel {
        &self.label
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    /// `Σ_k K_k† K_k`.
    pub fn completeness(&self) -> CMatrix {
        let d = self.label.dim();
        self.kraus.iter().fold(CMatrix::zeros(d, d), |acc, k| acc + k.adjoint() * k)
    }

    /// Largest deviation of `Σ K†K` from the identity.
    pub fn trace_preservation_error(&self) -> f64 {
        let d = self.label.dim();
        (self.completeness() - CMatrix::identity(d, d)).camax()
    }

    /// Largest eigenvalue of `Σ K†K`; at most 1 for a trace-non-increasing map.
    pub fn max_completeness_eigenvalue(&self) -> f64 {
        let e = self.completeness();
        let h = (&e + e.adjoint()) * c(0.5, 0.0);
        h.symmetric_eigenvalues().iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `other ∘ self`: apply `self` first.
    pub fn then(&self, other: &Channel) -> Result<Channel> {
        if self.label != other.label {
            return Err(Error::DimensionMismatch {
                expected: self.label.dim(),
                actual: other.label.dim(),
            });
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for b in &other.kraus {
            for a in &self.kraus {
                kraus.push(b * a);
            }
        }
        Ok(Channel { label: self.label.clone(), kraus })
    }

    /// Re-express on a larger space, acting as identity on the extra factors.
    pub fn embed(&self, full: &HilbertLabel) -> Result<Channel> {
        let kraus = self
            .kraus
            .iter()
            .map(|k| Operator::new(k.clone(), self.label.clone())?.embed(full))
            .collect::<Result<Vec<_>>>()?;
        Ok(Channel { label: full.clone(), kraus })
    }

    /// Apply to an operator whose label contains this channel's factors.
    pub fn apply(&self, op: &Operator) -> Result<Operator> {
        let full = op.label();
        let embedded: Vec<CMatrix> = if full == &self.label {
            self.kraus.clone()
        } else {
            self.embed(full)?.kraus
        };
        let d = full.dim();
        let mut out = CMatrix::zeros(d, d);
        for k in &embedded {
            out += k * op.matrix() * k.adjoint();
        }
        Operator::new(out, full.clone())
    }
}

/// Matrix representation of a linear map on `d × d` operators acting on the
/// row-major vectorisation: `vec(K ρ K†) = (K ⊗ K̄) vec(ρ)`.
///
/// Branch maps of the protocol are summed and composed in this form.
#[derive(Clone, Debug, PartialEq)]
pub struct Superop {
    dim: usize,
    matrix: CMatrix,
}

impl Superop {
    pub fn identity(dim: usize) -> Self {
        Self { dim, matrix: CMatrix::identity(dim * dim, dim * dim) }
    }

    pub fn zero(dim: usize) -> Self {
        Self { dim, matrix: CMatrix::zeros(dim * dim, dim * dim) }
    }

    pub fn from_kraus(dim: usize, kraus: &[CMatrix]) -> Self {
        let mut m = CMatrix::zeros(dim * dim, dim * dim);
        for k in kraus {
            m += k.kronecker(&k.conjugate());
        }
        Self { dim, matrix: m }
    }

    pub fn from_unitary(u: &CMatrix) -> Self {
        Self::from_kraus(u.nrows(), std::slice::from_ref(u))
    }

    /// Build from the images of the matrix units `|k⟩⟨l|`, given in row-major
    /// order of `(k, l)`.
    pub fn from_images(dim: usize, images: &[CMatrix]) -> Self {
        let mut m = CMatrix::zeros(dim * dim, dim * dim);
        for (col, img) in images.iter().enumerate() {
            for i in 0..dim {
                for j in 0..dim {
                    m[(i * dim + j, col)] = img[(i, j)];
                }
            }
        }
        Self { dim, matrix: m }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let d = self.dim;
        let mut v = nalgebra::DVector::zeros(d * d);
        for i in 0..d {
            for j in 0..d {
                v[i * d + j] = rho[(i, j)];
            }
        }
        let w = &self.matrix * v;
        CMatrix::from_fn(d, d, |i, j| w[i * d + j])
    }

    /// `other ∘ self`: apply `self` first.
    pub fn then(&self, other: &Superop) -> Superop {
        Superop { dim: self.dim, matrix: &other.matrix * &self.matrix }
    }

    pub fn add_assign(&mut self, other: &Superop) {
        self.matrix += &other.matrix;
    }

    pub fn scaled(&self, w: f64) -> Superop {
        Superop { dim: self.dim, matrix: &self.matrix * c(w, 0.0) }
    }

    /// The effect `E` with `Tr(M(ρ)) = Tr(E ρ)` for every `ρ`.
    pub fn effect(&self) -> CMatrix {
        let d = self.dim;
        let mut e = CMatrix::zeros(d, d);
        for k in 0..d {
            for l in 0..d {
                let mut s = c(0.0, 0.0);
                for i in 0..d {
                    s += self.matrix[(i * d + i, k * d + l)];
                }
                e[(l, k)] = s;
            }
        }
        e
    }
}

impl std::ops::Add for &Superop {
    type Output = Superop;

    fn add(self, rhs: &Superop) -> Superop {
        Superop { dim: self.dim, matrix: &self.matrix + &rhs.matrix }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{BellState, DensityOperator, Tag, ONE, ZERO};

    fn x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    #[test]
    fn superop_matches_kraus_application() {
        let k0 = CMatrix::identity(2, 2) * c(0.8f64.sqrt(), 0.0);
        let k1 = x() * c(0.2f64.sqrt(), 0.0);
        let label = HilbertLabel::single(Tag::Atom1, 2);
        let ch = Channel::new(label.clone(), vec![k0.clone(), k1.clone()]).unwrap();
        let rho = CMatrix::from_row_slice(2, 2, &[c(0.7, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.3, 0.0)]);
        let direct = ch.apply(&Operator::new(rho.clone(), label).unwrap()).unwrap();
        let sup = Superop::from_kraus(2, &[k0, k1]);
        assert!((sup.apply(&rho) - direct.matrix()).norm() < 1e-15);
        assert!(ch.trace_preservation_error() < 1e-15);
    }

    #[test]
    fn channel_acts_on_subsystem() {
        let label = HilbertLabel::single(Tag::Atom2, 2);
        let flip = Channel::unitary(label, x()).unwrap();
        let phi = BellState::PhiPlus.state().projector();
        let out = flip.apply(phi.operator()).unwrap();
        assert!((out.matrix() - BellState::PsiPlus.projector()).norm() < 1e-15);
    }

    #[test]
    fn effect_of_projection_branch() {
        let p0 = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO]);
        let sup = Superop::from_kraus(2, std::slice::from_ref(&p0));
        assert!((sup.effect() - p0).norm() < 1e-15);
    }

    #[test]
    fn composition_order() {
        let label = HilbertLabel::single(Tag::Atom1, 2);
        let h = CMatrix::from_row_slice(2, 2, &[ONE, ONE, ONE, -ONE]) * c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let p0 = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO]);
        let a = Channel::unitary(label.clone(), h.clone()).unwrap();
        let b = Channel::unitary(label.clone(), p0.clone()).unwrap();
        let rho = DensityOperator::pure(&crate::qstate::PureState::qubit(Tag::Atom1, crate::qstate::QubitState::UpZ));
        let ab = a.then(&b).unwrap().apply(rho.operator()).unwrap();
        let sup = Superop::from_unitary(&h).then(&Superop::from_kraus(2, &[p0]));
        assert!((sup.apply(rho.matrix()) - ab.matrix()).norm() < 1e-15);
        assert!((ab.trace().re - 0.5).abs() < 1e-15);
    }
}
