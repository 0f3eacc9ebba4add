//! State tomography of the two atoms and detector (POVM) tomography of the
//! Bell-state measurement.
//!
//! Both reconstructions are linear inversions in the two-qubit Pauli basis
//! followed by a projection onto positive operators.

mod table;

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::qstate::{
    c, nearest_psd, pauli, pauli_assemble, BellState, CMatrix, DensityOperator, HilbertLabel, PureState,
    QubitState, StokesTensor,
};
use crate::{Error, Result};

pub use table::{Axis, CountTable, ProbeCounts, StateCounts, PROBE_COLUMNS, STATE_COLUMNS};

/// The 36 product probe states `|a⟩⊗|b⟩`, `a, b ∈ {↑x, ↓x, ↑y, ↓y, ↑z, ↓z}`,
/// row `6·i + j` for `QubitState::ALL[i] ⊗ QubitState::ALL[j]`.
#[derive(Clone, Debug)]
pub struct ProbeSet {
    probes: Vec<(QubitState, QubitState)>,
}

impl ProbeSet {
    pub fn canonical() -> Self {
        let probes = QubitState::ALL
            .iter()
            .flat_map(|a| QubitState::ALL.iter().map(move |b| (*a, *b)))
            .collect();
        Self { probes }
    }

    pub fn len(&self) -> usize {
        self.probes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probes.is_empty()
    }

    pub fn pairs(&self) -> &[(QubitState, QubitState)] {
        &self.probes
    }

    pub fn states(&self) -> Vec<PureState> {
        self.probes.iter().map(|(a, b)| PureState::atoms(*a, *b)).collect()
    }

    pub fn labels(&self) -> Vec<String> {
        self.probes.iter().map(|(a, b)| format!("{}-{}", a.label(), b.label())).collect()
    }

    /// Stokes vector `s_{ab} = r_a r_b` of each probe, with `r_0 = 1`.
    fn stokes(&self) -> Vec<[f64; 16]> {
        let bloch = |q: QubitState| {
            let (axis, sign) = q.axis();
            let mut r = [1.0, 0.0, 0.0, 0.0];
            r[axis] = sign;
            r
        };
        self.probes
            .iter()
            .map(|(a, b)| {
                let (ra, rb) = (bloch(*a), bloch(*b));
                let mut s = [0.0; 16];
                for i in 0..4 {
                    for j in 0..4 {
                        s[i * 4 + j] = ra[i] * rb[j];
                    }
                }
                s
            })
            .collect()
    }
}

/// Four measurement operators in `AA, AD, DA, DD` order, targeting
/// `Φ+, Φ−, Ψ+, Ψ−`.
#[derive(Clone, Debug, PartialEq)]
pub struct PovmSet {
    pub elements: [CMatrix; 4],
}

impl PovmSet {
    pub fn bell_projectors() -> Self {
        Self { elements: BellState::ALL.map(BellState::projector) }
    }

    /// Largest deviation of `Σ Π_j` from the identity.
    pub fn completeness_error(&self) -> f64 {
        let sum = self.elements.iter().fold(CMatrix::zeros(4, 4), |a, e| a + e);
        (sum - CMatrix::identity(4, 4)).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Every element Hermitian and PSD within `1e-8`.
    pub fn validate(&self) -> Result<()> {
        for e in &self.elements {
            let dev = (e - e.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            if dev > 1e-8 {
                return Err(Error::NotHermitian(dev));
            }
            let h = (e + e.adjoint()) * c(0.5, 0.0);
            let min = h.symmetric_eigenvalues().min();
            if min < -1e-8 {
                return Err(Error::NotPositive(min));
            }
        }
        Ok(())
    }

    /// `⟨x_j|Π_j|x_j⟩` for each outcome and its target Bell state.
    pub fn diagonal_fidelities(&self) -> [f64; 4] {
        let mut f = [0.0; 4];
        for (k, b) in BellState::ALL.iter().enumerate() {
            let v = PureState::bell(*b);
            f[k] = (v.vector().adjoint() * &self.elements[k] * v.vector())[(0, 0)].re;
        }
        f
    }
}

fn outcome_projector(axis: Axis, plus: bool) -> CMatrix {
    let sign = if plus { 1.0 } else { -1.0 };
    (CMatrix::identity(2, 2) + pauli(axis.pauli_index()) * c(sign, 0.0)) * c(0.5, 0.0)
}

/// Exact outcome probabilities of every basis pair, with each qubit's
/// readout flipped with probability `1 − readout_fidelity`.
pub fn state_probabilities(rho: &DensityOperator, readout_fidelity: f64) -> Result<StateCounts> {
    if rho.label() != &HilbertLabel::atoms() {
        return Err(Error::DimensionMismatch { expected: 4, actual: rho.label().dim() });
    }
    if !(0.0..=1.0).contains(&readout_fidelity) {
        return Err(Error::param("readout_fidelity", "must lie in [0, 1]"));
    }
    let e = 1.0 - readout_fidelity;
    let mut t = StateCounts::default();
    for a in Axis::ALL {
        for b in Axis::ALL {
            let mut p = [0.0; 4];
            for (k, (s1, s2)) in [(true, true), (true, false), (false, true), (false, false)].iter().enumerate() {
                let proj = outcome_projector(a, *s1).kronecker(&outcome_projector(b, *s2));
                p[k] = (proj * rho.matrix()).trace().re.max(0.0);
            }
            // per-qubit confusion: flip atom 1 (swap ++/−+ and +−/−−), atom 2 likewise
            let q1 = [
                (1.0 - e) * p[0] + e * p[2],
                (1.0 - e) * p[1] + e * p[3],
                (1.0 - e) * p[2] + e * p[0],
                (1.0 - e) * p[3] + e * p[1],
            ];
            let q = [
                (1.0 - e) * q1[0] + e * q1[1],
                (1.0 - e) * q1[1] + e * q1[0],
                (1.0 - e) * q1[2] + e * q1[3],
                (1.0 - e) * q1[3] + e * q1[2],
            ];
            t.settings.insert((a, b), q);
        }
    }
    Ok(t)
}

/// Multinomial sample of `shots` per basis pair from [`state_probabilities`].
pub fn sample_state_counts<R: Rng>(
    rho: &DensityOperator,
    readout_fidelity: f64,
    shots: u64,
    rng: &mut R,
) -> Result<StateCounts> {
    let exact = state_probabilities(rho, readout_fidelity)?;
    let mut t = StateCounts::default();
    for (k, p) in &exact.settings {
        let mut counts = [0.0; 4];
        for _ in 0..shots {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut idx = 3;
            for (i, pi) in p.iter().enumerate() {
                acc += pi;
                if u < acc {
                    idx = i;
                    break;
                }
            }
            counts[idx] += 1.0;
        }
        t.settings.insert(*k, counts);
    }
    Ok(t)
}

/// Linear inversion of a state table, before any positivity projection.
///
/// Two-qubit correlators come from their own setting; single-qubit Stokes
/// parameters are averaged over the three settings that contain them.
pub fn state_tomography_linear(t: &StateCounts) -> Result<CMatrix> {
    let mut s = StokesTensor::zeros();
    s.set(0, 0, 1.0);
    for a in Axis::ALL {
        for b in Axis::ALL {
            let row = t.get(a, b)?;
            let total: f64 = row.iter().sum();
            if !(total > 0.0) {
                return Err(Error::CountTable(format!(
                    "setting {} has no counts",
                    StateCounts::setting_label(a, b)
                )));
            }
            let p: Vec<f64> = row.iter().map(|v| v / total).collect();
            let (i, j) = (a.pauli_index(), b.pauli_index());
            s.set(i, j, p[0] - p[1] - p[2] + p[3]);
            s.set(i, 0, s.get(i, 0) + (p[0] + p[1] - p[2] - p[3]) / 3.0);
            s.set(0, j, s.get(0, j) + (p[0] - p[1] + p[2] - p[3]) / 3.0);
        }
    }
    Ok(pauli_assemble(&s))
}

/// Linear inversion followed by projection onto the nearest density operator.
pub fn state_tomography(t: &StateCounts) -> Result<DensityOperator> {
    let lin = state_tomography_linear(t)?;
    DensityOperator::from_matrix(nearest_psd(&lin)?, HilbertLabel::atoms())
}

/// The state as reconstructed from exact readout-affected probabilities.
pub fn measured_state(rho: &DensityOperator, readout_fidelity: f64) -> Result<DensityOperator> {
    state_tomography(&state_probabilities(rho, readout_fidelity)?)
}

/// Exact probe table for the effects `E_j` (in `AA, AD, DA, DD` order).
/// With `condition` the rows are renormalised over the four outcomes.
pub fn povm_probabilities(
    effects: &[CMatrix],
    probes: &[DensityOperator],
    condition: bool,
) -> Result<ProbeCounts> {
    if effects.len() < 4 {
        return Err(Error::DimensionMismatch { expected: 4, actual: effects.len() });
    }
    let rows = probes
        .iter()
        .map(|rho| {
            let mut r = [0.0; 4];
            for (k, e) in effects[..4].iter().enumerate() {
                r[k] = (e * rho.matrix()).trace().re.max(0.0);
            }
            if condition {
                let s: f64 = r.iter().sum();
                if !(s > 0.0) {
                    return Err(Error::Degenerate("probe never produces a click".into()));
                }
                r.iter_mut().for_each(|v| *v /= s);
            }
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProbeCounts { rows })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PovmOptions {
    /// Fix `S₀₀ = 1` (trace 4) for every element instead of fitting it.
    pub fix_identity_component: bool,
    /// Add `(I − ΣΠ_j)/4` to every element after projection.
    pub enforce_completeness: bool,
}

impl Default for PovmOptions {
    fn default() -> Self {
        Self { fix_identity_component: true, enforce_completeness: false }
    }
}

#[derive(Clone, Debug)]
pub struct PovmReconstruction {
    /// Least-squares solution before projection.
    pub linear: [CMatrix; 4],
    /// After projection (and optional completeness correction).
    pub povm: PovmSet,
}

/// Least-squares inversion of `P(j|i) = Tr(ρ_i Π_j)` over the canonical probes.
pub fn povm_tomography(t: &ProbeCounts, opts: PovmOptions) -> Result<PovmReconstruction> {
    let probs = t.probabilities()?;
    let stokes = ProbeSet::canonical().stokes();
    // P = X S with X[i, ab] = s^i_ab / 4
    let x = DMatrix::<f64>::from_fn(36, 16, |i, k| stokes[i][k] / 4.0);
    let (first, free) = if opts.fix_identity_component { (1, 15) } else { (0, 16) };
    let xr = x.columns(first, free).into_owned();
    let normal = xr.transpose() * &xr;
    let chol = normal
        .cholesky()
        .ok_or_else(|| Error::Degenerate("probe design is rank deficient".into()))?;

    let mut linear: [CMatrix; 4] = Default::default();
    for (j, lin) in linear.iter_mut().enumerate() {
        let mut target = nalgebra::DVector::from_fn(36, |i, _| probs[i][j]);
        if opts.fix_identity_component {
            target -= x.column(0);
        }
        let sol = chol.solve(&(xr.transpose() * target));
        let mut s = StokesTensor::zeros();
        if opts.fix_identity_component {
            s.set(0, 0, 1.0);
        }
        for (k, v) in sol.iter().enumerate() {
            let idx = k + first;
            s.set(idx / 4, idx % 4, *v);
        }
        *lin = pauli_assemble(&s);
    }

    let mut elements: [CMatrix; 4] = Default::default();
    for (e, l) in elements.iter_mut().zip(&linear) {
        *e = match nearest_psd(l) {
            Ok(m) => m,
            Err(Error::Degenerate(_)) => CMatrix::zeros(4, 4),
            Err(err) => return Err(err),
        };
    }
    if opts.enforce_completeness {
        let sum = elements.iter().fold(CMatrix::zeros(4, 4), |a, e| a + e);
        let delta = (CMatrix::identity(4, 4) - sum) * c(0.25, 0.0);
        log::info!(
            "completeness correction applied (max deviation {:.3e})",
            delta.iter().map(|z| z.norm()).fold(0.0, f64::max) * 4.0
        );
        for e in elements.iter_mut() {
            *e += &delta;
        }
    }
    Ok(PovmReconstruction { linear, povm: PovmSet { elements } })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FidelityRow {
    /// Outcome label (`AA`, …, or a parity port).
    pub outcome: String,
    pub target: String,
    pub fidelity: f64,
    /// Standard error when the fidelity comes from sampled data.
    pub std_error: Option<f64>,
}

/// Diagonal POVM fidelities in canonical order.
pub fn report_povm_fidelities(set: &PovmSet) -> Vec<FidelityRow> {
    let f = set.diagonal_fidelities();
    BellState::ALL
        .iter()
        .enumerate()
        .map(|(k, b)| FidelityRow {
            outcome: PROBE_COLUMNS[k].to_owned(),
            target: b.label().to_owned(),
            fidelity: f[k],
            std_error: None,
        })
        .collect()
}

/// `⟨x|ρ|x⟩` for labelled states and their targets.
pub fn report_state_fidelities(items: &[(&str, &DensityOperator, BellState)]) -> Result<Vec<FidelityRow>> {
    items
        .iter()
        .map(|(label, rho, b)| {
            Ok(FidelityRow {
                outcome: (*label).to_owned(),
                target: b.label().to_owned(),
                fidelity: rho.fidelity_pure(&PureState::bell(*b))?,
                std_error: None,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_state(v: &[f64]) -> DensityOperator {
        let g = CMatrix::from_fn(4, 4, |i, j| c(v[i * 4 + j], v[16 + i * 4 + j]));
        let m = &g * g.adjoint();
        let tr = m.trace();
        DensityOperator::from_matrix(m / tr, HilbertLabel::atoms()).unwrap()
    }

    fn probes() -> Vec<DensityOperator> {
        ProbeSet::canonical().states().iter().map(PureState::projector).collect()
    }

    #[test]
    fn probe_set_is_canonical() {
        let p = ProbeSet::canonical();
        assert_eq!(p.len(), 36);
        let labels = p.labels();
        let mut dedup = labels.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), 36);
        assert_eq!(labels[0], "ux-ux");
        for s in p.states() {
            assert_abs_diff_eq!(s.vector().norm(), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn bell_state_round_trip() {
        let phi = PureState::bell(BellState::PhiPlus).projector();
        let rec = state_tomography(&state_probabilities(&phi, 1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(rec.fidelity_pure(&PureState::bell(BellState::PhiPlus)).unwrap(), 1.0, epsilon = 1e-10);
        let mixed = DensityOperator::maximally_mixed(HilbertLabel::atoms());
        let rec = state_tomography(&state_probabilities(&mixed, 1.0).unwrap()).unwrap();
        assert!((rec.matrix() - mixed.matrix()).norm() < 1e-12);
    }

    #[test]
    fn readout_error_shrinks_correlations() {
        let phi = PureState::bell(BellState::PhiPlus).projector();
        let m = measured_state(&phi, 0.983).unwrap();
        let s = crate::qstate::pauli_expand(m.matrix()).unwrap();
        assert_abs_diff_eq!(s.get(3, 3), (1.0 - 2.0 * 0.017f64).powi(2), epsilon = 1e-12);
    }

    #[test]
    fn missing_setting_is_reported() {
        let phi = PureState::bell(BellState::PhiPlus).projector();
        let mut t = state_probabilities(&phi, 1.0).unwrap();
        t.settings.remove(&(Axis::X, Axis::Y));
        assert!(matches!(state_tomography(&t), Err(Error::MissingSetting(s)) if s == "xy"));
        let mut t = state_probabilities(&phi, 1.0).unwrap();
        t.settings.insert((Axis::Z, Axis::Z), [0.0; 4]);
        assert!(state_tomography(&t).is_err());
    }

    #[test]
    fn finite_sample_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut good = 0;
        let trials = 200;
        for _ in 0..trials {
            let v: Vec<f64> = (0..32).map(|_| rng.random_range(-1.0..1.0)).collect();
            let rho = random_state(&v);
            let counts = sample_state_counts(&rho, 1.0, 10_000, &mut rng).unwrap();
            let rec = state_tomography(&counts).unwrap();
            if rec.trace_distance(&rho).unwrap() < 0.03 {
                good += 1;
            }
        }
        assert!(good as f64 >= 0.95 * trials as f64, "{good}/{trials}");
    }

    #[test]
    fn ideal_povm_round_trip() {
        let ideal = PovmSet::bell_projectors();
        let t = povm_probabilities(&ideal.elements, &probes(), false).unwrap();
        let rec = povm_tomography(&t, PovmOptions::default()).unwrap();
        for (a, b) in rec.linear.iter().zip(&ideal.elements) {
            assert!((a - b).norm() < 1e-9);
        }
        for f in rec.povm.diagonal_fidelities() {
            assert_abs_diff_eq!(f, 1.0, epsilon = 1e-9);
        }
        rec.povm.validate().unwrap();
    }

    #[test]
    fn uninformative_table_gives_quarter_identity() {
        let t = ProbeCounts { rows: vec![[0.25; 4]; 36] };
        let rec = povm_tomography(&t, PovmOptions::default()).unwrap();
        for e in &rec.povm.elements {
            assert!((e - CMatrix::identity(4, 4) * c(0.25, 0.0)).norm() < 1e-12);
        }
        let rows = report_povm_fidelities(&rec.povm);
        assert!(rows.iter().all(|r| (r.fidelity - 0.25).abs() < 1e-12));
    }

    #[test]
    fn completeness_correction_closes_the_sum() {
        let mut rows = vec![[0.25; 4]; 36];
        rows[0] = [0.4, 0.2, 0.2, 0.2];
        let opts = PovmOptions { enforce_completeness: true, ..PovmOptions::default() };
        let rec = povm_tomography(&ProbeCounts { rows }, opts).unwrap();
        assert!(rec.povm.completeness_error() < 1e-12);
    }

    fn random_povm(v: &[f64]) -> [CMatrix; 4] {
        // E_j = S^{-1/2} A_j S^{-1/2} with S = Σ A_j
        let a: Vec<CMatrix> = (0..4)
            .map(|j| {
                let g = CMatrix::from_fn(4, 4, |r, s| c(v[j * 32 + r * 4 + s], v[j * 32 + 16 + r * 4 + s]));
                &g * g.adjoint() + CMatrix::identity(4, 4) * c(0.05, 0.0)
            })
            .collect();
        let s = a.iter().fold(CMatrix::zeros(4, 4), |acc, x| acc + x);
        let eig = s.symmetric_eigen();
        let inv_sqrt = &eig.eigenvectors
            * CMatrix::from_diagonal(&eig.eigenvalues.map(|l| c(1.0 / l.sqrt(), 0.0)))
            * eig.eigenvectors.adjoint();
        [0, 1, 2, 3].map(|j| &inv_sqrt * &a[j] * &inv_sqrt)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn random_state_round_trip(v in proptest::collection::vec(-1.0f64..1.0, 32)) {
            let rho = random_state(&v);
            let lin = state_tomography_linear(&state_probabilities(&rho, 1.0).unwrap()).unwrap();
            prop_assert!((lin - rho.matrix()).norm() < 1e-9);
        }

        #[test]
        fn random_povm_round_trip(v in proptest::collection::vec(-1.0f64..1.0, 128)) {
            let e = random_povm(&v);
            let t = povm_probabilities(&e, &probes(), false).unwrap();
            let opts = PovmOptions { fix_identity_component: false, ..PovmOptions::default() };
            let rec = povm_tomography(&t, opts).unwrap();
            for (a, b) in rec.linear.iter().zip(&e) {
                prop_assert!((a - b).norm() < 1e-9);
            }
            for (a, b) in rec.povm.elements.iter().zip(&e) {
                prop_assert!((a - b).norm() < 1e-9);
            }
        }

        #[test]
        fn traces_sum_to_four(rows in proptest::collection::vec(proptest::array::uniform4(0.01f64..1.0), 36)) {
            let rec = povm_tomography(&ProbeCounts { rows }, PovmOptions::default()).unwrap();
            let total: f64 = rec.linear.iter().map(|e| e.trace().re).sum();
            prop_assert!((total - 4.0).abs() < 1e-9);
            for e in &rec.povm.elements {
                prop_assert!(e.trace().re >= -1e-12);
            }
        }

        #[test]
        fn relabeling_is_covariant(v in proptest::collection::vec(-1.0f64..1.0, 32), axis in 0usize..3) {
            // swapping atom 1's ± outcomes on one axis negates that axis' Stokes row
            let rho = random_state(&v);
            let flip_axis = Axis::ALL[axis];
            let mut t = state_probabilities(&rho, 1.0).unwrap();
            for ((a, _), row) in t.settings.iter_mut() {
                if *a == flip_axis {
                    *row = [row[2], row[3], row[0], row[1]];
                }
            }
            let rec = state_tomography_linear(&t).unwrap();
            let mut s = crate::qstate::pauli_expand(rho.matrix()).unwrap();
            let i = flip_axis.pauli_index();
            for j in 0..4 {
                s.set(i, j, -s.get(i, j));
            }
            prop_assert!((rec - pauli_assemble(&s)).norm() < 1e-9);
        }
    }
}
