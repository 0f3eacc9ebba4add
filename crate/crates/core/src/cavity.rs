//! The atom–photon interface at one network node.
//!
//! A photon reflected from a single-sided cavity picks up the steady-state
//! reflection amplitude
//!
//! ```text
//! r(Δ) = 1 − 2κ_r (iΔ_a + γ) / ((iΔ_c + κ)(iΔ_a + γ) + g²)
//! ```
//!
//! Only `|↑_z, R⟩` couples to the atom; every other atom/polarisation
//! combination sees the empty cavity (`g = 0`). On resonance with strong
//! coupling the two amplitudes are `≈ +1` and `−1`, the π phase contrast that
//! turns reflection into a CNOT in the linear `{A, D}` basis.
//!
//! All rates are angular frequencies in rad/s and `κ`, `γ` are field
//! half-linewidths.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::qstate::{c, CMatrix, Channel, HilbertLabel, Polarization, Tag, C64, I, ONE, ZERO};
use crate::{Error, Result};

/// `2π × 1 MHz` in rad/s.
pub const TWO_PI_MHZ: f64 = 2.0 * PI * 1e6;

/// Cavity-QED parameters of one node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeParams {
    /// Atom–cavity coupling `g` (rad/s).
    pub g: f64,
    /// Cavity field half-linewidth `κ` (rad/s).
    pub kappa: f64,
    /// Atomic polarisation decay `γ` (rad/s).
    pub gamma: f64,
    /// Fraction of `κ` leaving through the coupling mirror.
    pub kappa_r_fraction: f64,
    /// Cavity resonance minus probe reference (rad/s).
    pub cavity_detuning: f64,
    /// Atomic resonance minus probe reference (rad/s).
    pub atom_detuning: f64,
    /// Standard deviation of the cavity resonance fluctuation (rad/s).
    pub cavity_freq_jitter_sigma: f64,
    /// Overlap of the incoming fibre mode with the cavity mode.
    pub mode_match_in: f64,
    /// Extra phase of `L` relative to `R` on empty-cavity reflection (rad).
    pub birefringence_phase: f64,
}

impl NodeParams {
    /// Node 1: `(g, κ, γ) = 2π × (7.6, 2.5, 3.0)` MHz, 92 % mode matching.
    pub fn budget_node1() -> Self {
        Self {
            g: 7.6 * TWO_PI_MHZ,
            kappa: 2.5 * TWO_PI_MHZ,
            gamma: 3.0 * TWO_PI_MHZ,
            kappa_r_fraction: 0.9,
            cavity_detuning: 0.0,
            atom_detuning: 0.0,
            cavity_freq_jitter_sigma: 0.2 * TWO_PI_MHZ,
            mode_match_in: 0.92,
            birefringence_phase: 0.0,
        }
    }

    /// Node 2: `(g, κ, γ) = 2π × (7.6, 2.8, 3.0)` MHz, 98 % mode matching.
    pub fn budget_node2() -> Self {
        Self { kappa: 2.8 * TWO_PI_MHZ, mode_match_in: 0.98, ..Self::budget_node1() }
    }

    /// Lossless, perfectly matched node whose reflection converges to the
    /// ideal gate (`g²/κγ ≈ 10⁸`).
    pub fn ideal() -> Self {
        Self {
            g: 1e4 * TWO_PI_MHZ,
            kappa: TWO_PI_MHZ,
            gamma: TWO_PI_MHZ,
            kappa_r_fraction: 1.0,
            cavity_detuning: 0.0,
            atom_detuning: 0.0,
            cavity_freq_jitter_sigma: 0.0,
            mode_match_in: 1.0,
            birefringence_phase: 0.0,
        }
    }

    pub fn cooperativity(&self) -> f64 {
        self.g * self.g / (self.kappa * self.gamma)
    }

    /// `g > max(κ, γ)`.
    pub fn is_strong_coupling(&self) -> bool {
        self.g > self.kappa.max(self.gamma)
    }

    pub fn validate(&self, prefix: &str) -> Result<()> {
        let positive = [("g", self.g), ("kappa", self.kappa), ("gamma", self.gamma)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(format!("{prefix}.{name}"), "must be positive"));
            }
        }
        if !(self.kappa_r_fraction > 0.0 && self.kappa_r_fraction <= 1.0) {
            return Err(Error::param(format!("{prefix}.kappa_r_fraction"), "must lie in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.mode_match_in) {
            return Err(Error::param(format!("{prefix}.mode_match_in"), "must lie in [0, 1]"));
        }
        if !(self.cavity_freq_jitter_sigma >= 0.0) {
            return Err(Error::param(
                format!("{prefix}.cavity_freq_jitter_sigma"),
                "must be non-negative",
            ));
        }
        for (name, v) in [
            ("cavity_detuning", self.cavity_detuning),
            ("atom_detuning", self.atom_detuning),
            ("birefringence_phase", self.birefringence_phase),
        ] {
            if !v.is_finite() {
                return Err(Error::param(format!("{prefix}.{name}"), "must be finite"));
            }
        }
        Ok(())
    }
}

/// Steady-state output of one reflection: the reflected amplitude and the
/// amplitudes leaking through the lossy mirror and scattered by the atom.
/// `|reflected|² + |mirror_loss|² + |scatter|² = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CavityResponse {
    pub reflected: C64,
    pub mirror_loss: C64,
    pub scatter: C64,
}

/// Solve the weak-drive steady state of the cavity field `a` and atomic
/// coherence `σ` for unit input amplitude.
pub fn cavity_response(p: &NodeParams, coupled: bool, probe_detuning: f64, jitter: f64) -> CavityResponse {
    let g = if coupled { p.g } else { 0.0 };
    let kr = p.kappa * p.kappa_r_fraction;
    let kl = p.kappa - kr;
    let dc = p.cavity_detuning + jitter - probe_detuning;
    let da = p.atom_detuning - probe_detuning;
    let atom = c(p.gamma, da);
    let denom = c(p.kappa, dc) * atom + g * g;
    let field = (2.0 * kr).sqrt() * atom / denom;
    let sigma = -I * g * field / atom;
    CavityResponse {
        reflected: ONE - (2.0 * kr).sqrt() * field,
        mirror_loss: (2.0 * kl).sqrt() * field,
        scatter: (2.0 * p.gamma).sqrt() * sigma,
    }
}

/// Reflection amplitudes for the three paths a photon can take at a node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReflectionAmplitudes {
    /// `R` photon with the atom in `|↑_z⟩`.
    pub r_coupled: C64,
    /// `R` photon with the atom in `|↓_z⟩`, or any `L` photon.
    pub r_empty: C64,
    /// Light outside the cavity mode, reflected promptly.
    pub r_prompt: C64,
}

pub fn reflection_amplitudes(p: &NodeParams, probe_detuning: f64) -> ReflectionAmplitudes {
    ReflectionAmplitudes {
        r_coupled: cavity_response(p, true, probe_detuning, 0.0).reflected,
        r_empty: cavity_response(p, false, probe_detuning, 0.0).reflected,
        r_prompt: ONE,
    }
}

fn atom_pol_label(atom: Tag) -> HilbertLabel {
    HilbertLabel::new([(atom, 2), (Tag::Polarization, 2)]).expect("distinct tags")
}

fn atom_pol_photon_label(atom: Tag) -> HilbertLabel {
    HilbertLabel::new([(atom, 2), (Tag::Polarization, 2), (Tag::PhotonNumber, 2)])
        .expect("distinct tags")
}

/// `|D⟩⟨A| + |A⟩⟨D|` in the circular basis.
pub fn linear_flip() -> CMatrix {
    let a = Polarization::A.vector();
    let d = Polarization::D.vector();
    &d * a.adjoint() + &a * d.adjoint()
}

fn atom_controlled(up: &CMatrix, down: &CMatrix) -> CMatrix {
    let mut u = CMatrix::zeros(4, 4);
    u.view_mut((0, 0), (2, 2)).copy_from(up);
    u.view_mut((2, 2), (2, 2)).copy_from(down);
    u
}

/// The reflection gate of the truth table: `|↑_z⟩` swaps `A ↔ D`, `|↓_z⟩`
/// leaves the polarisation unchanged. Acts on `atom ⊗ polarization`.
pub fn ideal_cnot(atom: Tag) -> Channel {
    let u = atom_controlled(&linear_flip(), &CMatrix::identity(2, 2));
    Channel::unitary(atom_pol_label(atom), u).expect("4x4 unitary")
}

/// Atom-diagonal phase linking the ideal limit of the physical reflection
/// (`r_coupled = +1`, `r_empty = −1`) to the truth table:
/// `diag(+1, −1, −1, −1) = P · CNOT` in the `{↑R, ↑L, ↓R, ↓L}` basis, where
/// `|↑⟩` gets `i|D⟩⟨D| − i|A⟩⟨A|` and `|↓⟩` gets `−I`. `P` is constant within
/// each parity manifold of a two-node pass, so parity readout is unaffected.
pub fn circular_convention_phase() -> CMatrix {
    let a = Polarization::A.vector();
    let d = Polarization::D.vector();
    let up = (&d * d.adjoint()) * I - (&a * a.adjoint()) * I;
    atom_controlled(&up, &(-CMatrix::identity(2, 2)))
}

/// Lift an `atom ⊗ polarization` operator to `atom ⊗ polarization ⊗ number`
/// with a one-photon cutoff: it acts on the one-photon sector and leaves the
/// vacuum (lost-photon) sector alone.
pub fn photon_conditioned(u: &CMatrix) -> CMatrix {
    let mut m = CMatrix::zeros(8, 8);
    for r in 0..4 {
        for s in 0..4 {
            m[(2 * r + 1, 2 * s + 1)] = u[(r, s)];
        }
        m[(2 * r, 2 * r)] = ONE;
    }
    m
}

/// [`ideal_cnot`] on `atom ⊗ polarization ⊗ number`.
pub fn ideal_cnot_photon(atom: Tag) -> Channel {
    let u = photon_conditioned(&ideal_cnot(atom).kraus()[0]);
    Channel::unitary(atom_pol_photon_label(atom), u).expect("8x8 unitary")
}

/// Per-basis-state responses in the `{↑R, ↑L, ↓R, ↓L}` order.
fn responses(p: &NodeParams, jitter: f64) -> [CavityResponse; 4] {
    let coupled = cavity_response(p, true, 0.0, jitter);
    let empty = cavity_response(p, false, 0.0, jitter);
    let bire = C64::from_polar(1.0, p.birefringence_phase);
    let empty_l = CavityResponse { reflected: empty.reflected * bire, ..empty };
    [coupled, empty_l, empty, empty_l]
}

/// Reflection at one node as an operator-sum map on
/// `atom ⊗ polarization ⊗ number` (number cutoff 1, `|0⟩` is the loss flag).
///
/// A fraction `mode_match_in` of the light enters the cavity mode and is
/// reflected with the polarisation- and atom-dependent amplitudes; the rest
/// is reflected promptly with amplitude 1. Amplitude missing from the cavity
/// reflection goes to the vacuum sector through two distinguishable
/// channels, mirror loss and atomic scattering, with the photon's
/// polarisation recorded. The map is trace-preserving on the full space.
pub fn realistic_reflection_channel(p: &NodeParams, atom: Tag, jitter_sample: f64) -> Channel {
    let resp = responses(p, jitter_sample);
    let m = p.mode_match_in;
    let mut cav = CMatrix::zeros(8, 8);
    let mut mirror = CMatrix::zeros(8, 8);
    let mut scatter = CMatrix::zeros(8, 8);
    for (k, r) in resp.iter().enumerate() {
        cav[(2 * k + 1, 2 * k + 1)] = r.reflected;
        cav[(2 * k, 2 * k)] = ONE;
        mirror[(2 * k, 2 * k + 1)] = r.mirror_loss;
        scatter[(2 * k, 2 * k + 1)] = r.scatter;
    }
    let mut kraus = Vec::new();
    if m > 0.0 {
        let s = c(m.sqrt(), 0.0);
        kraus.push(cav * s);
        for k in [mirror, scatter] {
            if k.iter().any(|z| *z != ZERO) {
                kraus.push(k * s);
            }
        }
    }
    if m < 1.0 {
        kraus.push(CMatrix::identity(8, 8) * c((1.0 - m).sqrt(), 0.0));
    }
    Channel::new(atom_pol_photon_label(atom), kraus).expect("8x8 Kraus operators")
}

/// The photon-surviving part of [`realistic_reflection_channel`] on
/// `atom ⊗ polarization`; trace-non-increasing, with `Σ K†K = I` only for a
/// lossless, perfectly mode-matched cavity.
pub fn surviving_reflection_channel(p: &NodeParams, atom: Tag, jitter_sample: f64) -> Channel {
    let resp = responses(p, jitter_sample);
    let m = p.mode_match_in;
    let mut cav = CMatrix::zeros(4, 4);
    for (k, r) in resp.iter().enumerate() {
        cav[(k, k)] = r.reflected;
    }
    let mut kraus = Vec::new();
    if m > 0.0 {
        kraus.push(cav * c(m.sqrt(), 0.0));
    }
    if m < 1.0 {
        kraus.push(CMatrix::identity(4, 4) * c((1.0 - m).sqrt(), 0.0));
    }
    Channel::new(atom_pol_label(atom), kraus).expect("4x4 Kraus operators")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{DensityOperator, Operator, PureState, QubitState};
    use approx::assert_abs_diff_eq;

    #[test]
    fn ideal_limit_gives_pi_contrast() {
        let r = reflection_amplitudes(&NodeParams::ideal(), 0.0);
        assert_abs_diff_eq!(r.r_coupled.re, 1.0, epsilon = 1e-7);
        assert_abs_diff_eq!(r.r_empty.re, -1.0, epsilon = 1e-12);
        assert_eq!(r.r_prompt, ONE);
    }

    #[test]
    fn node1_resonant_amplitudes() {
        let p = NodeParams { kappa_r_fraction: 1.0, ..NodeParams::budget_node1() };
        let r = reflection_amplitudes(&p, 0.0);
        let (g2, kg) = (7.6f64 * 7.6, 2.5 * 3.0);
        assert_abs_diff_eq!(r.r_coupled.re, (g2 - kg) / (g2 + kg), epsilon = 1e-12);
        assert_abs_diff_eq!(r.r_coupled.re, 0.770, epsilon = 5e-4);
        assert_abs_diff_eq!(r.r_coupled.im, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.r_empty.re, -1.0, epsilon = 1e-12);
    }

    /// Integrate `ȧ = −(iΔ_c + κ)a − igσ + √(2κ_r)`, `σ̇ = −(iΔ_a + γ)σ − iga`
    /// with RK4 until stationary and return `1 − √(2κ_r) a`.
    fn integrated_reflection(p: &NodeParams, coupled: bool, probe: f64) -> C64 {
        let g = if coupled { p.g } else { 0.0 };
        let kr = p.kappa * p.kappa_r_fraction;
        let drive = (2.0 * kr).sqrt();
        let lc = c(p.kappa, p.cavity_detuning - probe);
        let la = c(p.gamma, p.atom_detuning - probe);
        let f = |a: C64, s: C64| (-lc * a - I * g * s + drive, -la * s - I * g * a);
        let (mut a, mut s) = (ZERO, ZERO);
        let dt = 0.01 / (p.kappa + p.gamma + g);
        for _ in 0..20_000 {
            let (k1a, k1s) = f(a, s);
            let (k2a, k2s) = f(a + k1a * (dt / 2.0), s + k1s * (dt / 2.0));
            let (k3a, k3s) = f(a + k2a * (dt / 2.0), s + k2s * (dt / 2.0));
            let (k4a, k4s) = f(a + k3a * dt, s + k3s * dt);
            a += (k1a + k2a * 2.0 + k3a * 2.0 + k4a) * (dt / 6.0);
            s += (k1s + k2s * 2.0 + k3s * 2.0 + k4s) * (dt / 6.0);
        }
        ONE - drive * a
    }

    #[test]
    fn detuned_empty_cavity_matches_integrated_steady_state() {
        let p = NodeParams { kappa_r_fraction: 1.0, ..NodeParams::budget_node1() };
        // probe at +κ relative to the cavity: Δ_c = −κ in our sign convention
        let r = reflection_amplitudes(&p, p.kappa).r_empty;
        let ode = integrated_reflection(&p, false, p.kappa);
        assert_abs_diff_eq!(r.norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.re, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.im.abs(), 1.0, epsilon = 1e-12);
        assert!((r - ode).norm() < 1e-6, "formula {r} vs integrated {ode}");
    }

    #[test]
    fn coupled_response_matches_integrated_steady_state() {
        let p = NodeParams { atom_detuning: 0.3 * TWO_PI_MHZ, ..NodeParams::budget_node2() };
        let r = reflection_amplitudes(&p, 0.1 * TWO_PI_MHZ).r_coupled;
        let ode = integrated_reflection(&p, true, 0.1 * TWO_PI_MHZ);
        assert!((r - ode).norm() < 1e-6, "formula {r} vs integrated {ode}");
    }

    #[test]
    fn response_conserves_energy() {
        for p in [NodeParams::budget_node1(), NodeParams::budget_node2()] {
            for coupled in [true, false] {
                for det in [-1.0, 0.0, 0.4, 2.0] {
                    let r = cavity_response(&p, coupled, det * TWO_PI_MHZ, 0.05 * TWO_PI_MHZ);
                    let total = r.reflected.norm_sqr() + r.mirror_loss.norm_sqr() + r.scatter.norm_sqr();
                    assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn cnot_truth_table() {
        let u = &ideal_cnot(Tag::Atom1).kraus()[0].clone();
        let ket = |q: QubitState, p: Polarization| {
            PureState::qubit(Tag::Atom1, q).tensor(&PureState::polarization(p)).unwrap()
        };
        let cases = [
            (QubitState::UpZ, Polarization::A, Polarization::D),
            (QubitState::UpZ, Polarization::D, Polarization::A),
            (QubitState::DownZ, Polarization::A, Polarization::A),
            (QubitState::DownZ, Polarization::D, Polarization::D),
        ];
        for (q, pin, pout) in cases {
            let out = u * ket(q, pin).vector();
            let want = ket(q, pout);
            assert!((out - want.vector()).norm() < 1e-15, "{q:?} {pin:?}");
        }
    }

    #[test]
    fn cnot_entangles_superposition() {
        let u = ideal_cnot(Tag::Atom1).kraus()[0].clone();
        let input = PureState::qubit(Tag::Atom1, QubitState::UpX)
            .tensor(&PureState::polarization(Polarization::A))
            .unwrap();
        let out = &u * input.vector();
        let up_d = PureState::qubit(Tag::Atom1, QubitState::UpZ)
            .tensor(&PureState::polarization(Polarization::D))
            .unwrap();
        let down_a = PureState::qubit(Tag::Atom1, QubitState::DownZ)
            .tensor(&PureState::polarization(Polarization::A))
            .unwrap();
        let want = (up_d.vector() + down_a.vector()) * c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        assert!((out - want).norm() < 1e-15);
    }

    #[test]
    fn cnot_is_self_inverse() {
        let u = ideal_cnot(Tag::Atom2).kraus()[0].clone();
        assert!((&u * &u - CMatrix::identity(4, 4)).norm() < 1e-15);
    }

    #[test]
    fn ideal_limit_reflection_is_phased_cnot() {
        let surv = surviving_reflection_channel(&NodeParams::ideal(), Tag::Atom1, 0.0);
        assert_eq!(surv.kraus().len(), 1);
        let want = circular_convention_phase() * &ideal_cnot(Tag::Atom1).kraus()[0];
        assert!((&surv.kraus()[0] - want).norm() < 1e-7);
    }

    #[test]
    fn zero_mode_matching_bypasses_atom() {
        let p = NodeParams { mode_match_in: 0.0, ..NodeParams::budget_node1() };
        let ch = realistic_reflection_channel(&p, Tag::Atom1, 0.0);
        assert_eq!(ch.kraus().len(), 1);
        assert!((&ch.kraus()[0] - CMatrix::identity(8, 8)).norm() < 1e-15);
    }

    #[test]
    fn full_channel_is_trace_preserving_and_atom_diagonal() {
        for jitter in [-0.3, 0.0, 0.2] {
            let ch = realistic_reflection_channel(&NodeParams::budget_node2(), Tag::Atom2, jitter * TWO_PI_MHZ);
            assert!(ch.trace_preservation_error() < 1e-12);
            for k in ch.kraus() {
                for i in 0..8 {
                    for j in 0..8 {
                        if i / 4 != j / 4 {
                            assert_eq!(k[(i, j)], ZERO);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn node1_gate_fidelity_bounds() {
        let p = NodeParams::budget_node1();
        let input = PureState::qubit(Tag::Atom1, QubitState::UpX)
            .tensor(&PureState::polarization(Polarization::A))
            .unwrap();
        let ideal_u = circular_convention_phase() * &ideal_cnot(Tag::Atom1).kraus()[0];
        let ideal_out = PureState::normalized(&ideal_u * input.vector(), input.label().clone()).unwrap();
        let ch = surviving_reflection_channel(&p, Tag::Atom1, 0.0);
        let out = ch.apply(input.projector().operator()).unwrap();
        let (_, rho) = DensityOperator::normalize(out).unwrap();
        let f = rho.fidelity_pure(&ideal_out).unwrap();
        assert!((0.9..1.0).contains(&f), "fidelity {f}");
    }

    #[test]
    fn surviving_channel_contracts() {
        let pis = [NodeParams::budget_node1(), NodeParams::budget_node2()];
        for p in pis {
            let ch = surviving_reflection_channel(&p, Tag::Atom1, 0.0);
            assert!(ch.max_completeness_eigenvalue() <= 1.0 + 1e-12);
        }
        let lossless = NodeParams { g: 1e9 * TWO_PI_MHZ, ..NodeParams::ideal() };
        let ch = surviving_reflection_channel(&lossless, Tag::Atom1, 0.0);
        assert!(ch.trace_preservation_error() < 1e-9);
        let op = Operator::identity(ch.label().clone());
        assert!((ch.apply(&op).unwrap().trace().re - 4.0).abs() < 1e-9);
    }

    #[test]
    fn validation_rejects_bad_params() {
        let mut p = NodeParams::budget_node1();
        p.g = -1.0;
        assert!(p.validate("node1").is_err());
        let mut p = NodeParams::budget_node1();
        p.mode_match_in = 1.5;
        assert!(p.validate("node1").is_err());
        assert!(NodeParams::budget_node1().is_strong_coupling());
        assert!(NodeParams::budget_node2().is_strong_coupling());
    }
}
