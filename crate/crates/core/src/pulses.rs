//! Weak coherent pulses, optical loss, polarisation errors and the
//! two-detector polarisation analyser.
//!
//! A photon slot is the pair `polarization ⊗ number`. Loss maps the number
//! sector towards vacuum while keeping the polarisation factor as an
//! environment record, so every map here stays trace-preserving on the full
//! space and the atoms' state after a loss is obtained by tracing the slot.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::qstate::{c, CMatrix, Channel, DensityOperator, HilbertLabel, Operator, Polarization, Tag, ONE};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseParams {
    pub mean_photon_number: f64,
    /// Largest photon number kept; the Poisson tail is lumped into it.
    pub fock_cutoff: usize,
    /// Pulse length (s).
    pub duration_fwhm: f64,
    pub input_polarization: Polarization,
}

impl PulseParams {
    /// `n̄ = 0.1`, the setting of the parity experiment.
    pub fn parity_pulse() -> Self {
        Self {
            mean_photon_number: 0.1,
            fock_cutoff: 2,
            duration_fwhm: 1e-6,
            input_polarization: Polarization::A,
        }
    }

    /// `n̄ = 0.34`, the setting of the full measurement.
    pub fn bsm_pulse() -> Self {
        Self { mean_photon_number: 0.34, ..Self::parity_pulse() }
    }

    /// A single photon in `|A⟩`.
    pub fn single_photon() -> Self {
        Self { mean_photon_number: 1.0, fock_cutoff: 1, ..Self::parity_pulse() }
    }

    pub fn validate(&self, prefix: &str) -> Result<()> {
        if !(self.mean_photon_number >= 0.0 && self.mean_photon_number.is_finite()) {
            return Err(Error::param(format!("{prefix}.mean_photon_number"), "must be non-negative"));
        }
        if self.fock_cutoff == 0 {
            return Err(Error::param(format!("{prefix}.fock_cutoff"), "must be at least 1"));
        }
        if !(self.duration_fwhm > 0.0) {
            return Err(Error::param(format!("{prefix}.duration_fwhm"), "must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    pub node1_to_node2_transmission: f64,
    /// Transmission from node 2 to the detectors, excluding detector efficiency.
    pub detection_path_efficiency: f64,
    /// Polarisation rotation about the circular axis (rad).
    pub polarization_rotation_error: f64,
    /// Extra fractional loss of `V` relative to `H`.
    pub pol_dependent_loss: f64,
}

impl LinkParams {
    pub fn budget() -> Self {
        Self {
            node1_to_node2_transmission: 0.49,
            detection_path_efficiency: 0.5 / 0.9,
            polarization_rotation_error: 0.1,
            pol_dependent_loss: 0.05,
        }
    }

    pub fn lossless() -> Self {
        Self {
            node1_to_node2_transmission: 1.0,
            detection_path_efficiency: 1.0,
            polarization_rotation_error: 0.0,
            pol_dependent_loss: 0.0,
        }
    }

    pub fn validate(&self, prefix: &str) -> Result<()> {
        for (name, v) in [
            ("node1_to_node2_transmission", self.node1_to_node2_transmission),
            ("detection_path_efficiency", self.detection_path_efficiency),
            ("pol_dependent_loss", self.pol_dependent_loss),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(format!("{prefix}.{name}"), "must lie in [0, 1]"));
            }
        }
        if !self.polarization_rotation_error.is_finite() {
            return Err(Error::param(format!("{prefix}.polarization_rotation_error"), "must be finite"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    pub efficiency: f64,
    /// Per detector (Hz).
    pub dark_count_rate: f64,
    /// (s).
    pub detection_window: f64,
}

impl DetectorParams {
    pub fn budget() -> Self {
        Self { efficiency: 0.9, dark_count_rate: 9.0, detection_window: 3e-6 }
    }

    pub fn perfect() -> Self {
        Self { efficiency: 1.0, dark_count_rate: 0.0, detection_window: 3e-6 }
    }

    /// Probability that one detector registers at least one dark count in
    /// the window.
    pub fn dark_probability(&self) -> f64 {
        -(-self.dark_count_rate * self.detection_window).exp_m1()
    }

    pub fn validate(&self, prefix: &str) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::param(format!("{prefix}.efficiency"), "must lie in [0, 1]"));
        }
        if !(self.dark_count_rate >= 0.0 && self.dark_count_rate.is_finite()) {
            return Err(Error::param(format!("{prefix}.dark_count_rate"), "must be non-negative"));
        }
        if !(self.detection_window > 0.0 && self.detection_window.is_finite()) {
            return Err(Error::param(format!("{prefix}.detection_window"), "must be positive"));
        }
        Ok(())
    }
}

/// Poisson photon-number probabilities `P(0..=N)` followed by the overflow
/// mass `P(n > N)`.
pub fn photon_number_distribution(p: &PulseParams) -> Result<Vec<f64>> {
    let nbar = p.mean_photon_number;
    if !(nbar >= 0.0 && nbar.is_finite()) {
        return Err(Error::param("mean_photon_number", "must be non-negative"));
    }
    let mut probs = Vec::with_capacity(p.fock_cutoff + 2);
    let mut term = (-nbar).exp();
    for n in 0..=p.fock_cutoff {
        probs.push(term);
        term *= nbar / (n + 1) as f64;
    }
    let kept: f64 = probs.iter().sum();
    probs.push((1.0 - kept).max(0.0));
    Ok(probs)
}

/// Photon-number distribution with the overflow folded into `P(N)`.
pub fn truncated_photon_numbers(p: &PulseParams) -> Result<Vec<f64>> {
    let mut probs = photon_number_distribution(p)?;
    let overflow = probs.pop().unwrap_or(0.0);
    *probs.last_mut().expect("cutoff ≥ 0") += overflow;
    Ok(probs)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Beamsplitter loss with transmission `t` on a number factor of dimension
/// `dim`: `K_k = Σ_n √(C(n,k) tⁿ⁻ᵏ (1−t)ᵏ) |n−k⟩⟨n|`, one operator per
/// number of lost photons `k`.
pub fn transmission_channel(dim: usize, t: f64) -> Result<Channel> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::param("transmission", "must lie in [0, 1]"));
    }
    let kraus = (0..dim)
        .map(|k| {
            let mut m = CMatrix::zeros(dim, dim);
            for n in k..dim {
                let amp = binomial(n, k) * t.powi((n - k) as i32) * (1.0 - t).powi(k as i32);
                m[(n - k, n)] = c(amp.sqrt(), 0.0);
            }
            m
        })
        .collect();
    Channel::new(HilbertLabel::single(Tag::PhotonNumber, dim), kraus)
}

/// Apply beamsplitter loss to the photon-number factor of `state`.
pub fn apply_transmission(state: &DensityOperator, t: f64) -> Result<DensityOperator> {
    let dim = state.label().dim_of(Tag::PhotonNumber).ok_or(Error::UnknownTag(Tag::PhotonNumber))?;
    let out = transmission_channel(dim, t)?.apply(state.operator())?;
    DensityOperator::new(out)
}

fn slot_label() -> HilbertLabel {
    HilbertLabel::photon(1)
}

/// `(polarization ⊗ number)` index of `|pol, n⟩` with cutoff 1.
fn slot_index(pol: usize, n: usize) -> usize {
    2 * pol + n
}

/// Lift a polarisation operator to the one-photon sector of a slot.
fn on_photon(u: &CMatrix) -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    for r in 0..2 {
        for s in 0..2 {
            m[(slot_index(r, 1), slot_index(s, 1))] = u[(r, s)];
        }
    }
    m
}

/// Polarisation rotation by `θ` about the circular axis,
/// `diag(e^{−iθ}, e^{iθ})` in the `{R, L}` basis; `θ = π/2` maps `A → D`.
pub fn polarization_rotation(theta: f64) -> CMatrix {
    let mut u = CMatrix::zeros(2, 2);
    u[(0, 0)] = c(0.0, -theta).exp();
    u[(1, 1)] = c(0.0, theta).exp();
    u
}

/// Rotation followed by differential loss of `V`, on a one-photon slot. The
/// lost part of `V` goes to the vacuum sector with its polarisation kept.
pub fn polarization_error_channel(link: &LinkParams) -> Result<Channel> {
    let pdl = link.pol_dependent_loss;
    if !(0.0..=1.0).contains(&pdl) {
        return Err(Error::param("pol_dependent_loss", "must lie in [0, 1]"));
    }
    let rot = polarization_rotation(link.polarization_rotation_error);
    let h = Polarization::H.vector();
    let v = Polarization::V.vector();
    let pass = &h * h.adjoint() + (&v * v.adjoint()) * c((1.0 - pdl).sqrt(), 0.0);
    let block = (&v * v.adjoint()) * c(pdl.sqrt(), 0.0);

    let mut vac = CMatrix::zeros(4, 4);
    for p in 0..2 {
        vac[(slot_index(p, 0), slot_index(p, 0))] = ONE;
    }
    let survive = on_photon(&(&pass * &rot)) + vac;
    let mut kraus = vec![survive];
    if pdl > 0.0 {
        let br = &block * &rot;
        let mut lost = CMatrix::zeros(4, 4);
        for r in 0..2 {
            for s in 0..2 {
                lost[(slot_index(r, 0), slot_index(s, 1))] = br[(r, s)];
            }
        }
        kraus.push(lost);
    }
    Channel::new(slot_label(), kraus)
}

/// Result of [`apply_polarization_error`].
#[derive(Clone, Debug)]
pub struct PolarizationErrorOutput {
    /// Fraction of the one-photon population that survived the differential loss.
    pub survival: f64,
    /// Full output, losses moved to the vacuum sector.
    pub state: DensityOperator,
}

pub fn apply_polarization_error(state: &DensityOperator, link: &LinkParams) -> Result<PolarizationErrorOutput> {
    check_slot(state.label())?;
    let before = photon_population(state.operator())?;
    let out = DensityOperator::new(polarization_error_channel(link)?.apply(state.operator())?)?;
    let after = photon_population(out.operator())?;
    let survival = if before > 0.0 { after / before } else { 1.0 };
    Ok(PolarizationErrorOutput { survival, state: out })
}

fn check_slot(label: &HilbertLabel) -> Result<()> {
    match (label.dim_of(Tag::Polarization), label.dim_of(Tag::PhotonNumber)) {
        (Some(2), Some(2)) => Ok(()),
        (Some(2), Some(d)) => Err(Error::DimensionMismatch { expected: 2, actual: d }),
        (None, _) => Err(Error::UnknownTag(Tag::Polarization)),
        _ => Err(Error::UnknownTag(Tag::PhotonNumber)),
    }
}

/// Population of the one-photon sector.
fn photon_population(op: &Operator) -> Result<f64> {
    let reduced = op.partial_trace(&[Tag::PhotonNumber])?;
    Ok(reduced.matrix()[(1, 1)].re)
}

/// Condition a slot state on the photon being present.
pub fn postselect_photon(state: &DensityOperator) -> Result<(f64, DensityOperator)> {
    check_slot(state.label())?;
    let mut proj = CMatrix::zeros(2, 2);
    proj[(1, 1)] = ONE;
    let num = Channel::new(HilbertLabel::single(Tag::PhotonNumber, 2), vec![proj])?;
    DensityOperator::normalize(num.apply(state.operator())?)
}

/// Output port of the polarising beamsplitter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Port {
    A,
    D,
}

impl Port {
    pub fn other(self) -> Port {
        match self {
            Port::A => Port::D,
            Port::D => Port::A,
        }
    }

    pub fn polarization(self) -> Polarization {
        match self {
            Port::A => Polarization::A,
            Port::D => Polarization::D,
        }
    }
}

/// What happened to one photon in the analyser.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Fate {
    Detected(Port),
    Lost,
}

impl Fate {
    pub const ALL: [Fate; 3] = [Fate::Detected(Port::A), Fate::Detected(Port::D), Fate::Lost];
}

/// The recorded result of one detection window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Detection {
    Click(Port),
    /// Both detectors fired; the port is the one recorded, the first photon's.
    Double(Port),
    None,
}

impl Detection {
    pub const ALL: [Detection; 5] = [
        Detection::Click(Port::A),
        Detection::Click(Port::D),
        Detection::Double(Port::A),
        Detection::Double(Port::D),
        Detection::None,
    ];

    pub fn index(self) -> usize {
        Detection::ALL.iter().position(|d| *d == self).expect("listed")
    }

    /// Port used for classification; `None` for a window without clicks.
    pub fn recorded_port(self) -> Option<Port> {
        match self {
            Detection::Click(p) | Detection::Double(p) => Some(p),
            Detection::None => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Detection::Click(Port::A) => "A",
            Detection::Click(Port::D) => "D",
            Detection::Double(Port::A) => "double-A",
            Detection::Double(Port::D) => "double-D",
            Detection::None => "none",
        }
    }
}

/// POVM elements of the three photon fates on a one-photon slot:
/// `η|A,1⟩⟨A,1|`, `η|D,1⟩⟨D,1|` and the remainder.
pub fn port_fates(det: &DetectorParams) -> [(Fate, CMatrix); 3] {
    let eta = c(det.efficiency, 0.0);
    let proj = |p: Polarization| {
        let v = p.vector();
        on_photon(&(&v * v.adjoint())) * eta
    };
    let a = proj(Polarization::A);
    let d = proj(Polarization::D);
    let lost = CMatrix::identity(4, 4) - &a - &d;
    [(Fate::Detected(Port::A), a), (Fate::Detected(Port::D), d), (Fate::Lost, lost)]
}

/// Distribution over [`Detection::ALL`] given the fates of the photons in one
/// window (in arrival order) and the per-detector dark-count probability.
///
/// A photon click takes precedence over a dark count for the recorded port.
/// If only dark counts fire on both detectors the recorded port is a fair
/// coin.
pub fn click_distribution(fates: &[Fate], dark: f64) -> [f64; 5] {
    let mut out = [0.0; 5];
    let first = fates.iter().find_map(|f| match f {
        Fate::Detected(p) => Some(*p),
        Fate::Lost => None,
    });
    match first {
        Some(p) => {
            let other_hit = fates.contains(&Fate::Detected(p.other()));
            if other_hit {
                out[Detection::Double(p).index()] = 1.0;
            } else {
                out[Detection::Click(p).index()] = 1.0 - dark;
                out[Detection::Double(p).index()] = dark;
            }
        }
        None => {
            let q = 1.0 - dark;
            out[Detection::None.index()] = q * q;
            out[Detection::Click(Port::A).index()] = dark * q;
            out[Detection::Click(Port::D).index()] = dark * q;
            out[Detection::Double(Port::A).index()] = 0.5 * dark * dark;
            out[Detection::Double(Port::D).index()] = 0.5 * dark * dark;
        }
    }
    out
}

/// One branch of an exact detection.
#[derive(Clone, Debug)]
pub struct DetectionBranch {
    pub outcome: Detection,
    pub probability: f64,
    /// State of the remaining systems given this outcome; `None` when the
    /// outcome cannot occur.
    pub state: Option<DensityOperator>,
}

/// Measure a one-photon slot in the `{A, D}` basis and return every outcome
/// with its probability and the conditioned state of the other factors.
pub fn detect_exact(state: &DensityOperator, det: &DetectorParams) -> Result<Vec<DetectionBranch>> {
    check_slot(state.label())?;
    let dark = det.dark_probability();
    let keep: Vec<Tag> = state
        .label()
        .parts()
        .iter()
        .map(|(t, _)| *t)
        .filter(|t| *t != Tag::Polarization && *t != Tag::PhotonNumber)
        .collect();

    let fate_states = port_fates(det)
        .into_iter()
        .map(|(fate, effect)| {
            let e = Operator::new(effect, slot_label())?.embed(state.label())?;
            let weighted = Operator::new(e * state.matrix(), state.label().clone())?;
            Ok((fate, weighted.partial_trace(&keep)?))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut branches = Vec::with_capacity(5);
    for outcome in Detection::ALL {
        let rest = fate_states[0].1.label().clone();
        let mut acc = CMatrix::zeros(rest.dim(), rest.dim());
        for (fate, op) in &fate_states {
            let w = click_distribution(std::slice::from_ref(fate), dark)[outcome.index()];
            if w > 0.0 {
                acc += op.matrix() * c(w, 0.0);
            }
        }
        let herm = (&acc + acc.adjoint()) * c(0.5, 0.0);
        let op = Operator::new(herm, rest)?;
        let p = op.trace().re;
        let st = if p > 1e-15 { Some(DensityOperator::normalize(op)?.1) } else { None };
        branches.push(DetectionBranch { outcome, probability: p.max(0.0), state: st });
    }
    Ok(branches)
}

/// Sampled counterpart of [`detect_exact`] with an explicit seed.
pub fn detect_sampled(
    state: &DensityOperator,
    det: &DetectorParams,
    seed: u64,
) -> Result<(Detection, Option<DensityOperator>)> {
    let branches = detect_exact(state, det)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let last = branches.iter().rposition(|b| b.probability > 0.0).unwrap_or(branches.len() - 1);
    for (i, b) in branches.into_iter().enumerate() {
        acc += b.probability;
        if u < acc || i == last {
            return Ok((b.outcome, b.state));
        }
    }
    unreachable!("at least one branch")
}
