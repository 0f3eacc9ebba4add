//! Parity measurement, the two-ancilla Bell-state measurement and the
//! efficiency/timing model.
//!
//! Every measurement is precomputed as a set of branch superoperators on the
//! two-atom space (see [`BsmModel`] and [`ParityModel`]), so exact branch
//! probabilities, Monte Carlo sampling and detector tomography all read the
//! same maps.

mod bsm;
mod instrument;
pub mod noise;
pub mod quadrature;
mod timing;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cavity::NodeParams;
use crate::pulses::{Detection, DetectorParams, LinkParams, Port, PulseParams};
use crate::qstate::{BellState, DensityOperator};
use crate::{Error, Result};

pub use bsm::{
    bsm_exact, bsm_idempotence_check, bsm_sampled, parity_measurement, prepare, raman_rotation, BsmBranch,
    BsmExact, BsmModel, ClassifiedBranch, IdempotenceReport, ParityBranch, ParityModel, SampledRun,
};
pub use instrument::{jitter_grid, slot_fates, PulseInstrument, SlotFates};
pub use timing::{bsm_success_probability, link_efficiency, zeno_schedule, zeno_schedule_deterministic, EfficiencyReport};

/// How the protocol is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Truth-table gates, one photon per pulse, perfect detection, no noise.
    Ideal,
    /// Full noise budget, all branches summed exactly.
    NoisyExact,
    /// Full noise budget, Monte Carlo over shots.
    NoisySampled,
}

impl Mode {
    pub fn is_ideal(self) -> bool {
        self == Mode::Ideal
    }

    pub fn label(self) -> &'static str {
        match self {
            Mode::Ideal => "ideal",
            Mode::NoisyExact => "noisy-exact",
            Mode::NoisySampled => "noisy-sampled",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(Mode::Ideal),
            "noisy-exact" => Ok(Mode::NoisyExact),
            "noisy-sampled" => Ok(Mode::NoisySampled),
            _ => Err(Error::param("mode", format!("unknown mode `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RamanParams {
    /// Duration of one `π/2` rotation (s).
    pub rotation_time: f64,
    /// Single-qubit depolarisation probability per rotation.
    pub depolarization_per_pulse: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomParams {
    /// `T₂` (s); `f64::INFINITY` disables dephasing.
    pub coherence_time: f64,
    /// Fidelity of each prepared single-qubit state.
    pub prep_fidelity: f64,
    /// Probability of reading a single qubit correctly.
    pub readout_fidelity: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingParams {
    /// Time from a pulse to the next operation (s).
    pub pulse_period: f64,
    /// Gauss–Hermite points per node for the cavity-frequency average.
    pub jitter_quadrature_points: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub node1: NodeParams,
    pub node2: NodeParams,
    pub link: LinkParams,
    pub detector: DetectorParams,
    pub pulse1: PulseParams,
    pub pulse2: PulseParams,
    pub raman: RamanParams,
    pub atoms: AtomParams,
    pub timing: TimingParams,
    pub mode: Mode,
}

impl ProtocolConfig {
    /// The full noise budget with `n̄ = 0.34` on both pulses.
    pub fn full_budget() -> Self {
        Self {
            node1: NodeParams::budget_node1(),
            node2: NodeParams::budget_node2(),
            link: LinkParams::budget(),
            detector: DetectorParams::budget(),
            pulse1: PulseParams::bsm_pulse(),
            pulse2: PulseParams::bsm_pulse(),
            raman: RamanParams { rotation_time: 4e-6, depolarization_per_pulse: 0.009 },
            atoms: AtomParams { coherence_time: 400e-6, prep_fidelity: 0.985, readout_fidelity: 0.983 },
            timing: TimingParams { pulse_period: 2.5e-6, jitter_quadrature_points: 5 },
            mode: Mode::NoisyExact,
        }
    }

    /// The noise budget of the single parity measurement, `n̄ = 0.1`.
    pub fn parity_budget() -> Self {
        let p = PulseParams::parity_pulse();
        Self { pulse1: p, pulse2: p, ..Self::full_budget() }
    }

    pub fn ideal() -> Self {
        Self { mode: Mode::Ideal, ..Self::full_budget() }
    }

    /// Duration from the first ancilla to the detection of the second.
    pub fn elapsed_time(&self) -> f64 {
        2.0 * self.timing.pulse_period + self.raman.rotation_time
    }

    pub fn validate(&self) -> Result<()> {
        self.node1.validate("node1")?;
        self.node2.validate("node2")?;
        self.link.validate("link")?;
        self.detector.validate("detector")?;
        self.pulse1.validate("pulse1")?;
        self.pulse2.validate("pulse2")?;
        let r = &self.raman;
        if !(r.rotation_time >= 0.0 && r.rotation_time.is_finite()) {
            return Err(Error::param("raman.rotation_time", "must be non-negative"));
        }
        if !(0.0..=1.0).contains(&r.depolarization_per_pulse) {
            return Err(Error::param("raman.depolarization_per_pulse", "must lie in [0, 1]"));
        }
        let a = &self.atoms;
        if !(a.coherence_time > 0.0) {
            return Err(Error::param("atoms.coherence_time", "must be positive"));
        }
        for (name, v) in [("atoms.prep_fidelity", a.prep_fidelity), ("atoms.readout_fidelity", a.readout_fidelity)] {
            if !(0.5..=1.0).contains(&v) {
                return Err(Error::param(name, "must lie in [0.5, 1]"));
            }
        }
        let t = &self.timing;
        if !(t.pulse_period > 0.0 && t.pulse_period.is_finite()) {
            return Err(Error::param("timing.pulse_period", "must be positive"));
        }
        if t.jitter_quadrature_points == 0 {
            return Err(Error::param("timing.jitter_quadrature_points", "must be at least 1"));
        }
        Ok(())
    }
}

/// Result of classifying the two recorded ports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Classification {
    Bell(BellState),
    Fail,
}

impl Classification {
    pub const ALL: [Classification; 5] = [
        Classification::Bell(BellState::PhiPlus),
        Classification::Bell(BellState::PhiMinus),
        Classification::Bell(BellState::PsiPlus),
        Classification::Bell(BellState::PsiMinus),
        Classification::Fail,
    ];

    pub fn index(self) -> usize {
        match self {
            Classification::Bell(b) => b.index(),
            Classification::Fail => 4,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Classification::Bell(b) => b.label(),
            Classification::Fail => "fail",
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// `(A,A)→Φ+`, `(A,D)→Φ−`, `(D,A)→Ψ+`, `(D,D)→Ψ−`.
pub fn classify_ports(first: Port, second: Port) -> BellState {
    match (first, second) {
        (Port::A, Port::A) => BellState::PhiPlus,
        (Port::A, Port::D) => BellState::PhiMinus,
        (Port::D, Port::A) => BellState::PsiPlus,
        (Port::D, Port::D) => BellState::PsiMinus,
    }
}

/// The ports that identify `bell`.
pub fn ports_for(bell: BellState) -> (Port, Port) {
    match bell {
        BellState::PhiPlus => (Port::A, Port::A),
        BellState::PhiMinus => (Port::A, Port::D),
        BellState::PsiPlus => (Port::D, Port::A),
        BellState::PsiMinus => (Port::D, Port::D),
    }
}

pub fn classify(first: Detection, second: Detection) -> Classification {
    match (first.recorded_port(), second.recorded_port()) {
        (Some(a), Some(b)) => Classification::Bell(classify_ports(a, b)),
        _ => Classification::Fail,
    }
}

/// One Bell-state measurement, exact branch or sampled shot.
#[derive(Clone, Debug)]
pub struct OutcomeRecord {
    pub first: Detection,
    pub second: Detection,
    pub classified_bell: Classification,
    /// (s).
    pub elapsed_time: f64,
    pub post_state: DensityOperator,
}
