//! Experiment files: TOML with units in the field names.
//!
//! ```toml
//! kind = "bsm-mixed-input"
//! mode = "noisy-exact"
//! seed = 7
//! input = "mixed"
//!
//! [output]
//! dir = "out/bsm"
//!
//! [node1]
//! g_mhz = 7.6
//! # ...
//! ```
//!
//! Physics blocks are optional at the syntax level; which ones a run needs
//! depends on `kind` and is checked by [`ExperimentFile::resolve`].

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nbsm_core::cavity::NodeParams;
use nbsm_core::protocol::{AtomParams, Mode, ProtocolConfig, RamanParams, TimingParams};
use nbsm_core::pulses::{DetectorParams, LinkParams, PulseParams};
use nbsm_core::qstate::{BellState, DensityOperator, HilbertLabel, Polarization, PureState, QubitState};
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

const MHZ: f64 = 2.0 * PI * 1e6;
const US: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Parity,
    BsmMixedInput,
    PovmTomography,
    Zeno,
    Efficiency,
}

impl Kind {
    pub fn label(self) -> &'static str {
        match self {
            Kind::Parity => "parity",
            Kind::BsmMixedInput => "bsm-mixed-input",
            Kind::PovmTomography => "povm-tomography",
            Kind::Zeno => "zeno",
            Kind::Efficiency => "efficiency",
        }
    }

    fn needs_protocol(self) -> bool {
        !matches!(self, Kind::Zeno)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeBlock {
    pub g_mhz: f64,
    pub kappa_mhz: f64,
    pub gamma_mhz: f64,
    pub kappa_r_fraction: f64,
    pub cavity_detuning_mhz: f64,
    pub atom_detuning_mhz: f64,
    pub cavity_jitter_sigma_khz: f64,
    pub mode_match_in: f64,
    pub birefringence_phase_rad: f64,
}

impl NodeBlock {
    fn to_params(&self) -> NodeParams {
        NodeParams {
            g: self.g_mhz * MHZ,
            kappa: self.kappa_mhz * MHZ,
            gamma: self.gamma_mhz * MHZ,
            kappa_r_fraction: self.kappa_r_fraction,
            cavity_detuning: self.cavity_detuning_mhz * MHZ,
            atom_detuning: self.atom_detuning_mhz * MHZ,
            cavity_freq_jitter_sigma: self.cavity_jitter_sigma_khz * 1e-3 * MHZ,
            mode_match_in: self.mode_match_in,
            birefringence_phase: self.birefringence_phase_rad,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkBlock {
    pub node_transmission: f64,
    pub detection_path_efficiency: f64,
    pub polarization_rotation_error_rad: f64,
    pub polarization_dependent_loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorBlock {
    pub efficiency: f64,
    pub dark_count_rate_hz: f64,
    pub detection_window_us: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseBlock {
    pub mean_photon_number: f64,
    pub fock_cutoff: usize,
    pub duration_fwhm_us: f64,
    pub polarization: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RamanBlock {
    pub rotation_time_us: f64,
    pub depolarization_per_pulse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomsBlock {
    pub coherence_time_us: f64,
    pub prep_fidelity: f64,
    pub readout_fidelity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingBlock {
    pub pulse_period_us: f64,
    pub jitter_quadrature_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZenoBlock {
    pub mean_photon_number: f64,
    pub pulse_period_us: f64,
    pub rotation_time_us: f64,
    pub eta_total: f64,
    /// Rotation time for the deterministic-source variant; defaults to
    /// `rotation_time_us`.
    pub deterministic_rotation_time_us: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EfficiencyBlock {
    /// Replace the modelled end-to-end transmission.
    pub eta_total: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: Option<PathBuf>,
}

/// Values reported next to the simulated fidelities, keyed by outcome label.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceBlock {
    #[serde(default)]
    pub fidelities: BTreeMap<String, f64>,
}

/// Raw contents of an experiment file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub kind: Kind,
    pub mode: Option<String>,
    pub seed: Option<u64>,
    pub shots: Option<u64>,
    /// `mixed`, a Bell label such as `Phi+`, or a product such as `ux-ux`.
    pub input: Option<String>,
    #[serde(default)]
    pub output: OutputBlock,
    pub node1: Option<NodeBlock>,
    pub node2: Option<NodeBlock>,
    pub link: Option<LinkBlock>,
    pub detector: Option<DetectorBlock>,
    pub pulse1: Option<PulseBlock>,
    pub pulse2: Option<PulseBlock>,
    pub raman: Option<RamanBlock>,
    pub atoms: Option<AtomsBlock>,
    pub timing: Option<TimingBlock>,
    pub zeno: Option<ZenoBlock>,
    pub efficiency: Option<EfficiencyBlock>,
    pub reference: Option<ReferenceBlock>,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub shots: Option<u64>,
    pub mode: Option<String>,
    pub out: Option<PathBuf>,
}

/// A fully checked experiment.
#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub kind: Kind,
    pub mode: Mode,
    pub seed: u64,
    pub shots: Option<u64>,
    pub input: InputState,
    pub protocol: Option<ProtocolConfig>,
    pub zeno: Option<ZenoBlock>,
    pub efficiency: EfficiencyBlock,
    pub reference: ReferenceBlock,
    pub output_dir: PathBuf,
    /// The file as parsed, after overrides, for the report echo.
    pub echo: ExperimentFile,
}

#[derive(Clone, Debug, PartialEq)]
pub enum InputState {
    Mixed,
    Bell(BellState),
    Product(QubitState, QubitState),
}

impl InputState {
    pub fn density(&self) -> DensityOperator {
        match self {
            InputState::Mixed => DensityOperator::maximally_mixed(HilbertLabel::atoms()),
            InputState::Bell(b) => PureState::bell(*b).projector(),
            InputState::Product(a, b) => PureState::atoms(*a, *b).projector(),
        }
    }
}

impl FromStr for InputState {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "mixed" {
            return Ok(InputState::Mixed);
        }
        if let Some(b) = BellState::ALL.iter().find(|b| b.label() == s) {
            return Ok(InputState::Bell(*b));
        }
        if let Some((a, b)) = s.split_once('-') {
            if let (Ok(a), Ok(b)) = (a.parse(), b.parse()) {
                return Ok(InputState::Product(a, b));
            }
        }
        Err(CliError::field("input", format!("unknown input state `{s}`")))
    }
}

fn require<'a, T>(block: &'a Option<T>, name: &str, kind: Kind) -> Result<&'a T> {
    block
        .as_ref()
        .ok_or_else(|| CliError::field(name, format!("block is required for a {} run", kind.label())))
}

/// Translate a parameter name used by the simulation core into the name of
/// the corresponding field in the experiment file.
pub fn file_field_name(core_field: &str) -> String {
    let (block, field) = core_field.split_once('.').unwrap_or(("", core_field));
    let renamed = match field {
        "g" => "g_mhz",
        "kappa" => "kappa_mhz",
        "gamma" => "gamma_mhz",
        "cavity_detuning" => "cavity_detuning_mhz",
        "atom_detuning" => "atom_detuning_mhz",
        "cavity_freq_jitter_sigma" => "cavity_jitter_sigma_khz",
        "birefringence_phase" => "birefringence_phase_rad",
        "node1_to_node2_transmission" => "node_transmission",
        "polarization_rotation_error" => "polarization_rotation_error_rad",
        "pol_dependent_loss" => "polarization_dependent_loss",
        "dark_count_rate" => "dark_count_rate_hz",
        "detection_window" => "detection_window_us",
        "duration_fwhm" => "duration_fwhm_us",
        "rotation_time" => "rotation_time_us",
        "coherence_time" => "coherence_time_us",
        "pulse_period" => "pulse_period_us",
        other => other,
    };
    if block.is_empty() {
        renamed.to_owned()
    } else {
        format!("{block}.{renamed}")
    }
}

fn pulse_params(b: &PulseBlock, name: &str) -> Result<PulseParams> {
    let pol = Polarization::from_str(&b.polarization)
        .map_err(|_| CliError::field(format!("{name}.polarization"), format!("unknown polarization `{}`", b.polarization)))?;
    Ok(PulseParams {
        mean_photon_number: b.mean_photon_number,
        fock_cutoff: b.fock_cutoff,
        duration_fwhm: b.duration_fwhm_us * US,
        input_polarization: pol,
    })
}

impl ExperimentFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = Some(s);
        }
        if let Some(s) = o.shots {
            self.shots = Some(s);
        }
        if let Some(m) = &o.mode {
            self.mode = Some(m.clone());
        }
        if let Some(d) = &o.out {
            self.output.dir = Some(d.clone());
        }
    }

    fn protocol(&self, mode: Mode) -> Result<ProtocolConfig> {
        let k = self.kind;
        let n1 = require(&self.node1, "node1", k)?;
        let n2 = require(&self.node2, "node2", k)?;
        let link = require(&self.link, "link", k)?;
        let det = require(&self.detector, "detector", k)?;
        let p1 = require(&self.pulse1, "pulse1", k)?;
        let p2 = match (&self.pulse2, k) {
            (Some(p), _) => p,
            (None, Kind::Parity) => p1,
            (None, _) => require(&self.pulse2, "pulse2", k)?,
        };
        let raman = require(&self.raman, "raman", k)?;
        let atoms = require(&self.atoms, "atoms", k)?;
        let timing = require(&self.timing, "timing", k)?;
        let cfg = ProtocolConfig {
            node1: n1.to_params(),
            node2: n2.to_params(),
            link: LinkParams {
                node1_to_node2_transmission: link.node_transmission,
                detection_path_efficiency: link.detection_path_efficiency,
                polarization_rotation_error: link.polarization_rotation_error_rad,
                pol_dependent_loss: link.polarization_dependent_loss,
            },
            detector: DetectorParams {
                efficiency: det.efficiency,
                dark_count_rate: det.dark_count_rate_hz,
                detection_window: det.detection_window_us * US,
            },
            pulse1: pulse_params(p1, "pulse1")?,
            pulse2: pulse_params(p2, if self.pulse2.is_some() { "pulse2" } else { "pulse1" })?,
            raman: RamanParams {
                rotation_time: raman.rotation_time_us * US,
                depolarization_per_pulse: raman.depolarization_per_pulse,
            },
            atoms: AtomParams {
                coherence_time: atoms.coherence_time_us * US,
                prep_fidelity: atoms.prep_fidelity,
                readout_fidelity: atoms.readout_fidelity,
            },
            timing: TimingParams {
                pulse_period: timing.pulse_period_us * US,
                jitter_quadrature_points: timing.jitter_quadrature_points,
            },
            mode,
        };
        cfg.validate().map_err(|e| match e {
            nbsm_core::Error::InvalidParameter { field, reason } => CliError::field(file_field_name(&field), reason),
            other => CliError::Core(other),
        })?;
        Ok(cfg)
    }

    /// Check every kind-specific requirement and build the runnable spec.
    pub fn resolve(&self) -> Result<ExperimentSpec> {
        let mode = match &self.mode {
            Some(m) => Mode::from_str(m).map_err(|_| CliError::field("mode", format!("unknown mode `{m}`")))?,
            None if self.shots.is_some() => Mode::NoisySampled,
            None => Mode::NoisyExact,
        };
        if mode != Mode::NoisySampled && self.shots.is_some() {
            log::warn!("shots is ignored in {} mode", mode.label());
        }
        if mode == Mode::NoisySampled {
            match self.shots {
                None => return Err(CliError::field("shots", "required in noisy-sampled mode")),
                Some(0) => return Err(CliError::field("shots", "must be positive")),
                Some(_) => {}
            }
        }
        let protocol = if self.kind.needs_protocol() { Some(self.protocol(mode)?) } else { None };
        let zeno = match self.kind {
            Kind::Zeno => {
                let z = require(&self.zeno, "zeno", self.kind)?.clone();
                if !(z.mean_photon_number >= 0.0) {
                    return Err(CliError::field("zeno.mean_photon_number", "must be non-negative"));
                }
                if !(z.eta_total > 0.0 && z.eta_total <= 1.0) {
                    return Err(CliError::field("zeno.eta_total", "must lie in (0, 1]"));
                }
                if !(z.pulse_period_us > 0.0) {
                    return Err(CliError::field("zeno.pulse_period_us", "must be positive"));
                }
                if !(z.rotation_time_us >= 0.0) || z.deterministic_rotation_time_us.is_some_and(|t| !(t >= 0.0)) {
                    return Err(CliError::field("zeno.rotation_time_us", "must be non-negative"));
                }
                Some(z)
            }
            _ => None,
        };
        let efficiency = self.efficiency.clone().unwrap_or_default();
        if let Some(e) = efficiency.eta_total {
            if !(0.0..=1.0).contains(&e) {
                return Err(CliError::field("efficiency.eta_total", "must lie in [0, 1]"));
            }
        }
        let default_input = match self.kind {
            Kind::Parity => "ux-ux",
            _ => "mixed",
        };
        let input = InputState::from_str(self.input.as_deref().unwrap_or(default_input))?;
        Ok(ExperimentSpec {
            kind: self.kind,
            mode,
            seed: self.seed.unwrap_or(0),
            shots: self.shots,
            input,
            protocol,
            zeno,
            efficiency,
            reference: self.reference.clone().unwrap_or_default(),
            output_dir: self.output.dir.clone().unwrap_or_else(|| PathBuf::from("nbsm-out")),
            echo: self.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const NODE: &str = r#"
g_mhz = 7.6
kappa_mhz = 2.5
gamma_mhz = 3.0
kappa_r_fraction = 0.9
cavity_detuning_mhz = 0.0
atom_detuning_mhz = 0.0
cavity_jitter_sigma_khz = 200.0
mode_match_in = 0.92
birefringence_phase_rad = 0.0
"#;

    fn physics(nbar: &str) -> String {
        format!(
            r#"
[node1]{NODE}
[node2]{NODE}
[link]
node_transmission = 0.49
detection_path_efficiency = 0.5556
polarization_rotation_error_rad = 0.1
polarization_dependent_loss = 0.05

[pulse1]
mean_photon_number = {nbar}
fock_cutoff = 2
duration_fwhm_us = 1.0
polarization = "A"

[raman]
rotation_time_us = 4.0
depolarization_per_pulse = 0.009

[atoms]
coherence_time_us = 400.0
prep_fidelity = 0.985
readout_fidelity = 0.983

[timing]
pulse_period_us = 2.5
jitter_quadrature_points = 5
"#
        )
    }

    const DETECTOR: &str = "\n[detector]\nefficiency = 0.9\ndark_count_rate_hz = 9.0\ndetection_window_us = 3.0\n";

    #[test]
    fn parity_file_resolves() {
        let text = format!("kind = \"parity\"\n{}{DETECTOR}", physics("0.1"));
        let spec = ExperimentFile::parse(&text).unwrap().resolve().unwrap();
        let cfg = spec.protocol.unwrap();
        assert!((cfg.node1.g - 7.6 * MHZ).abs() < 1e-6);
        assert_eq!(cfg.pulse2, cfg.pulse1);
        assert_eq!(spec.mode, Mode::NoisyExact);
        assert_eq!(spec.input, InputState::Product(QubitState::UpX, QubitState::UpX));
    }

    #[test]
    fn negative_photon_number_names_the_field() {
        let text = format!("kind = \"parity\"\n{}{DETECTOR}", physics("-0.1"));
        let err = ExperimentFile::parse(&text).unwrap().resolve().unwrap_err().to_string();
        assert!(err.contains("pulse1.mean_photon_number"), "{err}");
    }

    #[test]
    fn missing_detector_is_an_error() {
        let text = format!("kind = \"bsm-mixed-input\"\n{}", physics("0.34"));
        let err = ExperimentFile::parse(&text).unwrap().resolve().unwrap_err().to_string();
        assert!(err.contains("detector"), "{err}");
    }

    #[test]
    fn core_field_names_are_translated() {
        let mut text = format!("kind = \"parity\"\n{}{DETECTOR}", physics("0.1"));
        text = text.replacen("mode_match_in = 0.92", "mode_match_in = 1.5", 1);
        let err = ExperimentFile::parse(&text).unwrap().resolve().unwrap_err().to_string();
        assert!(err.contains("node1.mode_match_in"), "{err}");
        assert_eq!(file_field_name("node2.cavity_freq_jitter_sigma"), "node2.cavity_jitter_sigma_khz");
    }

    #[test]
    fn parse_errors_carry_location() {
        let err = ExperimentFile::parse("kind = \"parity\"\nseed = \"x\"\n").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        let err = ExperimentFile::parse("kind = \"parity\"\nbogus = 1\n").unwrap_err().to_string();
        assert!(err.contains("bogus"), "{err}");
    }

    #[test]
    fn sampled_mode_needs_shots() {
        let text = format!("kind = \"bsm-mixed-input\"\nmode = \"noisy-sampled\"\n{}{DETECTOR}", physics("0.34"));
        let text = text.replace("[raman]", "[pulse2]\nmean_photon_number = 0.34\nfock_cutoff = 2\nduration_fwhm_us = 1.0\npolarization = \"A\"\n\n[raman]");
        let mut f = ExperimentFile::parse(&text).unwrap();
        assert!(f.resolve().is_err());
        f.apply(&Overrides { shots: Some(10), ..Overrides::default() });
        assert_eq!(f.resolve().unwrap().mode, Mode::NoisySampled);
    }

    #[test]
    fn input_states_parse() {
        assert_eq!("mixed".parse::<InputState>().unwrap(), InputState::Mixed);
        assert_eq!("Psi-".parse::<InputState>().unwrap(), InputState::Bell(BellState::PsiMinus));
        assert_eq!("uz-dx".parse::<InputState>().unwrap(), InputState::Product(QubitState::UpZ, QubitState::DownX));
        assert!("up".parse::<InputState>().is_err());
    }

    #[test]
    fn zeno_needs_only_its_block() {
        let text = "kind = \"zeno\"\n[zeno]\nmean_photon_number = 0.1\npulse_period_us = 1.0\nrotation_time_us = 4.0\neta_total = 1.0\n";
        let spec = ExperimentFile::parse(text).unwrap().resolve().unwrap();
        assert!(spec.protocol.is_none());
        assert!(ExperimentFile::parse("kind = \"zeno\"\n").unwrap().resolve().is_err());
    }
}
