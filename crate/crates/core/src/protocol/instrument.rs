use crate::cavity::{ideal_cnot_photon, realistic_reflection_channel};
use crate::pulses::{
    click_distribution, polarization_error_channel, port_fates, transmission_channel, Detection, DetectorParams, Fate,
    Port,
};
use crate::qstate::{CMatrix, Channel, HilbertLabel, Polarization, Superop, Tag, ZERO};
use crate::Result;

use super::quadrature::gaussian_quadrature;
use super::ProtocolConfig;

fn full_label() -> HilbertLabel {
    HilbertLabel::atoms().concat(&HilbertLabel::photon(1)).expect("distinct tags")
}

/// Atom maps for one photon, one per [`Fate`] in [`Fate::ALL`] order:
/// `S_f(ρ) = Tr_photon[E_f · Λ(ρ ⊗ |in⟩⟨in|)]` where `Λ` is the optical path.
#[derive(Clone, Debug)]
pub struct SlotFates {
    pub maps: [Superop; 3],
}

impl SlotFates {
    pub fn get(&self, fate: Fate) -> &Superop {
        match fate {
            Fate::Detected(Port::A) => &self.maps[0],
            Fate::Detected(Port::D) => &self.maps[1],
            Fate::Lost => &self.maps[2],
        }
    }
}

fn optical_path(cfg: &ProtocolConfig, jitter: (f64, f64)) -> Result<Vec<Channel>> {
    let full = full_label();
    let chain = if cfg.mode.is_ideal() {
        vec![ideal_cnot_photon(Tag::Atom1), ideal_cnot_photon(Tag::Atom2)]
    } else {
        vec![
            realistic_reflection_channel(&cfg.node1, Tag::Atom1, jitter.0),
            transmission_channel(2, cfg.link.node1_to_node2_transmission)?,
            polarization_error_channel(&cfg.link)?,
            realistic_reflection_channel(&cfg.node2, Tag::Atom2, jitter.1),
            transmission_channel(2, cfg.link.detection_path_efficiency)?,
        ]
    };
    chain.iter().map(|ch| ch.embed(&full)).collect()
}

/// Build the per-photon atom maps for an input polarisation at a fixed pair
/// of cavity-frequency offsets.
pub fn slot_fates(cfg: &ProtocolConfig, input: Polarization, jitter: (f64, f64)) -> Result<SlotFates> {
    let path = optical_path(cfg, jitter)?;
    let det = if cfg.mode.is_ideal() { DetectorParams::perfect() } else { cfg.detector };
    let effects = port_fates(&det);
    let jones = input.vector();
    // slot basis |pol, n⟩ → index 2·pol + n; the photon sits in n = 1
    let slot_in = [ZERO, jones[0], ZERO, jones[1]];

    let mut images: [Vec<CMatrix>; 3] = Default::default();
    for k in 0..4 {
        for l in 0..4 {
            let mut x = CMatrix::zeros(16, 16);
            for s in 0..4 {
                for t in 0..4 {
                    x[(k * 4 + s, l * 4 + t)] = slot_in[s] * slot_in[t].conj();
                }
            }
            for ch in &path {
                let mut y = CMatrix::zeros(16, 16);
                for kr in ch.kraus() {
                    y += kr * &x * kr.adjoint();
                }
                x = y;
            }
            for (f, (_, e)) in effects.iter().enumerate() {
                let mut img = CMatrix::zeros(4, 4);
                for i in 0..4 {
                    for j in 0..4 {
                        let mut acc = ZERO;
                        for s in 0..4 {
                            for t in 0..4 {
                                acc += e[(t, s)] * x[(i * 4 + s, j * 4 + t)];
                            }
                        }
                        img[(i, j)] = acc;
                    }
                }
                images[f].push(img);
            }
        }
    }
    let [a, d, lost] = images;
    Ok(SlotFates {
        maps: [Superop::from_images(4, &a), Superop::from_images(4, &d), Superop::from_images(4, &lost)],
    })
}

/// Product Gauss–Hermite grid over the two nodes' cavity-frequency offsets,
/// as `((offset₁, offset₂), weight)`.
pub fn jitter_grid(cfg: &ProtocolConfig) -> Vec<((f64, f64), f64)> {
    if cfg.mode.is_ideal() {
        return vec![((0.0, 0.0), 1.0)];
    }
    let k = cfg.timing.jitter_quadrature_points;
    let q1 = gaussian_quadrature(k, cfg.node1.cavity_freq_jitter_sigma);
    let q2 = gaussian_quadrature(k, cfg.node2.cavity_freq_jitter_sigma);
    let mut grid = Vec::with_capacity(q1.len() * q2.len());
    for (x1, w1) in &q1 {
        for (x2, w2) in &q2 {
            grid.push(((*x1, *x2), w1 * w2));
        }
    }
    grid
}

/// Atom maps of one pulse, one per [`Detection`] in [`Detection::ALL`]
/// order, summed over photon number and photon fates.
#[derive(Clone, Debug)]
pub struct PulseInstrument {
    pub branches: Vec<Superop>,
}

/// Photon history reduced to what decides the recorded outcome.
#[derive(Clone, Copy, PartialEq, Eq)]
struct History {
    first: Option<Port>,
    other_hit: bool,
}

impl History {
    fn push(self, fate: Fate) -> History {
        match (self.first, fate) {
            (None, Fate::Detected(p)) => History { first: Some(p), other_hit: false },
            (Some(p), Fate::Detected(q)) if q != p => History { first: Some(p), other_hit: true },
            _ => self,
        }
    }

    fn representative(self) -> Vec<Fate> {
        match self.first {
            None => vec![],
            Some(p) if self.other_hit => vec![Fate::Detected(p), Fate::Detected(p.other())],
            Some(p) => vec![Fate::Detected(p)],
        }
    }
}

impl PulseInstrument {
    /// `photon_numbers[n]` is the probability of `n` photons; photons act in
    /// sequence, each through `fates`.
    pub fn build(fates: &SlotFates, photon_numbers: &[f64], dark: f64) -> Self {
        let mut branches = vec![Superop::zero(4); Detection::ALL.len()];
        let mut histories: Vec<(History, Superop)> =
            vec![(History { first: None, other_hit: false }, Superop::identity(4))];
        for (n, &pn) in photon_numbers.iter().enumerate() {
            if n > 0 {
                let mut next: Vec<(History, Superop)> = Vec::new();
                for (h, acc) in &histories {
                    for fate in Fate::ALL {
                        let nh = h.push(fate);
                        let m = acc.then(fates.get(fate));
                        match next.iter_mut().find(|(k, _)| *k == nh) {
                            Some((_, s)) => s.add_assign(&m),
                            None => next.push((nh, m)),
                        }
                    }
                }
                histories = next;
            }
            if pn == 0.0 {
                continue;
            }
            for (h, acc) in &histories {
                let w = click_distribution(&h.representative(), dark);
                for (o, wo) in w.iter().enumerate() {
                    if *wo > 0.0 {
                        branches[o].add_assign(&acc.scaled(pn * wo));
                    }
                }
            }
        }
        Self { branches }
    }

    pub fn get(&self, d: Detection) -> &Superop {
        &self.branches[d.index()]
    }

    /// Sum over all outcomes; trace-preserving.
    pub fn total(&self) -> Superop {
        let mut s = Superop::zero(4);
        for b in &self.branches {
            s.add_assign(b);
        }
        s
    }
}

/// Convex combination `Σ wᵢ Sᵢ`.
pub(crate) fn weighted_sum<'a>(parts: impl IntoIterator<Item = (f64, &'a Superop)>) -> Superop {
    let mut s = Superop::zero(4);
    for (w, m) in parts {
        s.add_assign(&m.scaled(w));
    }
    s
}
