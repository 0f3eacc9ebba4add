use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::pulses::{click_distribution, truncated_photon_numbers, Detection, Fate, Port, PulseParams};
use crate::qstate::{c, CMatrix, DensityOperator, HilbertLabel, Operator, Superop};
use crate::{Error, Result};

use super::instrument::{jitter_grid, slot_fates, weighted_sum, PulseInstrument, SlotFates};
use super::noise::{depolarizing, dephasing, rotation_unitary};
use super::{classify, Classification, OutcomeRecord, ProtocolConfig};

const MIN_BRANCH_PROBABILITY: f64 = 1e-15;

fn check_atoms(rho: &DensityOperator) -> Result<()> {
    if rho.label() != &HilbertLabel::atoms() {
        return Err(Error::DimensionMismatch { expected: 4, actual: rho.label().dim() });
    }
    Ok(())
}

fn to_state(m: CMatrix) -> Result<(f64, Option<DensityOperator>)> {
    let herm = (&m + m.adjoint()) * c(0.5, 0.0);
    let op = Operator::new(herm, HilbertLabel::atoms())?;
    let p = op.trace().re;
    if p > MIN_BRANCH_PROBABILITY {
        let (_, s) = DensityOperator::normalize(op)?;
        Ok((p, Some(s)))
    } else {
        Ok((p.max(0.0), None))
    }
}

fn photon_numbers(cfg: &ProtocolConfig, pulse: &PulseParams) -> Result<Vec<f64>> {
    if cfg.mode.is_ideal() {
        Ok(vec![0.0, 1.0])
    } else {
        truncated_photon_numbers(pulse)
    }
}

fn dark_probability(cfg: &ProtocolConfig) -> f64 {
    if cfg.mode.is_ideal() {
        0.0
    } else {
        cfg.detector.dark_probability()
    }
}

fn dephase(cfg: &ProtocolConfig, t: f64) -> Superop {
    if cfg.mode.is_ideal() {
        Superop::identity(4)
    } else {
        dephasing(t, cfg.atoms.coherence_time)
    }
}

fn rotation_superop(angle: f64, cfg: &ProtocolConfig) -> Result<Superop> {
    let u = Superop::from_unitary(&rotation_unitary(angle)?);
    if cfg.mode.is_ideal() {
        Ok(u)
    } else {
        Ok(u.then(&depolarizing(cfg.raman.depolarization_per_pulse)))
    }
}

/// State preparation error: single-qubit depolarisation leaving each
/// prepared qubit with the configured fidelity. Identity in ideal mode.
pub fn prepare(rho: &DensityOperator, cfg: &ProtocolConfig) -> Result<DensityOperator> {
    check_atoms(rho)?;
    if cfg.mode.is_ideal() {
        return Ok(rho.clone());
    }
    let p = 2.0 * (1.0 - cfg.atoms.prep_fidelity);
    let out = depolarizing(p).apply(rho.matrix());
    Ok(to_state(out)?.1.expect("trace-preserving"))
}

/// Simultaneous `R_y(±π/2)` on both atoms, with per-atom depolarisation in
/// the noisy modes.
pub fn raman_rotation(rho: &DensityOperator, angle: f64, cfg: &ProtocolConfig) -> Result<DensityOperator> {
    check_atoms(rho)?;
    let out = rotation_superop(angle, cfg)?.apply(rho.matrix());
    Ok(to_state(out)?.1.expect("trace-preserving"))
}

/// Parity measurement with the first pulse, branches keyed by the recorded port.
#[derive(Clone, Debug)]
pub struct ParityModel {
    branches: [Superop; 3],
}

#[derive(Clone, Debug)]
pub struct ParityBranch {
    /// `None` when neither detector fired.
    pub outcome: Option<Port>,
    pub probability: f64,
    pub post_state: Option<DensityOperator>,
}

impl ParityModel {
    pub fn new(cfg: &ProtocolConfig) -> Result<Self> {
        cfg.validate()?;
        let photons = photon_numbers(cfg, &cfg.pulse1)?;
        let dark = dark_probability(cfg);
        let grid = jitter_grid(cfg);
        let mut insts = Vec::with_capacity(grid.len());
        for (j, _) in &grid {
            let f = slot_fates(cfg, cfg.pulse1.input_polarization, *j)?;
            insts.push(PulseInstrument::build(&f, &photons, dark));
        }
        let after = dephase(cfg, cfg.timing.pulse_period);
        let avg = |d: Detection| {
            weighted_sum(grid.iter().zip(&insts).map(|((_, w), inst)| (*w, inst.get(d)))).then(&after)
        };
        let merge = |a: Detection, b: Detection| &avg(a) + &avg(b);
        Ok(Self {
            branches: [
                merge(Detection::Click(Port::A), Detection::Double(Port::A)),
                merge(Detection::Click(Port::D), Detection::Double(Port::D)),
                avg(Detection::None),
            ],
        })
    }

    pub fn branch(&self, outcome: Option<Port>) -> &Superop {
        match outcome {
            Some(Port::A) => &self.branches[0],
            Some(Port::D) => &self.branches[1],
            None => &self.branches[2],
        }
    }

    pub fn apply(&self, rho: &DensityOperator) -> Result<Vec<ParityBranch>> {
        check_atoms(rho)?;
        [Some(Port::A), Some(Port::D), None]
            .into_iter()
            .map(|o| {
                let (p, s) = to_state(self.branch(o).apply(rho.matrix()))?;
                Ok(ParityBranch { outcome: o, probability: p, post_state: s })
            })
            .collect()
    }
}

pub fn parity_measurement(rho: &DensityOperator, cfg: &ProtocolConfig) -> Result<Vec<ParityBranch>> {
    ParityModel::new(cfg)?.apply(rho)
}

struct GridPoint {
    weight: f64,
    fates1: SlotFates,
    fates2: SlotFates,
}

/// Precomputed branch maps of the full measurement
/// `parity → R(+π/2) → parity → R(−π/2)`.
pub struct BsmModel {
    cfg: ProtocolConfig,
    grid: Vec<GridPoint>,
    photons1: Vec<f64>,
    photons2: Vec<f64>,
    dark: f64,
    /// Everything between the two pulses.
    middle: Superop,
    /// Everything after the second pulse.
    tail: Superop,
    /// `(first, second)` in `Detection::ALL × Detection::ALL` order.
    branches: Vec<((Detection, Detection), Superop)>,
}

impl BsmModel {
    pub fn new(cfg: &ProtocolConfig) -> Result<Self> {
        cfg.validate()?;
        let photons1 = photon_numbers(cfg, &cfg.pulse1)?;
        let photons2 = photon_numbers(cfg, &cfg.pulse2)?;
        let dark = dark_probability(cfg);
        let t_pulse = dephase(cfg, cfg.timing.pulse_period);
        let middle = t_pulse
            .then(&rotation_superop(std::f64::consts::FRAC_PI_2, cfg)?)
            .then(&dephase(cfg, cfg.raman.rotation_time));
        let tail = t_pulse.then(&rotation_superop(-std::f64::consts::FRAC_PI_2, cfg)?);

        let mut grid = Vec::new();
        let mut branches: Vec<((Detection, Detection), Superop)> = Detection::ALL
            .iter()
            .flat_map(|a| Detection::ALL.iter().map(move |b| ((*a, *b), Superop::zero(4))))
            .collect();
        for (j, w) in jitter_grid(cfg) {
            let fates1 = slot_fates(cfg, cfg.pulse1.input_polarization, j)?;
            let fates2 = if cfg.pulse2.input_polarization == cfg.pulse1.input_polarization {
                fates1.clone()
            } else {
                slot_fates(cfg, cfg.pulse2.input_polarization, j)?
            };
            let m1 = PulseInstrument::build(&fates1, &photons1, dark);
            let m2 = PulseInstrument::build(&fates2, &photons2, dark);
            for ((a, b), acc) in branches.iter_mut() {
                let map = m1.get(*a).then(&middle).then(m2.get(*b)).then(&tail);
                acc.add_assign(&map.scaled(w));
            }
            grid.push(GridPoint { weight: w, fates1, fates2 });
        }
        Ok(Self { cfg: *cfg, grid, photons1, photons2, dark, middle, tail, branches })
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.cfg
    }

    pub fn branches(&self) -> &[((Detection, Detection), Superop)] {
        &self.branches
    }

    /// Branch maps summed per classification, in [`Classification::ALL`] order.
    pub fn classified_maps(&self) -> Vec<Superop> {
        let mut out = vec![Superop::zero(4); Classification::ALL.len()];
        for ((a, b), m) in &self.branches {
            out[classify(*a, *b).index()].add_assign(m);
        }
        out
    }

    /// Effects `E_j` with `P(j) = Tr(E_j ρ)`, in [`Classification::ALL`] order.
    pub fn effects(&self) -> Vec<CMatrix> {
        self.classified_maps().iter().map(Superop::effect).collect()
    }

    pub fn exact(&self, rho: &DensityOperator) -> Result<BsmExact> {
        check_atoms(rho)?;
        let elapsed = self.cfg.elapsed_time();
        let mut branches = Vec::new();
        for ((a, b), m) in &self.branches {
            let (p, s) = to_state(m.apply(rho.matrix()))?;
            if let Some(post_state) = s {
                branches.push(BsmBranch {
                    probability: p,
                    record: OutcomeRecord {
                        first: *a,
                        second: *b,
                        classified_bell: classify(*a, *b),
                        elapsed_time: elapsed,
                        post_state,
                    },
                });
            }
        }
        let classified = self
            .classified_maps()
            .iter()
            .zip(Classification::ALL)
            .map(|(m, cl)| {
                let (p, s) = to_state(m.apply(rho.matrix()))?;
                Ok(ClassifiedBranch { classification: cl, probability: p, post_state: s })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BsmExact { branches, classified })
    }

    fn sample_pulse(
        fates: &SlotFates,
        photons: &[f64],
        dark: f64,
        rho: &mut CMatrix,
        rng: &mut ChaCha8Rng,
    ) -> Detection {
        let n = sample_index(photons.iter().copied(), rng);
        let mut history = Vec::with_capacity(n);
        for _ in 0..n {
            let outs: Vec<CMatrix> = Fate::ALL.iter().map(|f| fates.get(*f).apply(rho)).collect();
            let probs: Vec<f64> = outs.iter().map(|m| m.trace().re.max(0.0)).collect();
            let k = sample_index(probs.iter().copied(), rng);
            *rho = &outs[k] * c(1.0 / probs[k], 0.0);
            history.push(Fate::ALL[k]);
        }
        let w = click_distribution(&history, dark);
        Detection::ALL[sample_index(w.iter().copied(), rng)]
    }

    /// One Monte Carlo shot. The stream is fixed by `(master_seed, shot)`.
    pub fn sample_shot(&self, rho: &DensityOperator, master_seed: u64, shot: u64) -> (Detection, Detection, CMatrix) {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(shot);
        let g = &self.grid[sample_index(self.grid.iter().map(|g| g.weight), &mut rng)];
        let mut m = rho.matrix().clone();
        let first = Self::sample_pulse(&g.fates1, &self.photons1, self.dark, &mut m, &mut rng);
        m = self.middle.apply(&m);
        let second = Self::sample_pulse(&g.fates2, &self.photons2, self.dark, &mut m, &mut rng);
        m = self.tail.apply(&m);
        let tr = m.trace();
        (first, second, m / tr)
    }

    pub fn sampled(&self, rho: &DensityOperator, shots: u64, master_seed: u64) -> Result<SampledRun> {
        check_atoms(rho)?;
        if shots == 0 {
            return Err(Error::param("shots", "must be positive for sampled mode"));
        }
        const CHUNK: u64 = 4096;
        let chunks = shots.div_ceil(CHUNK);
        let parts: Vec<SampledRun> = (0..chunks)
            .into_par_iter()
            .map(|ci| {
                let mut run = SampledRun::empty();
                for shot in ci * CHUNK..((ci + 1) * CHUNK).min(shots) {
                    let (a, b, m) = self.sample_shot(rho, master_seed, shot);
                    run.record(a, b, &m);
                }
                run
            })
            .collect();
        let mut total = SampledRun::empty();
        for p in &parts {
            total.merge(p);
        }
        Ok(total)
    }
}

fn sample_index(weights: impl Iterator<Item = f64> + Clone, rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights.clone().sum();
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            acc += w;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

#[derive(Clone, Debug)]
pub struct BsmBranch {
    pub probability: f64,
    pub record: OutcomeRecord,
}

#[derive(Clone, Debug)]
pub struct ClassifiedBranch {
    pub classification: Classification,
    pub probability: f64,
    pub post_state: Option<DensityOperator>,
}

/// All branches of one exact evaluation.
#[derive(Clone, Debug)]
pub struct BsmExact {
    /// Every `(first, second)` pair with nonzero probability.
    pub branches: Vec<BsmBranch>,
    /// Branches merged per classification, in [`Classification::ALL`] order.
    pub classified: Vec<ClassifiedBranch>,
}

impl BsmExact {
    pub fn classified(&self, cl: Classification) -> &ClassifiedBranch {
        &self.classified[cl.index()]
    }

    /// Total probability of a successful classification.
    pub fn success_probability(&self) -> f64 {
        self.classified[..4].iter().map(|b| b.probability).sum()
    }

    /// `Σ_branch p · ρ_branch`.
    pub fn mixture(&self) -> CMatrix {
        let mut m = CMatrix::zeros(4, 4);
        for b in &self.branches {
            m += b.record.post_state.matrix() * c(b.probability, 0.0);
        }
        m
    }
}

pub fn bsm_exact(rho: &DensityOperator, cfg: &ProtocolConfig) -> Result<BsmExact> {
    BsmModel::new(cfg)?.exact(rho)
}

pub fn bsm_sampled(rho: &DensityOperator, cfg: &ProtocolConfig, shots: u64, master_seed: u64) -> Result<SampledRun> {
    BsmModel::new(cfg)?.sampled(rho, shots, master_seed)
}

/// Aggregated Monte Carlo shots.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledRun {
    pub shots: u64,
    /// Counts per `(first, second)` in `Detection::ALL × Detection::ALL` order.
    pub counts: Vec<u64>,
    /// Counts per classification.
    pub class_counts: [u64; 5],
    state_sums: Vec<CMatrix>,
}

impl SampledRun {
    fn empty() -> Self {
        Self {
            shots: 0,
            counts: vec![0; 25],
            class_counts: [0; 5],
            state_sums: vec![CMatrix::zeros(4, 4); 5],
        }
    }

    fn record(&mut self, a: Detection, b: Detection, post: &CMatrix) {
        self.shots += 1;
        self.counts[a.index() * 5 + b.index()] += 1;
        let cl = classify(a, b).index();
        self.class_counts[cl] += 1;
        self.state_sums[cl] += post;
    }

    fn merge(&mut self, other: &SampledRun) {
        self.shots += other.shots;
        for (x, y) in self.counts.iter_mut().zip(&other.counts) {
            *x += y;
        }
        for (x, y) in self.class_counts.iter_mut().zip(&other.class_counts) {
            *x += y;
        }
        for (x, y) in self.state_sums.iter_mut().zip(&other.state_sums) {
            *x += y;
        }
    }

    pub fn count(&self, first: Detection, second: Detection) -> u64 {
        self.counts[first.index() * 5 + second.index()]
    }

    pub fn frequency(&self, cl: Classification) -> f64 {
        self.class_counts[cl.index()] as f64 / self.shots as f64
    }

    /// Binomial standard error of [`SampledRun::frequency`].
    pub fn std_error(&self, cl: Classification) -> f64 {
        let p = self.frequency(cl);
        (p * (1.0 - p) / self.shots as f64).sqrt()
    }

    /// Average post-measurement state of the shots with classification `cl`.
    pub fn mean_state(&self, cl: Classification) -> Result<Option<DensityOperator>> {
        let n = self.class_counts[cl.index()];
        if n == 0 {
            return Ok(None);
        }
        let m = &self.state_sums[cl.index()] * c(1.0 / n as f64, 0.0);
        Ok(to_state(m)?.1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdempotenceReport {
    pub passed: bool,
    pub branches_checked: usize,
    /// Largest `1 − P(same classification in round two)`.
    pub worst_deviation: f64,
}

/// Re-measure every first-round branch and check that it reproduces its label.
pub fn bsm_idempotence_check(rho: &DensityOperator, cfg: &ProtocolConfig) -> Result<IdempotenceReport> {
    if !cfg.mode.is_ideal() {
        return Err(Error::WrongMode("ideal"));
    }
    let model = BsmModel::new(cfg)?;
    let first = model.exact(rho)?;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for br in &first.classified {
        let Some(post) = &br.post_state else { continue };
        if br.probability < 1e-12 {
            continue;
        }
        let again = model.exact(post)?;
        worst = worst.max((1.0 - again.classified(br.classification).probability).abs());
        checked += 1;
    }
    Ok(IdempotenceReport { passed: worst < 1e-9, branches_checked: checked, worst_deviation: worst })
}
