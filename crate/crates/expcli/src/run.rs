//! Executing a resolved experiment.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nbsm_core::protocol::{
    link_efficiency, prepare, zeno_schedule, zeno_schedule_deterministic, BsmModel, Classification, Mode,
    ParityModel, ProtocolConfig,
};
use nbsm_core::pulses::Port;
use nbsm_core::qstate::{bell_basis_matrix, BellState, CMatrix, DensityOperator, PureState};
use nbsm_core::tomography::{
    measured_state, povm_probabilities, povm_tomography, CountTable, PovmOptions, ProbeCounts, ProbeSet,
    PROBE_COLUMNS,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ExperimentFile, ExperimentSpec, Kind, Overrides};
use crate::report::{FidelityEntry, MatrixEntry, OutcomeEntry, Report, FORMAT};
use crate::{CliError, Result};

/// A finished run: the report plus any count tables to write next to it.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: Report,
    pub tables: Vec<(String, CountTable)>,
}

#[derive(Default)]
struct Body {
    outcomes: Vec<OutcomeEntry>,
    matrices: Vec<MatrixEntry>,
    fidelities: Vec<FidelityEntry>,
    summary: BTreeMap<String, f64>,
    tables: Vec<(String, CountTable)>,
}

pub fn execute(spec: &ExperimentSpec) -> Result<RunOutput> {
    let body = match spec.kind {
        Kind::Parity => parity(spec)?,
        Kind::BsmMixedInput => bsm(spec)?,
        Kind::PovmTomography => povm(spec)?,
        Kind::Zeno => zeno(spec)?,
        Kind::Efficiency => efficiency(spec)?,
    };
    let mut fidelities = body.fidelities;
    for f in &mut fidelities {
        f.reference = spec.reference.fidelities.get(&f.outcome).copied();
    }
    let report = Report {
        format: FORMAT.to_owned(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        kind: spec.kind,
        mode: spec.mode,
        seed: spec.seed,
        shots: if spec.mode == Mode::NoisySampled { spec.shots } else { None },
        spec: serde_json::to_value(&spec.echo)?,
        outcomes: body.outcomes,
        matrices: body.matrices,
        fidelities,
        summary: body.summary,
    };
    Ok(RunOutput { report, tables: body.tables })
}

/// Load, resolve, execute and write. Returns the report and its directory.
pub fn run_file(path: &Path, overrides: &Overrides) -> Result<(Report, PathBuf)> {
    let mut file = ExperimentFile::load(path)?;
    file.apply(overrides);
    let spec = file.resolve()?;
    let out = execute(&spec)?;
    out.report.write(&spec.output_dir, &out.tables)?;
    Ok((out.report, spec.output_dir))
}

fn protocol(spec: &ExperimentSpec) -> &ProtocolConfig {
    spec.protocol.as_ref().expect("resolved protocol kinds carry a configuration")
}

fn readout(cfg: &ProtocolConfig) -> f64 {
    if cfg.mode.is_ideal() {
        1.0
    } else {
        cfg.atoms.readout_fidelity
    }
}

fn sampled(spec: &ExperimentSpec) -> Option<u64> {
    (spec.mode == Mode::NoisySampled).then(|| spec.shots.expect("checked on resolve"))
}

fn binomial_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

fn no_events(what: &str) -> CliError {
    CliError::Core(nbsm_core::Error::Degenerate(format!("no {what} events; increase shots")))
}

fn computational(name: String, rho: &DensityOperator) -> MatrixEntry {
    MatrixEntry::new(name, "computational", rho.matrix())
}

/// Parity measurement. Without a configured input the atoms start in
/// `|↑x↑x⟩`, for which the A and D outcomes herald `Φ+` and `Ψ+`.
fn parity(spec: &ExperimentSpec) -> Result<Body> {
    let cfg = protocol(spec);
    let rho = prepare(&spec.input.density(), cfg)?;
    let branches = ParityModel::new(cfg)?.apply(&rho)?;
    let mut body = Body::default();

    let counts = sampled(spec).map(|shots| {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut c = [0u64; 3];
        for _ in 0..shots {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut k = 2;
            for (i, b) in branches.iter().enumerate() {
                acc += b.probability;
                if u < acc {
                    k = i;
                    break;
                }
            }
            c[k] += 1;
        }
        (shots, c)
    });

    for (i, b) in branches.iter().enumerate() {
        let label = match b.outcome {
            Some(Port::A) => "A",
            Some(Port::D) => "D",
            None => "none",
        };
        body.outcomes.push(match counts {
            Some((shots, c)) => {
                let f = c[i] as f64 / shots as f64;
                OutcomeEntry { label: label.into(), probability: f, count: Some(c[i]), std_error: Some(binomial_se(f, shots)) }
            }
            None => OutcomeEntry { label: label.into(), probability: b.probability, count: None, std_error: None },
        });
        let target = match b.outcome {
            Some(Port::A) => BellState::PhiPlus,
            Some(Port::D) => BellState::PsiPlus,
            None => continue,
        };
        let Some(post) = &b.post_state else { continue };
        let m = measured_state(post, readout(cfg))?;
        let fidelity = m.fidelity_pure(&PureState::bell(target))?;
        let std_error = counts.map(|(_, c)| binomial_se(fidelity, c[i].max(1)));
        body.fidelities.push(FidelityEntry {
            outcome: label.into(),
            target: target.label().into(),
            fidelity,
            std_error,
            reference: None,
        });
        body.matrices.push(computational(format!("rho_{label}"), &m));
    }
    let heralded: f64 = branches.iter().filter(|b| b.outcome.is_some()).map(|b| b.probability).sum();
    body.summary.insert("herald_probability".into(), heralded);
    let n = body.fidelities.len().max(1) as f64;
    body.summary.insert("mean_fidelity".into(), body.fidelities.iter().map(|f| f.fidelity).sum::<f64>() / n);
    Ok(body)
}

fn bsm(spec: &ExperimentSpec) -> Result<Body> {
    let cfg = protocol(spec);
    let rho = prepare(&spec.input.density(), cfg)?;
    let model = BsmModel::new(cfg)?;
    let mut body = Body::default();

    let mut states: Vec<Option<DensityOperator>> = Vec::new();
    let mut class_counts = None;
    match sampled(spec) {
        Some(shots) => {
            let run = model.sampled(&rho, shots, spec.seed)?;
            for cl in Classification::ALL {
                body.outcomes.push(OutcomeEntry {
                    label: cl.label().into(),
                    probability: run.frequency(cl),
                    count: Some(run.class_counts[cl.index()]),
                    std_error: Some(run.std_error(cl)),
                });
                states.push(run.mean_state(cl)?);
            }
            class_counts = Some(run.class_counts);
        }
        None => {
            let ex = model.exact(&rho)?;
            for cl in Classification::ALL {
                let b = ex.classified(cl);
                body.outcomes.push(OutcomeEntry {
                    label: cl.label().into(),
                    probability: b.probability,
                    count: None,
                    std_error: None,
                });
                states.push(b.post_state.clone());
            }
        }
    }

    for bell in BellState::ALL {
        let Some(post) = &states[bell.index()] else { continue };
        let m = measured_state(post, readout(cfg))?;
        let fidelity = m.fidelity_pure(&PureState::bell(bell))?;
        body.fidelities.push(FidelityEntry {
            outcome: bell.label().into(),
            target: bell.label().into(),
            fidelity,
            std_error: class_counts.map(|c| binomial_se(fidelity, c[bell.index()])),
            reference: None,
        });
        body.matrices.push(computational(format!("rho_{}", bell.label()), &m));
    }
    let success: f64 = body.outcomes[..4].iter().map(|o| o.probability).sum();
    body.summary.insert("success_probability".into(), success);
    if body.fidelities.is_empty() {
        log::warn!("no successful measurements; fidelities are not reported");
    } else {
        let mean = body.fidelities.iter().map(|f| f.fidelity).sum::<f64>() / body.fidelities.len() as f64;
        body.summary.insert("mean_fidelity".into(), mean);
    }
    body.summary.insert("elapsed_time_us".into(), cfg.elapsed_time() * 1e6);
    Ok(body)
}

/// Seed for the probe with index `i`, so probe streams never overlap.
fn probe_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add((i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn povm(spec: &ExperimentSpec) -> Result<Body> {
    let cfg = protocol(spec);
    let model = BsmModel::new(cfg)?;
    let probes = ProbeSet::canonical()
        .states()
        .iter()
        .map(|s| prepare(&s.projector(), cfg))
        .collect::<nbsm_core::Result<Vec<_>>>()?;
    let table = match sampled(spec) {
        Some(shots) => {
            let rows = probes
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let run = model.sampled(p, shots, probe_seed(spec.seed, i))?;
                    Ok([0, 1, 2, 3].map(|k| run.class_counts[k] as f64))
                })
                .collect::<Result<Vec<_>>>()?;
            ProbeCounts { rows }
        }
        None => povm_probabilities(&model.effects(), &probes, true)?,
    };
    if table.rows.iter().any(|r| r.iter().sum::<f64>() == 0.0) {
        return Err(no_events("successful probe"));
    }
    let rec = povm_tomography(&table, PovmOptions::default())?;

    let mut body = Body::default();
    let b = bell_basis_matrix();
    let fids = rec.povm.diagonal_fidelities();
    let total_shots = sampled(spec);
    for (k, e) in rec.povm.elements.iter().enumerate() {
        let in_bell: CMatrix = b.adjoint() * e * &b;
        body.matrices.push(MatrixEntry::new(format!("Pi_{}", PROBE_COLUMNS[k]), "bell", &in_bell));
        let successes: f64 = table.rows.iter().map(|r| r.iter().sum::<f64>()).sum();
        body.fidelities.push(FidelityEntry {
            outcome: PROBE_COLUMNS[k].into(),
            target: BellState::ALL[k].label().into(),
            fidelity: fids[k],
            std_error: total_shots.map(|_| binomial_se(fids[k].clamp(0.0, 1.0), (successes / 4.0).max(1.0) as u64)),
            reference: None,
        });
    }
    let mean = fids.iter().sum::<f64>() / 4.0;
    body.summary.insert("mean_fidelity".into(), mean);
    body.summary.insert("completeness_error".into(), rec.povm.completeness_error());
    body.tables.push(("probe_table.csv".into(), CountTable::Probe(table)));
    Ok(body)
}

fn zeno(spec: &ExperimentSpec) -> Result<Body> {
    let z = spec.zeno.as_ref().expect("checked on resolve");
    let us = 1e-6;
    let t = zeno_schedule(z.mean_photon_number, z.pulse_period_us * us, z.rotation_time_us * us, z.eta_total)?;
    let t_det = zeno_schedule_deterministic(
        z.pulse_period_us * us,
        z.deterministic_rotation_time_us.unwrap_or(z.rotation_time_us) * us,
        z.eta_total,
    )?;
    let mut body = Body::default();
    body.summary.insert("click_probability".into(), -(-z.mean_photon_number * z.eta_total).exp_m1());
    body.summary.insert("expected_duration_us".into(), t / us);
    body.summary.insert("deterministic_duration_us".into(), t_det / us);
    Ok(body)
}

fn efficiency(spec: &ExperimentSpec) -> Result<Body> {
    let r = link_efficiency(protocol(spec), spec.efficiency.eta_total)?;
    let mut body = Body::default();
    body.summary.insert("eta_total".into(), r.eta_total);
    body.summary.insert("click_probability1".into(), r.click_probability1);
    body.summary.insert("click_probability2".into(), r.click_probability2);
    body.summary.insert("success_probability".into(), r.success_probability);
    Ok(body)
}
