use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use nbsm_core::tomography::CountTable;
use nbsm_expcli::compare::compare;
use nbsm_expcli::run::{execute, run_file};
use nbsm_expcli::{CliError, ExperimentFile, Overrides, Report};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run_into(name: &str, dir: &Path, extra: Overrides) -> Report {
    let o = Overrides { out: Some(dir.to_owned()), ..extra };
    run_file(&config(name), &o).unwrap().0
}

#[test]
fn every_shipped_config_validates() {
    for entry in fs::read_dir(config("")).unwrap() {
        let path = entry.unwrap().path();
        ExperimentFile::load(&path).and_then(|f| f.resolve()).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}

#[test]
fn bsm_run_writes_all_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let r = run_into("budget_bsm.toml", tmp.path(), Overrides::default());
    for f in ["report.json", "matrices.csv", "outcomes.csv", "fidelities.csv"] {
        assert!(tmp.path().join(f).is_file(), "{f}");
    }
    assert_eq!(r.outcomes.len(), 5);
    assert!(r.outcomes.iter().all(|o| o.std_error.is_none() && o.count.is_none()));
    assert_eq!(r.fidelity("Phi+").unwrap().reference, Some(0.653));
    let m = r.matrix("rho_Psi-").unwrap();
    assert_eq!((m.real.len(), m.imag[0].len()), (4, 4));
    let trace: f64 = (0..4).map(|i| m.real[i][i]).sum();
    assert!((trace - 1.0).abs() < 1e-12);

    let csv = fs::read_to_string(tmp.path().join("matrices.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("matrix,part,row,col,value"));
    assert_eq!(lines.count(), 4 * 2 * 16);
    assert_eq!(Report::load(tmp.path()).unwrap(), r);
}

#[test]
fn sampled_reports_are_byte_stable_across_worker_counts() {
    let mut file = ExperimentFile::load(&config("budget_bsm.toml")).unwrap();
    file.apply(&Overrides { shots: Some(9000), mode: Some("noisy-sampled".into()), seed: Some(3), out: None });
    let spec = file.resolve().unwrap();
    let json = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| execute(&spec).unwrap().report.to_json().unwrap())
    };
    let one = json(1);
    assert_eq!(one, json(4));
    let r: Report = serde_json::from_str(&one).unwrap();
    assert_eq!(r.shots, Some(9000));
    let total: u64 = r.outcomes.iter().map(|o| o.count.unwrap()).sum();
    assert_eq!(total, 9000);
    assert!(r.outcomes.iter().all(|o| o.std_error.is_some()));
}

#[test]
fn compare_ideal_against_budget() {
    let tmp = tempfile::tempdir().unwrap();
    let ideal = run_into("ideal_bsm.toml", &tmp.path().join("ideal"), Overrides::default());
    let noisy = run_into("budget_bsm.toml", &tmp.path().join("noisy"), Overrides::default());
    let c = compare(&ideal, &noisy).unwrap();
    assert_eq!(c.fidelities.len(), 4);
    assert!(c.fidelities.iter().all(|d| d.delta > 0.2), "{:?}", c.fidelities);
    assert_eq!(c.matrices.len(), 4);
    assert!(c.matrices.iter().all(|m| m.max_abs_delta > 0.0 && m.max_abs_delta < 1.0));
    assert!(c.unmatched.is_empty());

    let zeno = run_into("budget_zeno.toml", &tmp.path().join("zeno"), Overrides::default());
    assert!(matches!(compare(&ideal, &zeno), Err(CliError::KindMismatch(..))));
}

#[test]
fn povm_run_writes_a_readable_probe_table() {
    let tmp = tempfile::tempdir().unwrap();
    let r = run_into("budget_povm.toml", tmp.path(), Overrides::default());
    let table = CountTable::read_csv(fs::File::open(tmp.path().join("probe_table.csv")).unwrap()).unwrap();
    let CountTable::Probe(t) = table else { panic!("not a probe table") };
    assert_eq!(t.rows.len(), 36);
    assert_eq!(r.matrices.iter().map(|m| m.basis.as_str()).collect::<Vec<_>>(), ["bell"; 4]);
    assert!(r.summary["completeness_error"] < 1e-9);
}

#[test]
fn scalar_kinds_report_summaries() {
    let tmp = tempfile::tempdir().unwrap();
    let z = run_into("budget_zeno.toml", &tmp.path().join("z"), Overrides::default());
    assert!((22.0..=26.0).contains(&z.summary["expected_duration_us"]));
    assert_eq!(z.summary["deterministic_duration_us"], 3.0);
    let e = run_into("budget_efficiency.toml", &tmp.path().join("e"), Overrides::default());
    assert!((6e-4..=1.3e-3).contains(&e.summary["success_probability"]));
    let p = run_into("budget_parity.toml", &tmp.path().join("p"), Overrides::default());
    assert_eq!(p.fidelity("A").unwrap().target, "Phi+");
    assert_eq!(p.fidelity("D").unwrap().reference, Some(0.753));
}

#[test]
fn sampled_parity_counts_add_up() {
    let tmp = tempfile::tempdir().unwrap();
    let r = run_into("budget_parity.toml", tmp.path(), Overrides { shots: Some(5000), mode: Some("noisy-sampled".into()), ..Overrides::default() });
    assert_eq!(r.outcomes.iter().map(|o| o.count.unwrap()).sum::<u64>(), 5000);
}

#[test]
fn binary_reports_field_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config("budget_parity.toml")).unwrap();
    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, text.replace("mean_photon_number = 0.1", "mean_photon_number = -0.1")).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_nbsm")).arg("validate").arg(&bad).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("pulse1.mean_photon_number"), "{err}");

    let text = fs::read_to_string(config("budget_bsm.toml")).unwrap();
    let start = text.find("[detector]").unwrap();
    let end = start + text[start..].find("\n\n").unwrap();
    fs::write(&bad, format!("{}{}", &text[..start], &text[end..])).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_nbsm")).arg("run").arg(&bad).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("detector"));
}

#[test]
fn binary_run_honours_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("bsm");
    let status = Command::new(env!("CARGO_BIN_EXE_nbsm"))
        .env("NBSM_WORKERS", "2")
        .args(["run", config("budget_bsm.toml").to_str().unwrap(), "--shots", "2000", "--mode", "noisy-sampled", "--seed", "9", "--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let r = Report::load(&out_dir).unwrap();
    assert_eq!((r.seed, r.shots), (9, Some(2000)));
    assert_eq!(r.mode.label(), "noisy-sampled");
}
