use crate::qstate::{DensityOperator, HilbertLabel};
use crate::{Error, Result};

use super::instrument::{jitter_grid, slot_fates};
use super::ProtocolConfig;

/// Success probability of a full measurement with two independent pulses.
///
/// Each pulse clicks when at least one photon is detected or a dark count
/// fires: `p = 1 − e^{−n̄η}·(1 − p_dark)`, with `p_dark` the probability of a
/// dark count on either detector.
pub fn bsm_success_probability(nbar1: f64, nbar2: f64, eta_total: f64, dark_any: f64) -> f64 {
    let click = |nbar: f64| 1.0 - (-nbar * eta_total).exp() * (1.0 - dark_any);
    click(nbar1) * click(nbar2)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EfficiencyReport {
    /// Probability that one photon entering node 1 is detected.
    pub eta_total: f64,
    pub click_probability1: f64,
    pub click_probability2: f64,
    pub success_probability: f64,
}

/// End-to-end efficiency of the full measurement. With no override the
/// single-photon transmission is taken from the optical model, averaged over
/// the cavity-frequency fluctuations, for unpolarised atoms.
pub fn link_efficiency(cfg: &ProtocolConfig, eta_override: Option<f64>) -> Result<EfficiencyReport> {
    cfg.validate()?;
    let eta = match eta_override {
        Some(e) if (0.0..=1.0).contains(&e) => e,
        Some(_) => return Err(Error::param("eta_total", "must lie in [0, 1]")),
        None => {
            let mixed = DensityOperator::maximally_mixed(HilbertLabel::atoms());
            let mut eta = 0.0;
            for (j, w) in jitter_grid(cfg) {
                let f = slot_fates(cfg, cfg.pulse1.input_polarization, j)?;
                let detected = &f.maps[0] + &f.maps[1];
                eta += w * detected.apply(mixed.matrix()).trace().re;
            }
            eta
        }
    };
    let d = if cfg.mode.is_ideal() { 0.0 } else { cfg.detector.dark_probability() };
    let dark_any = 1.0 - (1.0 - d) * (1.0 - d);
    let click = |nbar: f64| 1.0 - (-nbar * eta).exp() * (1.0 - dark_any);
    let p1 = click(cfg.pulse1.mean_photon_number);
    let p2 = click(cfg.pulse2.mean_photon_number);
    Ok(EfficiencyReport { eta_total: eta, click_probability1: p1, click_probability2: p2, success_probability: p1 * p2 })
}

/// Expected duration of a measurement when each pulse is repeated until it
/// clicks: `E[T] = 2·period/p + rotation_time`, `p = 1 − e^{−n̄η}`.
pub fn zeno_schedule(nbar: f64, pulse_period: f64, rotation_time: f64, eta_total: f64) -> Result<f64> {
    if !(eta_total > 0.0 && eta_total <= 1.0) {
        return Err(Error::param("eta_total", "must lie in (0, 1]"));
    }
    let p = -(-nbar * eta_total).exp_m1();
    schedule(p, pulse_period, rotation_time)
}

/// [`zeno_schedule`] for a deterministic single-photon source, `p = η`.
pub fn zeno_schedule_deterministic(pulse_period: f64, rotation_time: f64, eta_total: f64) -> Result<f64> {
    if !(eta_total > 0.0 && eta_total <= 1.0) {
        return Err(Error::param("eta_total", "must lie in (0, 1]"));
    }
    schedule(eta_total, pulse_period, rotation_time)
}

fn schedule(p: f64, pulse_period: f64, rotation_time: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::Degenerate("click probability is zero".into()));
    }
    if !(pulse_period > 0.0) || !(rotation_time >= 0.0) {
        return Err(Error::param("pulse_period", "durations must be non-negative"));
    }
    Ok(2.0 * pulse_period / p + rotation_time)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn success_examples() {
        let p = 1.0 - (-0.34f64 * 0.086).exp();
        assert_abs_diff_eq!(p, 0.0289, epsilon = 1e-4);
        let s = bsm_success_probability(0.34, 0.34, 0.086, 0.0);
        assert_abs_diff_eq!(s, p * p, epsilon = 1e-15);
        assert!((6e-4..1.3e-3).contains(&s));
        assert_abs_diff_eq!(bsm_success_probability(1e6, 1e6, 1.0, 0.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(bsm_success_probability(0.0, 0.0, 0.5, 1e-4), 1e-8, epsilon = 1e-20);
    }

    #[test]
    fn zeno_examples() {
        let t = zeno_schedule(0.1, 1e-6, 4e-6, 1.0).unwrap();
        let want = 2e-6 / (1.0 - (-0.1f64).exp()) + 4e-6;
        assert_abs_diff_eq!(t, want, epsilon = 1e-18);
        assert!((22e-6..26e-6).contains(&t));
        assert_eq!(zeno_schedule_deterministic(1e-6, 1e-6, 1.0).unwrap(), 3e-6);
        assert_abs_diff_eq!(zeno_schedule(1e3, 1e-6, 0.0, 1.0).unwrap(), 2e-6, epsilon = 1e-18);
        assert!(zeno_schedule(0.0, 1e-6, 4e-6, 1.0).is_err());
    }

    #[test]
    fn model_efficiency_is_in_budget() {
        let r = link_efficiency(&ProtocolConfig::full_budget(), None).unwrap();
        assert!(r.eta_total > 0.05 && r.eta_total < 0.15, "{r:?}");
        let r = link_efficiency(&ProtocolConfig::full_budget(), Some(0.086)).unwrap();
        assert!((6e-4..1.3e-3).contains(&r.success_probability));
    }
}
