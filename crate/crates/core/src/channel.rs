//! Link-level outage: disconnection under Rayleigh fading and collision
//! under the capture effect, for a device `d1` metres from the gateway.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{activity_factor, NetworkScenario};
use crate::special::hyp2f1_capture;

/// Connection probability, capture probability and the resulting link outage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageBreakdown {
    pub h1: f64,
    pub q1: f64,
    pub link_outage: f64,
    pub distance_m: f64,
    pub sf: u8,
    pub copies: u32,
}

fn check_distance(scenario: &NetworkScenario, d: f64) -> Result<()> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::Domain(format!("distance must be positive, got {d}")));
    }
    if d > scenario.radius_m {
        return Err(Error::Domain(format!(
            "distance {d} m lies outside the {} m network radius",
            scenario.radius_m
        )));
    }
    Ok(())
}

/// Linear path gain `PL0^{-1} (d/d0)^{-η}`.
pub fn path_gain(scenario: &NetworkScenario, d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::Domain(format!("distance must be positive, got {d}")));
    }
    Ok((d / scenario.ref_dist_m).powf(-scenario.ploss_exponent) / scenario.ploss_ref())
}

/// Thermal noise plus receiver noise figure over the channel bandwidth, dBm.
pub fn noise_power_dbm(scenario: &NetworkScenario) -> f64 {
    -174.0 + scenario.noise_figure_db + 10.0 * scenario.bandwidth_hz.log10()
}

pub fn noise_power_w(scenario: &NetworkScenario) -> f64 {
    crate::params::dbm_to_watts(noise_power_dbm(scenario))
}

/// Mean received SNR (linear) at distance `d`.
pub fn mean_snr(scenario: &NetworkScenario, d: f64) -> Result<f64> {
    Ok(scenario.tx_power_w() * path_gain(scenario, d)? / noise_power_w(scenario))
}

/// `H1 = exp(−N q_j / (P_t g(d1)))`.
pub fn connection_prob(scenario: &NetworkScenario, sf: u8, d1: f64) -> Result<f64> {
    check_distance(scenario, d1)?;
    let q = scenario.sf_params(sf)?.snr_threshold();
    let snr = mean_snr(scenario, d1)?;
    Ok((-q / snr).exp())
}

/// Argument magnitude `R^η / (θ d1^η)` of the hypergeometric term.
pub fn capture_argument(scenario: &NetworkScenario, d1: f64) -> f64 {
    (scenario.radius_m / d1).powf(scenario.ploss_exponent) / scenario.theta()
}

/// `Q_{1,M}`: probability that the SIR exceeds θ when every device on `sf`
/// transmits `copies` times per period.
pub fn capture_prob(scenario: &NetworkScenario, sf: u8, d1: f64, copies: u32) -> Result<f64> {
    check_distance(scenario, d1)?;
    if copies == 0 {
        return Err(Error::Domain("copies must be at least 1".into()));
    }
    let rho = scenario.density(sf);
    let p = activity_factor(scenario, sf)?;
    if rho == 0.0 || scenario.theta() == 0.0 {
        return Ok(1.0);
    }
    let f = hyp2f1_capture(scenario.ploss_exponent, capture_argument(scenario, d1))?;
    let r2 = scenario.radius_m * scenario.radius_m;
    Ok((-2.0 * PI * r2 * rho * f64::from(copies) * p * f).exp())
}

/// `O_M = 1 − H1·Q_{1,M}` together with its two factors.
pub fn link_outage(
    scenario: &NetworkScenario,
    sf: u8,
    d1: f64,
    copies: u32,
) -> Result<OutageBreakdown> {
    let h1 = connection_prob(scenario, sf, d1)?;
    let q1 = capture_prob(scenario, sf, d1, copies)?;
    Ok(OutageBreakdown {
        h1,
        q1,
        link_outage: 1.0 - h1 * q1,
        distance_m: d1,
        sf,
        copies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn border_scenario() -> NetworkScenario {
        NetworkScenario::default().with_mean_devices(7, 100.0)
    }

    #[test]
    fn path_gain_reference_distance() {
        let s = NetworkScenario::default();
        let g = path_gain(&s, 15.0).unwrap();
        assert!((g - 10f64.powf(-5.505)).abs() / g < 1e-12);
        assert!((g - 3.126e-6).abs() < 1e-9);
        let mut t = s.clone();
        t.ploss_exponent = 5.7;
        assert_eq!(path_gain(&t, 15.0).unwrap(), g);
        assert!(path_gain(&s, 0.0).is_err());
    }

    #[test]
    fn path_loss_at_border() {
        let s = NetworkScenario::default();
        let loss_db = -10.0 * path_gain(&s, 200.0).unwrap().log10();
        let expected = 55.05 + 35.1 * (200.0f64 / 15.0).log10();
        assert!((loss_db - expected).abs() < 1e-10);
        assert!((loss_db - 94.53).abs() < 0.01);
    }

    #[test]
    fn noise_floor() {
        let mut s = NetworkScenario::default();
        assert!((noise_power_dbm(&s) - -117.03).abs() < 0.005);
        s.bandwidth_hz = 250e3;
        assert!((noise_power_dbm(&s) - -114.02).abs() < 0.005);
        s.bandwidth_hz = 1.0;
        s.noise_figure_db = 0.0;
        assert_eq!(noise_power_dbm(&s), -174.0);
    }

    #[test]
    fn connection_at_border() {
        let s = NetworkScenario::default();
        let snr_db = 10.0 * mean_snr(&s, 200.0).unwrap().log10();
        assert!((snr_db - 33.5).abs() < 0.05);
        let h7 = connection_prob(&s, 7, 200.0).unwrap();
        assert!((h7 - 0.99989).abs() < 5e-6, "{h7}");
        let h12 = connection_prob(&s, 12, 200.0).unwrap();
        assert!((h12 - 0.9999955).abs() < 5e-7, "{h12}");
    }

    #[test]
    fn connection_infinite_snr() {
        let mut s = NetworkScenario::default();
        s.tx_power_dbm = 400.0;
        assert_eq!(connection_prob(&s, 7, 200.0).unwrap(), 1.0);
    }

    #[test]
    fn rejects_bad_distance() {
        let s = NetworkScenario::default();
        assert!(matches!(connection_prob(&s, 7, 0.0), Err(Error::Domain(_))));
        assert!(matches!(capture_prob(&s, 7, 250.0, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn capture_without_interferers() {
        let s = NetworkScenario::default();
        assert_eq!(capture_prob(&s, 7, 100.0, 3).unwrap(), 1.0);
    }

    #[test]
    fn capture_at_border() {
        let s = border_scenario();
        let q = capture_prob(&s, 7, 200.0, 1).unwrap();
        let p = 41.22e-3 / 600.0;
        let f = hyp2f1_capture(3.51, 1.0 / 10f64.powf(0.1)).unwrap();
        assert!((q - (-2.0 * 100.0 * p * f).exp()).abs() < 1e-12);
        assert!((q - 0.98901).abs() < 5e-5, "{q}");
    }

    #[test]
    fn capture_power_law_in_copies() {
        let s = border_scenario();
        let q1 = capture_prob(&s, 7, 120.0, 1).unwrap();
        let q2 = capture_prob(&s, 7, 120.0, 2).unwrap();
        let q4 = capture_prob(&s, 7, 120.0, 4).unwrap();
        assert!((q2 - q1 * q1).abs() < 1e-14);
        assert!((q4 - q2 * q2).abs() < 1e-14);
    }

    #[test]
    fn link_outage_examples() {
        let mut s = NetworkScenario::default();
        s.tx_power_dbm = 400.0;
        let o = link_outage(&s, 7, 150.0, 2).unwrap();
        assert_eq!(o.link_outage, 0.0);

        let s = border_scenario();
        let o = link_outage(&s, 7, 200.0, 1).unwrap();
        assert_eq!(o.link_outage, 1.0 - o.h1 * o.q1);
        assert!((o.link_outage - 0.0111).abs() < 5e-5, "{}", o.link_outage);
    }

    proptest! {
        #[test]
        fn link_outage_monotone(
            eta in 2.2f64..5.0,
            n_bar in 1.0f64..3000.0,
            d_frac in 0.05f64..0.95,
            step in 0.01f64..0.5,
            copies in 1u32..8,
            sf in 7u8..=12,
        ) {
            let mut s = NetworkScenario::default();
            s.ploss_exponent = eta;
            let s = s.with_mean_devices(sf, n_bar);
            let d = d_frac * s.radius_m;
            let d_far = (d_frac + step).min(1.0) * s.radius_m;
            let base = link_outage(&s, sf, d, copies).unwrap();
            prop_assert!((0.0..=1.0).contains(&base.link_outage));
            prop_assert!(link_outage(&s, sf, d_far, copies).unwrap().link_outage >= base.link_outage);
            let more = link_outage(&s, sf, d, copies + 1).unwrap();
            prop_assert!(more.link_outage >= base.link_outage);
            prop_assert!(more.q1 <= base.q1);
            prop_assert_eq!(more.h1, base.h1);
            let denser = s.clone().with_mean_devices(sf, n_bar * 1.5);
            prop_assert!(link_outage(&denser, sf, d, copies).unwrap().link_outage >= base.link_outage);
        }
    }
}
