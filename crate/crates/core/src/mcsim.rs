//! Monte Carlo check of the channel module: Rayleigh-faded SNR test for
//! connection, and a Poisson interferer field on the disk with the summed
//! SIR test for capture.
//!
//! Interferers are drawn with the doubled, copy-scaled intensity
//! `2 ρ_j M p_j` used by the analytic capture probability.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use serde::{Deserialize, Serialize};

use crate::channel::mean_snr;
use crate::error::{Error, Result};
use crate::params::{activity_factor, NetworkScenario};
use crate::sampling::{count_hits, Estimate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub scenario: NetworkScenario,
    pub sf: u8,
    pub d1: f64,
    pub copies: u32,
    pub trials: u64,
    pub seed: u64,
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.scenario.sf_params(self.sf)?;
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.copies == 0 {
            return Err(Error::InvalidConfig("copies must be at least 1".into()));
        }
        if !(self.d1 > 0.0 && self.d1 <= self.scenario.radius_m) {
            return Err(Error::InvalidConfig(format!(
                "d1 = {} must lie in (0, {}]",
                self.d1, self.scenario.radius_m
            )));
        }
        Ok(())
    }
}

/// Uniform point on a disk of radius `radius`: distance from the centre.
pub fn sample_disk_radius<R: Rng>(rng: &mut R, radius: f64) -> f64 {
    radius * rng.random::<f64>().sqrt()
}

/// Per-trial draws shared by the three estimators.
struct Field {
    snr: f64,
    q: f64,
    theta: f64,
    eta: f64,
    d1: f64,
    radius: f64,
    interferers: Option<Poisson<f64>>,
}

impl Field {
    fn new(cfg: &TrialConfig) -> Result<Self> {
        cfg.validate()?;
        let s = &cfg.scenario;
        let lambda = 2.0 * s.density(cfg.sf) * f64::from(cfg.copies) * activity_factor(s, cfg.sf)? * s.area_m2();
        let interferers = if lambda > 0.0 {
            Some(Poisson::new(lambda).map_err(|e| Error::Numeric(format!("poisson mean {lambda}: {e}")))?)
        } else {
            None
        };
        Ok(Field {
            snr: mean_snr(s, cfg.d1)?,
            q: s.sf_params(cfg.sf)?.snr_threshold(),
            theta: s.theta(),
            eta: s.ploss_exponent,
            d1: cfg.d1,
            radius: s.radius_m,
            interferers,
        })
    }

    fn connected<R: Rng>(&self, rng: &mut R) -> bool {
        let h: f64 = Exp1.sample(rng);
        h * self.snr >= self.q
    }

    fn captured<R: Rng>(&self, rng: &mut R) -> bool {
        let h1: f64 = Exp1.sample(rng);
        let Some(poisson) = &self.interferers else {
            return true;
        };
        let k = poisson.sample(rng) as u64;
        // interference normalised by the desired link's path gain
        let mut sum = 0.0;
        for _ in 0..k {
            let d = sample_disk_radius(rng, self.radius);
            let h: f64 = Exp1.sample(rng);
            sum += h * (self.d1 / d).powf(self.eta);
        }
        h1 > self.theta * sum
    }
}

/// Fraction of trials with faded SNR at or above the SF threshold.
pub fn simulate_connection(cfg: &TrialConfig) -> Result<Estimate> {
    let field = Field::new(cfg)?;
    Ok(Estimate::from_counts(count_hits(cfg.trials, cfg.seed, |rng| field.connected(rng)), cfg.trials, cfg.seed))
}

/// Fraction of trials where the desired signal beats θ times the summed interference.
pub fn simulate_capture(cfg: &TrialConfig) -> Result<Estimate> {
    let field = Field::new(cfg)?;
    Ok(Estimate::from_counts(count_hits(cfg.trials, cfg.seed, |rng| field.captured(rng)), cfg.trials, cfg.seed))
}

/// Fraction of trials failing either test, with independent draws for each.
pub fn simulate_link_outage(cfg: &TrialConfig) -> Result<Estimate> {
    let field = Field::new(cfg)?;
    let failures = count_hits(cfg.trials, cfg.seed, |rng| {
        let c = field.connected(rng);
        let q = field.captured(rng);
        !(c && q)
    });
    Ok(Estimate::from_counts(failures, cfg.trials, cfg.seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{capture_prob, connection_prob, link_outage};
    use crate::sampling::trial_rng;

    fn cfg(n_bar: f64, d1: f64, copies: u32, trials: u64, seed: u64) -> TrialConfig {
        TrialConfig {
            scenario: NetworkScenario::default().with_mean_devices(7, n_bar),
            sf: 7,
            d1,
            copies,
            trials,
            seed,
        }
    }

    #[test]
    fn disk_radius_ks() {
        let n = 100_000;
        let mut rng = trial_rng(42, 0);
        let mut xs: Vec<f64> = (0..n).map(|_| sample_disk_radius(&mut rng, 200.0)).collect();
        xs.sort_by(f64::total_cmp);
        let nf = n as f64;
        let d = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = (x / 200.0).powi(2);
                (f - i as f64 / nf).abs().max(((i + 1) as f64 / nf - f).abs())
            })
            .fold(0.0, f64::max);
        // asymptotic critical value at significance 1e-3
        let crit = (-(1e-3f64 / 2.0).ln() / 2.0).sqrt() / nf.sqrt();
        assert!(d < crit, "D = {d}, critical {crit}");
    }

    #[test]
    fn trivial_limits() {
        let mut c = cfg(0.0, 200.0, 1, 20_000, 3);
        assert_eq!(simulate_capture(&c).unwrap().estimate, 1.0);
        c.scenario.tx_power_dbm = 400.0;
        assert_eq!(simulate_connection(&c).unwrap().estimate, 1.0);
        assert_eq!(simulate_link_outage(&c).unwrap().estimate, 0.0);

        let mut c = cfg(500.0, 150.0, 2, 20_000, 3);
        c.scenario.theta_linear = true;
        c.scenario.sir_threshold_db = 0.0;
        assert_eq!(simulate_capture(&c).unwrap().estimate, 1.0);

        let mut c = cfg(0.0, 200.0, 1, 20_000, 3);
        for row in &mut c.scenario.sf_table {
            row.snr_threshold_db = -1000.0 - f64::from(row.sf);
        }
        assert_eq!(simulate_connection(&c).unwrap().estimate, 1.0);
    }

    #[test]
    fn saturated_field() {
        let c = cfg(200_000.0, 200.0, 1, 10_000, 5);
        assert!(simulate_link_outage(&c).unwrap().estimate > 0.99);
    }

    #[test]
    fn border_point_agrees() {
        let c = cfg(100.0, 200.0, 1, 200_000, 17);
        let s = &c.scenario;
        let h1 = connection_prob(s, 7, 200.0).unwrap();
        let q1 = capture_prob(s, 7, 200.0, 1).unwrap();
        let o = link_outage(s, 7, 200.0, 1).unwrap().link_outage;
        assert!(simulate_connection(&c).unwrap().agrees_with(h1, 3.0));
        let cap = simulate_capture(&c).unwrap();
        assert!(cap.agrees_with(q1, 3.0), "{cap:?} vs {q1}");
        assert!(simulate_link_outage(&c).unwrap().agrees_with(o, 3.0));
    }

    #[test]
    fn deterministic_across_pools() {
        let c = cfg(300.0, 120.0, 4, 30_000, 9);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| simulate_link_outage(&c).unwrap());
        let b = three.install(|| simulate_link_outage(&c).unwrap());
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        assert_eq!(a, simulate_link_outage(&c).unwrap());
        let other = simulate_link_outage(&TrialConfig { seed: 10, ..c }).unwrap();
        assert_ne!(a.estimate, other.estimate);
    }

    #[test]
    fn rejects_invalid() {
        assert!(simulate_capture(&cfg(10.0, 0.0, 1, 10, 0)).is_err());
        assert!(simulate_capture(&cfg(10.0, 201.0, 1, 10, 0)).is_err());
        assert!(simulate_capture(&cfg(10.0, 100.0, 1, 0, 0)).is_err());
        assert!(simulate_capture(&cfg(10.0, 100.0, 0, 10, 0)).is_err());
    }
}
