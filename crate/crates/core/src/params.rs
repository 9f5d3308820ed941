//! Constant tables and the user-facing scenario configuration.
//!
//! Everything is stored in SI base units except the handful of values that
//! are conventionally quoted in decibels (path loss, transmit power, noise
//! figure, SIR threshold). Those are converted by the accessor methods on
//! [`NetworkScenario`] and nowhere else.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of operating states in the device energy model, sleep included.
pub const ENERGY_STATE_COUNT: usize = 11;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

/// PHY constants for one spreading factor (9-byte payload, 125 kHz, CRC and header on).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SfParams {
    pub sf: u8,
    /// Time-on-air of one uplink packet, seconds.
    pub toa: f64,
    pub snr_threshold_db: f64,
    /// First receive window duration, seconds.
    pub rx1w: f64,
    /// Second receive window duration, seconds.
    pub rx2w: f64,
}

impl SfParams {
    pub fn snr_threshold(&self) -> f64 {
        db_to_linear(self.snr_threshold_db)
    }
}

const DEFAULT_SF_TABLE: [SfParams; 6] = [
    SfParams { sf: 7, toa: 41.22e-3, snr_threshold_db: -6.0, rx1w: 12.29e-3, rx2w: 1.28e-3 },
    SfParams { sf: 8, toa: 72.19e-3, snr_threshold_db: -9.0, rx1w: 24.58e-3, rx2w: 2.30e-3 },
    SfParams { sf: 9, toa: 144.38e-3, snr_threshold_db: -12.0, rx1w: 49.15e-3, rx2w: 4.35e-3 },
    SfParams { sf: 10, toa: 247.81e-3, snr_threshold_db: -15.0, rx1w: 98.30e-3, rx2w: 8.45e-3 },
    SfParams { sf: 11, toa: 495.62e-3, snr_threshold_db: -17.5, rx1w: 131.07e-3, rx2w: 16.64e-3 },
    SfParams { sf: 12, toa: 991.23e-3, snr_threshold_db: -20.0, rx1w: 262.14e-3, rx2w: 33.02e-3 },
];

/// The six LoRa uplink rows for SF7 through SF12.
pub fn default_sf_table() -> Vec<SfParams> {
    DEFAULT_SF_TABLE.to_vec()
}

/// Checks positivity and the monotonic trends across spreading factors.
pub fn validate_sf_table(table: &[SfParams]) -> Result<()> {
    if table.is_empty() {
        return Err(Error::InvalidConfig("SF table is empty".into()));
    }
    for row in table {
        if !(row.toa > 0.0 && row.rx1w > 0.0 && row.rx2w > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "SF{}: toa, rx1w and rx2w must be strictly positive",
                row.sf
            )));
        }
    }
    for pair in table.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if b.sf <= a.sf {
            return Err(Error::InvalidConfig("SF table must be sorted by SF".into()));
        }
        if b.toa <= a.toa {
            return Err(Error::InvalidConfig(format!(
                "time-on-air must increase with SF (SF{} -> SF{})",
                a.sf, b.sf
            )));
        }
        if b.snr_threshold_db >= a.snr_threshold_db {
            return Err(Error::InvalidConfig(format!(
                "SNR threshold must decrease with SF (SF{} -> SF{})",
                a.sf, b.sf
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SchemeKind {
    /// Direct transmission, no replication.
    DT,
    /// Plain replication of the information message.
    RT,
    /// XOR-coded transmission.
    CT,
    /// Hybrid: uncoded replicas plus replicated coded messages.
    HT,
}

impl SchemeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SchemeKind::DT => "DT",
            SchemeKind::RT => "RT",
            SchemeKind::CT => "CT",
            SchemeKind::HT => "HT",
        }
    }
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "DT" => Ok(SchemeKind::DT),
            "RT" => Ok(SchemeKind::RT),
            "CT" => Ok(SchemeKind::CT),
            "HT" => Ok(SchemeKind::HT),
            other => Err(Error::InvalidConfig(format!("unknown scheme '{other}'"))),
        }
    }
}

/// A replication scheme and its parameters.
///
/// `m` uncoded copies of the information message, `n` distinct coded
/// messages and `r` copies of each coded message, for `m + n*r` packets per
/// period. Construct through [`SchemeConfig::new`] or the per-kind helpers,
/// which enforce the per-kind parameter restrictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    pub m: u32,
    pub n: u32,
    pub r: u32,
}

impl SchemeConfig {
    pub fn new(kind: SchemeKind, m: u32, n: u32, r: u32) -> Result<Self> {
        let cfg = SchemeConfig { kind, m, n, r };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn dt() -> Self {
        SchemeConfig { kind: SchemeKind::DT, m: 1, n: 0, r: 1 }
    }

    pub fn rt(m: u32) -> Result<Self> {
        Self::new(SchemeKind::RT, m, 0, 1)
    }

    pub fn ct(n: u32) -> Result<Self> {
        Self::new(SchemeKind::CT, 1, n, 1)
    }

    pub fn ht(m: u32, n: u32, r: u32) -> Result<Self> {
        Self::new(SchemeKind::HT, m, n, r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidConfig("m must be at least 1".into()));
        }
        if self.r == 0 {
            return Err(Error::InvalidConfig("r must be at least 1".into()));
        }
        match self.kind {
            SchemeKind::DT if self.m != 1 || self.n != 0 => {
                Err(Error::InvalidConfig("DT requires m = 1 and n = 0".into()))
            }
            SchemeKind::RT if self.n != 0 => Err(Error::InvalidConfig("RT requires n = 0".into())),
            SchemeKind::CT if self.m != 1 || self.r != 1 => {
                Err(Error::InvalidConfig("CT requires m = 1 and r = 1".into()))
            }
            _ => Ok(()),
        }
    }

    /// Total packets per period, `M = m + n*r`.
    pub fn copies(&self) -> u32 {
        self.m + self.n * self.r
    }
}

impl std::fmt::Display for SchemeConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            SchemeKind::DT => write!(f, "DT"),
            SchemeKind::RT => write!(f, "RT(m={})", self.m),
            SchemeKind::CT => write!(f, "CT(n={})", self.n),
            SchemeKind::HT => write!(f, "HT(m={},n={},r={})", self.m, self.n, self.r),
        }
    }
}

/// Fixed durations (s) and currents (A) of the device energy model.
///
/// The transmission and receive-window durations depend on the spreading
/// factor and are taken from [`SfParams`] when the table is built.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyProfile {
    pub wake_up_s: f64,
    pub wake_up_a: f64,
    pub radio_prep_s: f64,
    pub radio_prep_a: f64,
    pub tx_a: f64,
    pub radio_off_s: f64,
    pub radio_off_a: f64,
    pub postprocessing_s: f64,
    pub postprocessing_a: f64,
    pub turn_off_s: f64,
    pub turn_off_a: f64,
    pub wait_rx1_s: f64,
    pub wait_rx1_a: f64,
    pub rx1_a: f64,
    /// Interval between the opening of the two receive windows.
    pub rx_interval_s: f64,
    pub wait_rx2_a: f64,
    pub rx2_a: f64,
    pub sleep_a: f64,
}

impl Default for EnergyProfile {
    fn default() -> Self {
        EnergyProfile {
            wake_up_s: 168.2e-3,
            wake_up_a: 22.1e-3,
            radio_prep_s: 83.8e-3,
            radio_prep_a: 13.3e-3,
            tx_a: 83.0e-3,
            radio_off_s: 147.4e-3,
            radio_off_a: 13.2e-3,
            postprocessing_s: 268.0e-3,
            postprocessing_a: 21.0e-3,
            turn_off_s: 38.6e-3,
            turn_off_a: 13.3e-3,
            wait_rx1_s: 983.3e-3,
            wait_rx1_a: 27.0e-3,
            rx1_a: 38.1e-3,
            rx_interval_s: 1.0,
            wait_rx2_a: 27.1e-3,
            rx2_a: 35.0e-3,
            sleep_a: 45e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyState {
    pub name: String,
    pub duration_s: f64,
    pub current_a: f64,
}

/// The ten active states of one transmission cycle followed by sleep.
///
/// Sleep has no stored duration; it fills whatever is left of the period and
/// is computed by the energy model.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyStateTable {
    active: Vec<EnergyState>,
    sleep_current_a: f64,
}

impl EnergyStateTable {
    pub fn new(active: Vec<EnergyState>, sleep_current_a: f64) -> Result<Self> {
        if active.len() != ENERGY_STATE_COUNT - 1 {
            return Err(Error::InvalidConfig(format!(
                "energy table needs {} active states, got {}",
                ENERGY_STATE_COUNT - 1,
                active.len()
            )));
        }
        if let Some(s) = active.iter().find(|s| !(s.duration_s >= 0.0) || !(s.current_a > 0.0)) {
            return Err(Error::InvalidConfig(format!(
                "state '{}' needs a non-negative duration and positive current",
                s.name
            )));
        }
        if !(sleep_current_a > 0.0) {
            return Err(Error::InvalidConfig("sleep current must be positive".into()));
        }
        if active.iter().any(|s| s.current_a < sleep_current_a) {
            return Err(Error::InvalidConfig("sleep current must be the minimum current".into()));
        }
        Ok(EnergyStateTable { active, sleep_current_a })
    }

    /// States 1..=10 in protocol order.
    pub fn active(&self) -> &[EnergyState] {
        &self.active
    }

    /// Active state by its 1-based number.
    pub fn state(&self, number: usize) -> Option<&EnergyState> {
        number.checked_sub(1).and_then(|i| self.active.get(i))
    }

    pub fn sleep_current_a(&self) -> f64 {
        self.sleep_current_a
    }
}

/// Builds the 11-state table for one spreading factor from `profile`.
pub fn energy_table(profile: &EnergyProfile, sf: &SfParams) -> Result<EnergyStateTable> {
    if sf.rx1w >= profile.rx_interval_s {
        return Err(Error::InvalidConfig(format!(
            "SF{}: rx1w {} s must be shorter than the receive-window interval {} s",
            sf.sf, sf.rx1w, profile.rx_interval_s
        )));
    }
    let state = |name: &str, duration_s: f64, current_a: f64| EnergyState {
        name: name.to_string(),
        duration_s,
        current_a,
    };
    let p = profile;
    EnergyStateTable::new(
        vec![
            state("wake up", p.wake_up_s, p.wake_up_a),
            state("radio preparation", p.radio_prep_s, p.radio_prep_a),
            state("transmission", sf.toa, p.tx_a),
            state("radio off", p.radio_off_s, p.radio_off_a),
            state("postprocessing", p.postprocessing_s, p.postprocessing_a),
            state("turn off sequence", p.turn_off_s, p.turn_off_a),
            state("wait 1st window", p.wait_rx1_s, p.wait_rx1_a),
            state("1st receive window", sf.rx1w, p.rx1_a),
            state("wait 2nd window", p.rx_interval_s - sf.rx1w, p.wait_rx2_a),
            state("2nd receive window", sf.rx2w, p.rx2_a),
        ],
        p.sleep_a,
    )
}

pub fn default_energy_table(sf: &SfParams) -> Result<EnergyStateTable> {
    energy_table(&EnergyProfile::default(), sf)
}

/// Deployment geometry, radio parameters and traffic for a single-gateway disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkScenario {
    pub radius_m: f64,
    pub ploss_exponent: f64,
    pub ploss_ref_db: f64,
    pub ref_dist_m: f64,
    pub tx_power_dbm: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    pub sir_threshold_db: f64,
    /// Interpret `sir_threshold_db` as an already-linear ratio.
    #[serde(default)]
    pub theta_linear: bool,
    pub period_s: f64,
    #[serde(default = "default_duty_cycle")]
    pub duty_cycle_limit: f64,
    /// Node density per spreading factor, nodes per square metre.
    #[serde(default)]
    pub densities: BTreeMap<u8, f64>,
    #[serde(default = "default_sf_table")]
    pub sf_table: Vec<SfParams>,
    #[serde(default)]
    pub energy_profile: EnergyProfile,
    #[serde(default = "default_battery_mah")]
    pub battery_mah: f64,
    /// Required post-decoding success probabilities at the cell border.
    #[serde(default = "default_targets")]
    pub targets: Vec<f64>,
}

fn default_duty_cycle() -> f64 {
    0.01
}

fn default_battery_mah() -> f64 {
    2400.0
}

fn default_targets() -> Vec<f64> {
    vec![0.99, 0.999]
}

impl Default for NetworkScenario {
    /// Indoor industrial deployment: 200 m radius, 11 dBm, one message every 10 minutes.
    fn default() -> Self {
        NetworkScenario {
            radius_m: 200.0,
            ploss_exponent: 3.51,
            ploss_ref_db: 55.05,
            ref_dist_m: 15.0,
            tx_power_dbm: 11.0,
            bandwidth_hz: 125e3,
            noise_figure_db: 6.0,
            sir_threshold_db: 1.0,
            theta_linear: false,
            period_s: 600.0,
            duty_cycle_limit: default_duty_cycle(),
            densities: (7u8..=12).map(|sf| (sf, 0.0)).collect(),
            sf_table: default_sf_table(),
            energy_profile: EnergyProfile::default(),
            battery_mah: default_battery_mah(),
            targets: default_targets(),
        }
    }
}

impl NetworkScenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.ref_dist_m > 0.0) {
            return bad("ref_dist_m must be positive".into());
        }
        if !(self.radius_m > self.ref_dist_m) {
            return bad("radius_m must exceed ref_dist_m".into());
        }
        if !(self.ploss_exponent > 2.0) {
            return bad("ploss_exponent must be greater than 2".into());
        }
        if !(self.period_s > 0.0) {
            return bad("period_s must be positive".into());
        }
        if !(self.bandwidth_hz > 0.0) {
            return bad("bandwidth_hz must be positive".into());
        }
        if !(self.duty_cycle_limit > 0.0 && self.duty_cycle_limit <= 1.0) {
            return bad("duty_cycle_limit must lie in (0, 1]".into());
        }
        if !(self.battery_mah >= 0.0) {
            return bad("battery_mah must be non-negative".into());
        }
        if let Some(t) = self.targets.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return bad(format!("reliability target {t} outside (0, 1)"));
        }
        if self.theta_linear && !(self.sir_threshold_db >= 0.0) {
            return bad("a linear SIR threshold must be non-negative".into());
        }
        for (sf, rho) in &self.densities {
            if !(*rho >= 0.0) || !rho.is_finite() {
                return bad(format!("density for SF{sf} must be finite and non-negative"));
            }
        }
        validate_sf_table(&self.sf_table)?;
        for row in &self.sf_table {
            let p = row.toa / self.period_s;
            if !(p > 0.0 && p <= self.duty_cycle_limit) {
                return bad(format!(
                    "SF{}: activity factor {p} outside (0, {}]",
                    row.sf, self.duty_cycle_limit
                ));
            }
        }
        energy_table(&self.energy_profile, &self.sf_table[0]).map(|_| ())
    }

    pub fn sf_params(&self, sf: u8) -> Result<&SfParams> {
        self.sf_table.iter().find(|p| p.sf == sf).ok_or(Error::UnknownSf(sf))
    }

    pub fn spreading_factors(&self) -> impl Iterator<Item = u8> + '_ {
        self.sf_table.iter().map(|p| p.sf)
    }

    /// Linear SIR capture threshold.
    pub fn theta(&self) -> f64 {
        if self.theta_linear {
            self.sir_threshold_db
        } else {
            db_to_linear(self.sir_threshold_db)
        }
    }

    pub fn tx_power_w(&self) -> f64 {
        dbm_to_watts(self.tx_power_dbm)
    }

    pub fn ploss_ref(&self) -> f64 {
        db_to_linear(self.ploss_ref_db)
    }

    pub fn noise_figure(&self) -> f64 {
        db_to_linear(self.noise_figure_db)
    }

    pub fn area_m2(&self) -> f64 {
        PI * self.radius_m * self.radius_m
    }

    pub fn density(&self, sf: u8) -> f64 {
        self.densities.get(&sf).copied().unwrap_or(0.0)
    }

    /// Mean number of devices on `sf` inside the disk.
    pub fn mean_devices(&self, sf: u8) -> f64 {
        self.density(sf) * self.area_m2()
    }

    /// Sets the density of `sf` so that the disk holds `n_bar` devices on average.
    pub fn with_mean_devices(mut self, sf: u8, n_bar: f64) -> Self {
        let rho = n_bar / self.area_m2();
        self.densities.insert(sf, rho);
        self
    }

    pub fn energy_table(&self, sf: u8) -> Result<EnergyStateTable> {
        energy_table(&self.energy_profile, self.sf_params(sf)?)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let scenario: NetworkScenario = serde_json::from_str(s)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }
}

/// Fraction of time a device on `sf` spends transmitting, `t_j / P`.
pub fn activity_factor(scenario: &NetworkScenario, sf: u8) -> Result<f64> {
    Ok(scenario.sf_params(sf)?.toa / scenario.period_s)
}

/// Largest copy count allowed by both `hard_cap` and the duty-cycle limit, at least 1.
pub fn max_copies(scenario: &NetworkScenario, sf: u8, hard_cap: u32) -> Result<u32> {
    if hard_cap == 0 {
        return Err(Error::InvalidConfig("hard_cap must be at least 1".into()));
    }
    let p = activity_factor(scenario, sf)?;
    let ratio = scenario.duty_cycle_limit / p;
    let mut by_duty = if ratio >= f64::from(u32::MAX) { u32::MAX } else { ratio.floor() as u32 };
    // floor() of a rounded ratio can land one below an exact integer
    if by_duty < u32::MAX && f64::from(by_duty + 1) * p <= scenario.duty_cycle_limit {
        by_duty += 1;
    }
    Ok(hard_cap.min(by_duty).max(1))
}
