//! Average current and battery lifetime of a device sending `M` copies per
//! period, under the default protocol and under the variant that opens the
//! receive windows only after the last copy.
//!
//! States 1..=6 repeat for every copy. States 7..=10 are the two receive
//! windows and their waits. Two accountings of the per-period charge are
//! offered, see [`Formula`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{EnergyStateTable, NetworkScenario, SfParams};

/// States that repeat once per copy in the modified protocol.
const PER_COPY_STATES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Receive windows follow every copy.
    Default,
    /// Receive windows follow the last copy only.
    Modified,
}

/// How the per-period charge is totalled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formula {
    /// `(M/P)(Σ T_i I_i + T_sleep I_sleep)`: the whole bracket, sleep included, scaled by `M`.
    Literal,
    /// Each state's charge counted as often as the state occurs in one period.
    ChargeBalance,
}

impl Mode {
    pub const ALL: [Mode; 2] = [Mode::Default, Mode::Modified];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Default => "default",
            Mode::Modified => "modified",
        }
    }
}

impl Formula {
    pub const ALL: [Formula; 2] = [Formula::Literal, Formula::ChargeBalance];

    pub fn as_str(&self) -> &'static str {
        match self {
            Formula::Literal => "literal",
            Formula::ChargeBalance => "charge-balance",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(Mode::Default),
            "modified" => Ok(Mode::Modified),
            _ => Err(Error::InvalidConfig(format!("unknown protocol mode '{s}'"))),
        }
    }
}

impl FromStr for Formula {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(Formula::Literal),
            "charge-balance" | "charge_balance" => Ok(Formula::ChargeBalance),
            _ => Err(Error::InvalidConfig(format!("unknown energy formula '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub sf: u8,
    pub copies: u32,
    pub period_s: f64,
    pub avg_current_a: f64,
    pub sleep_time_s: f64,
    /// Charge drawn while asleep as a fraction of the period's total.
    pub sleep_charge_fraction: f64,
    pub mode: Mode,
    pub formula: Formula,
}

impl EnergyReport {
    pub fn avg_current_ma(&self) -> f64 {
        self.avg_current_a * 1e3
    }
}

/// Hours until a `battery_mah` battery is drained at the report's average current.
pub fn lifetime(report: &EnergyReport, battery_mah: f64) -> f64 {
    battery_mah / report.avg_current_ma()
}

/// Duration and charge of states `range` (0-based, half open).
fn sums(table: &EnergyStateTable, range: std::ops::Range<usize>) -> (f64, f64) {
    table.active()[range]
        .iter()
        .fold((0.0, 0.0), |(t, q), s| (t + s.duration_s, q + s.duration_s * s.current_a))
}

struct Budget {
    copies: f64,
    per_copy_charge: f64,
    once_charge: f64,
    sleep_s: f64,
}

fn report(
    sf: &SfParams,
    table: &EnergyStateTable,
    copies: u32,
    period_s: f64,
    mode: Mode,
    formula: Formula,
) -> Result<EnergyReport> {
    if copies == 0 {
        return Err(Error::Domain("at least one copy per period is required".into()));
    }
    if !(period_s > 0.0) {
        return Err(Error::Domain(format!("period must be positive, got {period_s}")));
    }
    let m = f64::from(copies);
    let (t_tx, q_tx) = sums(table, 0..PER_COPY_STATES);
    let (t_rx, q_rx) = sums(table, PER_COPY_STATES..table.active().len());
    let b = match mode {
        Mode::Default => Budget {
            copies: m,
            per_copy_charge: q_tx + q_rx,
            once_charge: 0.0,
            sleep_s: period_s - m * (t_tx + t_rx),
        },
        Mode::Modified => Budget {
            copies: m,
            per_copy_charge: q_tx,
            once_charge: q_rx,
            sleep_s: period_s - m * t_tx - t_rx,
        },
    };
    if b.sleep_s < 0.0 {
        return Err(Error::InfeasiblePeriod { copies, period_s, sleep_s: b.sleep_s });
    }
    let q_sleep = b.sleep_s * table.sleep_current_a();
    let charge = match formula {
        // the printed form scales the full bracket, receive windows and sleep included, by M
        Formula::Literal => b.copies * (q_tx + q_rx + q_sleep),
        Formula::ChargeBalance => b.copies * b.per_copy_charge + b.once_charge + q_sleep,
    };
    let sleep_in_charge = match formula {
        Formula::Literal => b.copies * q_sleep,
        Formula::ChargeBalance => q_sleep,
    };
    Ok(EnergyReport {
        sf: sf.sf,
        copies,
        period_s,
        avg_current_a: charge / period_s,
        sleep_time_s: b.sleep_s,
        sleep_charge_fraction: sleep_in_charge / charge,
        mode,
        formula,
    })
}

/// Receive windows after every copy.
pub fn avg_current_default(
    sf: &SfParams,
    table: &EnergyStateTable,
    copies: u32,
    period_s: f64,
    formula: Formula,
) -> Result<EnergyReport> {
    report(sf, table, copies, period_s, Mode::Default, formula)
}

/// Receive windows after the last copy only.
pub fn avg_current_modified(
    sf: &SfParams,
    table: &EnergyStateTable,
    copies: u32,
    period_s: f64,
    formula: Formula,
) -> Result<EnergyReport> {
    report(sf, table, copies, period_s, Mode::Modified, formula)
}

/// Report for `sf` using the scenario's period and energy profile.
pub fn scenario_report(
    scenario: &NetworkScenario,
    sf: u8,
    copies: u32,
    mode: Mode,
    formula: Formula,
) -> Result<EnergyReport> {
    let params = scenario.sf_params(sf)?;
    let table = scenario.energy_table(sf)?;
    report(params, &table, copies, scenario.period_s, mode, formula)
}
