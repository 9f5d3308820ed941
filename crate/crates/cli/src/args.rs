//! Command-line grammar and its canonical re-serialisation.
//!
//! Every parsed command can be turned back into an argument vector with
//! [`Command::to_args`]. The vector names every option explicitly, so a
//! manifest that stores it replays the run even if a default changes.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lorarep_core::capacity::{SearchKind, DEFAULT_M_CAP};
use lorarep_core::energy::Formula;
use lorarep_core::{Error, SchemeConfig, SchemeKind};

#[derive(Parser, Debug, Clone, PartialEq)]
#[command(name = "lorarep", version, about = "Outage, capacity and lifetime of LoRaWAN replication schemes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, PartialEq)]
pub enum Command {
    /// Final outage of replication schemes over a link-outage or device-count sweep.
    Outage(OutageArgs),
    /// Optimal configurations and supported device counts per spreading factor.
    Capacity(CapacityArgs),
    /// Average current and battery lifetime against the number of copies.
    Energy(EnergyArgs),
    /// Monte Carlo estimates of the link-level and decoding probabilities.
    Simulate(SimulateArgs),
    /// Run the invariant suites and report pass or fail.
    Verify(VerifyArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct CommonArgs {
    /// Scenario JSON file; the built-in default scenario when absent.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Directory receiving the data files and the manifest.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads; 0 lets the runtime decide. Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Read the scenario's SIR threshold as a linear ratio instead of dB.
    #[arg(long)]
    pub theta_linear: bool,
    /// Energy accounting; both are reported by `energy` when absent.
    #[arg(long)]
    pub energy_formula: Option<Formula>,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct OutageArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 7)]
    pub sf: u8,
    /// `DT`, `RT(m)`, `CT(n)`, `HT(m,n,r)` or `opt:KIND@TARGET`. Repeatable.
    #[arg(long = "scheme")]
    pub schemes: Vec<SchemeSpec>,
    /// Link-outage values, `start:stop:count` or a comma list.
    #[arg(long, conflicts_with = "devices")]
    pub o_grid: Option<Grid>,
    /// Mean device counts on `sf`; link outage then comes from the channel model.
    #[arg(long)]
    pub devices: Option<Grid>,
    /// Device distance for the device sweep; the cell border when absent.
    #[arg(long, requires = "devices")]
    pub distance: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_M_CAP)]
    pub m_cap: u32,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct CapacityArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Reliability targets; the scenario's when absent.
    #[arg(long, value_delimiter = ',')]
    pub targets: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "DT,RT,CT,HT,HT*")]
    pub kinds: Vec<SearchKind>,
    /// Spreading factors; every factor in the scenario when absent.
    #[arg(long, value_delimiter = ',')]
    pub sfs: Vec<u8>,
    #[arg(long, default_value_t = DEFAULT_M_CAP)]
    pub m_cap: u32,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct EnergyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_delimiter = ',', default_value = "7,12")]
    pub sfs: Vec<u8>,
    #[arg(long, default_value_t = DEFAULT_M_CAP)]
    pub m_max: u32,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 7)]
    pub sf: u8,
    /// Device distances in metres; the cell border when absent.
    #[arg(long, value_delimiter = ',')]
    pub distances: Vec<f64>,
    /// Mean device counts on `sf`.
    #[arg(long, value_delimiter = ',', default_value = "100")]
    pub devices: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub copies: Vec<u32>,
    #[arg(long, default_value_t = 1_000_000)]
    pub trials: u64,
    /// Decoding-window points `HT(m,n,r)@o`, estimated against exact enumeration. Repeatable.
    #[arg(long = "oracle")]
    pub oracle: Vec<OraclePoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Suite {
    Identities,
    Oracle,
    Dominance,
    Hyp2f1,
    Capacity,
    Montecarlo,
    Energy,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Identities,
        Suite::Oracle,
        Suite::Dominance,
        Suite::Hyp2f1,
        Suite::Capacity,
        Suite::Montecarlo,
        Suite::Energy,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Oracle => "oracle",
            Suite::Dominance => "dominance",
            Suite::Hyp2f1 => "hyp2f1",
            Suite::Capacity => "capacity",
            Suite::Montecarlo => "montecarlo",
            Suite::Energy => "energy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Level {
    /// 10^5 Monte Carlo trials per point, enumeration up to n = 2.
    Quick,
    /// 10^6 trials per point, enumeration up to n = 3.
    Full,
}

impl Level {
    pub fn as_str(&self) -> &'static str {
        match self {
            Level::Quick => "quick",
            Level::Full => "full",
        }
    }
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long = "suite", value_enum, value_delimiter = ',')]
    pub suites: Vec<Suite>,
    #[arg(long, value_enum, default_value_t = Level::Full)]
    pub level: Level,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Output directory; the manifest's own directory when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Values given as `start:stop:count` (inclusive, evenly spaced) or a comma list.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    text: String,
    values: Vec<f64>,
}

impl Grid {
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl FromStr for Grid {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::InvalidConfig(format!("cannot parse grid '{s}'"));
        let values = if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            let [a, b, n] = parts.as_slice() else { return Err(bad()) };
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            let n: usize = n.trim().parse().map_err(|_| bad())?;
            match n {
                0 => return Err(bad()),
                1 => vec![a],
                _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
            }
        } else {
            s.split(',').map(|v| v.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_, _>>()?
        };
        if values.iter().any(|v: &f64| !v.is_finite()) {
            return Err(bad());
        }
        Ok(Grid { text: s.trim().to_string(), values })
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// A scheme to tabulate: fixed, or whatever the optimizer picks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchemeSpec {
    Fixed(SchemeConfig),
    Optimal { kind: SearchKind, target: f64 },
}

fn parse_config(s: &str) -> Result<SchemeConfig, Error> {
    let bad = || Error::InvalidConfig(format!("cannot parse scheme '{s}'"));
    let t = s.trim();
    let (name, nums) = match t.find('(') {
        Some(i) => {
            let inner = t[i + 1..].strip_suffix(')').ok_or_else(bad)?;
            let nums = inner
                .split(',')
                .map(|v| v.trim().parse::<u32>().map_err(|_| bad()))
                .collect::<Result<Vec<_>, _>>()?;
            (&t[..i], nums)
        }
        None => (t, Vec::new()),
    };
    let kind: SchemeKind = name.trim().parse()?;
    match (kind, nums.as_slice()) {
        (SchemeKind::DT, []) => Ok(SchemeConfig::dt()),
        (SchemeKind::RT, [m]) => SchemeConfig::rt(*m),
        (SchemeKind::CT, [n]) => SchemeConfig::ct(*n),
        (SchemeKind::HT, [m, n, r]) => SchemeConfig::ht(*m, *n, *r),
        _ => Err(bad()),
    }
}

/// Canonical text of a configuration, accepted back by the parser.
pub fn config_text(c: &SchemeConfig) -> String {
    match c.kind {
        SchemeKind::DT => "DT".into(),
        SchemeKind::RT => format!("RT({})", c.m),
        SchemeKind::CT => format!("CT({})", c.n),
        SchemeKind::HT => format!("HT({},{},{})", c.m, c.n, c.r),
    }
}

impl FromStr for SchemeSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().strip_prefix("opt:") {
            Some(rest) => {
                let (kind, target) = rest
                    .split_once('@')
                    .ok_or_else(|| Error::InvalidConfig(format!("'{s}' needs the form opt:KIND@TARGET")))?;
                let target: f64 = target
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidConfig(format!("bad target in '{s}'")))?;
                if !(target > 0.0 && target < 1.0) {
                    return Err(Error::InvalidConfig(format!("target {target} outside (0, 1)")));
                }
                Ok(SchemeSpec::Optimal { kind: kind.parse()?, target })
            }
            None => Ok(SchemeSpec::Fixed(parse_config(s)?)),
        }
    }
}

impl fmt::Display for SchemeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeSpec::Fixed(c) => f.write_str(&config_text(c)),
            SchemeSpec::Optimal { kind, target } => write!(f, "opt:{kind}@{target}"),
        }
    }
}

/// `HT(m,n,r)@o`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OraclePoint {
    pub config: SchemeConfig,
    pub o: f64,
}

impl FromStr for OraclePoint {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        let (cfg, o) = s
            .rsplit_once('@')
            .ok_or_else(|| Error::InvalidConfig(format!("'{s}' needs the form HT(m,n,r)@o")))?;
        let config = parse_config(cfg)?;
        if config.kind != SchemeKind::HT {
            return Err(Error::InvalidConfig(format!("oracle points take an HT configuration, got '{cfg}'")));
        }
        let o: f64 = o.trim().parse().map_err(|_| Error::InvalidConfig(format!("bad link outage in '{s}'")))?;
        if !(0.0..=1.0).contains(&o) {
            return Err(Error::InvalidConfig(format!("link outage {o} outside [0, 1]")));
        }
        Ok(OraclePoint { config, o })
    }
}

impl fmt::Display for OraclePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", config_text(&self.config), self.o)
    }
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl CommonArgs {
    /// Everything except `--out`, which does not affect file contents.
    fn push_args(&self, out: &mut Vec<String>) {
        if let Some(p) = &self.scenario {
            out.extend(["--scenario".into(), p.display().to_string()]);
        }
        out.extend(["--seed".into(), self.seed.to_string(), "--threads".into(), self.threads.to_string()]);
        if self.theta_linear {
            out.push("--theta-linear".into());
        }
        if let Some(f) = self.energy_formula {
            out.extend(["--energy-formula".into(), f.to_string()]);
        }
    }
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Outage(_) => "outage",
            Command::Capacity(_) => "capacity",
            Command::Energy(_) => "energy",
            Command::Simulate(_) => "simulate",
            Command::Verify(_) => "verify",
            Command::Replay(_) => "replay",
        }
    }

    pub fn common(&self) -> Option<&CommonArgs> {
        match self {
            Command::Outage(a) => Some(&a.common),
            Command::Capacity(a) => Some(&a.common),
            Command::Energy(a) => Some(&a.common),
            Command::Simulate(a) => Some(&a.common),
            Command::Verify(a) => Some(&a.common),
            Command::Replay(_) => None,
        }
    }

    pub fn common_mut(&mut self) -> Option<&mut CommonArgs> {
        match self {
            Command::Outage(a) => Some(&mut a.common),
            Command::Capacity(a) => Some(&mut a.common),
            Command::Energy(a) => Some(&mut a.common),
            Command::Simulate(a) => Some(&mut a.common),
            Command::Verify(a) => Some(&mut a.common),
            Command::Replay(_) => None,
        }
    }

    /// Canonical argument vector, subcommand first, program name excluded.
    pub fn to_args(&self) -> Vec<String> {
        let mut v = vec![self.name().to_string()];
        if let Some(c) = self.common() {
            c.push_args(&mut v);
        }
        let mut kv = |k: &str, val: String| v.extend([format!("--{k}"), val]);
        match self {
            Command::Outage(a) => {
                kv("sf", a.sf.to_string());
                for s in &a.schemes {
                    kv("scheme", s.to_string());
                }
                if let Some(g) = &a.o_grid {
                    kv("o-grid", g.to_string());
                }
                if let Some(g) = &a.devices {
                    kv("devices", g.to_string());
                }
                if let Some(d) = a.distance {
                    kv("distance", d.to_string());
                }
                kv("m-cap", a.m_cap.to_string());
            }
            Command::Capacity(a) => {
                if !a.targets.is_empty() {
                    kv("targets", join(&a.targets));
                }
                kv("kinds", join(&a.kinds));
                if !a.sfs.is_empty() {
                    kv("sfs", join(&a.sfs));
                }
                kv("m-cap", a.m_cap.to_string());
            }
            Command::Energy(a) => {
                kv("sfs", join(&a.sfs));
                kv("m-max", a.m_max.to_string());
            }
            Command::Simulate(a) => {
                kv("sf", a.sf.to_string());
                if !a.distances.is_empty() {
                    kv("distances", join(&a.distances));
                }
                kv("devices", join(&a.devices));
                kv("copies", join(&a.copies));
                kv("trials", a.trials.to_string());
                for p in &a.oracle {
                    kv("oracle", p.to_string());
                }
            }
            Command::Verify(a) => {
                if !a.suites.is_empty() {
                    kv("suite", a.suites.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(","));
                }
                kv("level", a.level.as_str().to_string());
            }
            Command::Replay(a) => {
                v.push(a.manifest.display().to_string());
                if let Some(o) = &a.out {
                    v.extend(["--out".into(), o.display().to_string()]);
                }
            }
        }
        v
    }

    /// Parses a vector produced by [`Command::to_args`].
    pub fn from_args(args: &[String]) -> Result<Command, clap::Error> {
        let argv = std::iter::once("lorarep".to_string()).chain(args.iter().cloned());
        Ok(Cli::try_parse_from(argv)?.command)
    }
}
