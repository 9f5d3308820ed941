//! The data-producing subcommands. Each returns its files in memory; the
//! caller writes them together with the manifest.

use std::collections::BTreeMap;

use anyhow::{bail, Context, Result};
use lorarep_core::capacity::{optimize, Optimum, SearchKind};
use lorarep_core::channel::{capture_prob, connection_prob, link_outage};
use lorarep_core::energy::{lifetime, scenario_report, Formula, Mode};
use lorarep_core::mcsim::{simulate_capture, simulate_connection, simulate_link_outage, TrialConfig};
use lorarep_core::oracle::{oracle_outage_exact, oracle_outage_mc, MAX_EXACT_N};
use lorarep_core::params::max_copies;
use lorarep_core::sampling::derive_seed;
use lorarep_core::schemes::{comparison_m4, final_outage};
use lorarep_core::{Error, Estimate, NetworkScenario, SchemeConfig};
use serde::Serialize;

use crate::args::{config_text, CapacityArgs, EnergyArgs, OutageArgs, SchemeSpec, SimulateArgs};
use crate::output::{json_artifact, num, Artifact, Table};

pub const DEFAULT_O_GRID: &str = "0:1:201";
const HOURS_PER_DAY: f64 = 24.0;

fn resolve_scheme(scenario: &NetworkScenario, sf: u8, spec: &SchemeSpec, m_cap: u32) -> Result<SchemeConfig> {
    Ok(match spec {
        SchemeSpec::Fixed(c) => *c,
        SchemeSpec::Optimal { kind, target } => optimize(scenario, sf, *target, *kind, m_cap)?.best.config,
    })
}

pub fn cmd_outage(scenario: &NetworkScenario, a: &OutageArgs) -> Result<Vec<Artifact>> {
    let specs: Vec<SchemeSpec> = if a.schemes.is_empty() {
        comparison_m4().iter().map(|c| SchemeSpec::Fixed(*c)).collect()
    } else {
        a.schemes.clone()
    };
    let configs = specs
        .iter()
        .map(|s| resolve_scheme(scenario, a.sf, s, a.m_cap).with_context(|| format!("scheme {s}")))
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(&["scheme", "m", "n", "r", "M", "sf", "n_devices", "link_outage", "final_outage"])?;
    let mut emit = |c: &SchemeConfig, spec: &SchemeSpec, n_devices: Option<f64>, o: f64| {
        let label = match spec {
            SchemeSpec::Fixed(_) => config_text(c),
            SchemeSpec::Optimal { .. } => format!("{}={}", spec, config_text(c)),
        };
        t.row([
            label,
            c.m.to_string(),
            c.n.to_string(),
            c.r.to_string(),
            c.copies().to_string(),
            a.sf.to_string(),
            n_devices.map(num).unwrap_or_default(),
            num(o),
            num(final_outage(c, o)),
        ])
    };
    match &a.devices {
        Some(grid) => {
            let d = a.distance.unwrap_or(scenario.radius_m);
            for &n_bar in grid.values() {
                if !(n_bar >= 0.0) {
                    bail!("device count {n_bar} must be non-negative");
                }
                let s = scenario.clone().with_mean_devices(a.sf, n_bar);
                for (c, spec) in configs.iter().zip(&specs) {
                    let o = link_outage(&s, a.sf, d, c.copies())?.link_outage;
                    emit(c, spec, Some(n_bar), o)?;
                }
            }
        }
        None => {
            let grid = a.o_grid.clone().unwrap_or_else(|| DEFAULT_O_GRID.parse().expect("default grid"));
            for &o in grid.values() {
                if !(0.0..=1.0).contains(&o) {
                    bail!("link outage {o} outside [0, 1]");
                }
                for (c, spec) in configs.iter().zip(&specs) {
                    emit(c, spec, None, o)?;
                }
            }
        }
    }
    Ok(vec![t.finish("outage.csv")?])
}

#[derive(Debug, Serialize)]
struct CapacityJson {
    optima: Vec<Optimum>,
    /// Per (target, kind): N̄ summed over spreading factors, each SF at its own optimum.
    sums: Vec<CapacitySum>,
}

#[derive(Debug, Serialize)]
struct CapacitySum {
    target: f64,
    kind: SearchKind,
    n_devices: f64,
    spreading_factors: Vec<u8>,
}

fn near_tie_text(o: &Optimum) -> String {
    o.near_ties
        .iter()
        .map(|c| format!("{}:{}", config_text(&c.config), num(c.n_devices)))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn cmd_capacity(scenario: &NetworkScenario, a: &CapacityArgs) -> Result<Vec<Artifact>> {
    let targets = if a.targets.is_empty() { scenario.targets.clone() } else { a.targets.clone() };
    if let Some(t) = targets.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
        bail!("reliability target {t} outside (0, 1)");
    }
    let sfs: Vec<u8> = if a.sfs.is_empty() { scenario.spreading_factors().collect() } else { a.sfs.clone() };
    let mut t = Table::new(&[
        "target", "kind", "sf", "status", "m", "n", "r", "M", "copy_cap", "required_O_M", "h1", "n_devices",
        "near_ties",
    ])?;
    let mut json = CapacityJson { optima: Vec::new(), sums: Vec::new() };
    for &target in &targets {
        for &kind in &a.kinds {
            let mut total = 0.0;
            let mut summed = Vec::new();
            for &sf in &sfs {
                let o = optimize(scenario, sf, target, kind, a.m_cap)?;
                let b = &o.best;
                let status = if !b.reachable {
                    "unreachable"
                } else if o.near_ties.is_empty() {
                    "ok"
                } else {
                    "near-tie"
                };
                if b.reachable {
                    total += b.n_devices;
                    summed.push(sf);
                }
                t.row([
                    num(target),
                    kind.to_string(),
                    sf.to_string(),
                    status.to_string(),
                    b.config.m.to_string(),
                    b.config.n.to_string(),
                    b.config.r.to_string(),
                    b.config.copies().to_string(),
                    o.copy_cap.to_string(),
                    num(b.required_link_outage),
                    num(b.h1),
                    num(b.n_devices),
                    near_tie_text(&o),
                ])?;
                json.optima.push(o);
            }
            t.row([
                num(target),
                kind.to_string(),
                "sum".to_string(),
                "sum-over-sf".to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                num(total),
                String::new(),
            ])?;
            json.sums.push(CapacitySum { target, kind, n_devices: total, spreading_factors: summed });
        }
    }
    Ok(vec![t.finish("capacity.csv")?, json_artifact("capacity.json", &json)?])
}

pub fn cmd_energy(scenario: &NetworkScenario, a: &EnergyArgs, formula: Option<Formula>) -> Result<Vec<Artifact>> {
    let formulas: Vec<Formula> = formula.map_or_else(|| Formula::ALL.to_vec(), |f| vec![f]);
    if a.m_max == 0 {
        bail!("m-max must be at least 1");
    }
    let mut t = Table::new(&[
        "sf", "M", "mode", "formula", "status", "avg_current_mA", "sleep_s", "lifetime_h", "lifetime_days",
    ])?;
    for &sf in &a.sfs {
        let duty_cap = max_copies(scenario, sf, u32::MAX)?;
        for m in 1..=a.m_max {
            for mode in Mode::ALL {
                for &formula in &formulas {
                    let mut fields = vec![sf.to_string(), m.to_string(), mode.to_string(), formula.to_string()];
                    match scenario_report(scenario, sf, m, mode, formula) {
                        Ok(r) => {
                            let h = lifetime(&r, scenario.battery_mah);
                            let status = if m > duty_cap { "over-duty-cycle" } else { "ok" };
                            fields.extend([
                                status.to_string(),
                                num(r.avg_current_ma()),
                                num(r.sleep_time_s),
                                num(h),
                                num(h / HOURS_PER_DAY),
                            ]);
                        }
                        Err(Error::InfeasiblePeriod { sleep_s, .. }) => {
                            fields.extend(["infeasible".into(), String::new(), num(sleep_s), String::new(), String::new()]);
                        }
                        Err(e) => return Err(e.into()),
                    }
                    t.row(fields)?;
                }
            }
        }
    }
    Ok(vec![t.finish("energy.csv")?])
}

#[derive(Debug, Serialize)]
struct Analytic {
    h1: f64,
    q1: f64,
    link_outage: f64,
}

#[derive(Debug, Serialize)]
struct SimPoint {
    distance_m: f64,
    n_devices: f64,
    copies: u32,
    analytic: Analytic,
    connection: Estimate,
    capture: Estimate,
    link_outage: Estimate,
}

#[derive(Debug, Serialize)]
struct OracleRow {
    config: String,
    o: f64,
    closed_form: f64,
    /// Exact chain-decoder outage; absent beyond the enumeration bound.
    exact: Option<f64>,
    monte_carlo: Estimate,
}

#[derive(Debug, Serialize)]
struct SimulateJson {
    sf: u8,
    trials: u64,
    seed: u64,
    points: Vec<SimPoint>,
    oracle: Vec<OracleRow>,
}

pub fn cmd_simulate(scenario: &NetworkScenario, a: &SimulateArgs, seed: u64) -> Result<Vec<Artifact>> {
    let distances = if a.distances.is_empty() { vec![scenario.radius_m] } else { a.distances.clone() };
    let mut points = Vec::new();
    let mut index = 0u64;
    let mut next_seed = || {
        index += 1;
        derive_seed(seed, index)
    };
    for &d in &distances {
        for &n_bar in &a.devices {
            for &copies in &a.copies {
                let s = scenario.clone().with_mean_devices(a.sf, n_bar);
                let mut cfg = TrialConfig { scenario: s, sf: a.sf, d1: d, copies, trials: a.trials, seed: 0 };
                cfg.validate()?;
                let analytic = Analytic {
                    h1: connection_prob(&cfg.scenario, a.sf, d)?,
                    q1: capture_prob(&cfg.scenario, a.sf, d, copies)?,
                    link_outage: link_outage(&cfg.scenario, a.sf, d, copies)?.link_outage,
                };
                cfg.seed = next_seed();
                let connection = simulate_connection(&cfg)?;
                cfg.seed = next_seed();
                let capture = simulate_capture(&cfg)?;
                cfg.seed = next_seed();
                let link = simulate_link_outage(&cfg)?;
                points.push(SimPoint {
                    distance_m: d,
                    n_devices: n_bar,
                    copies,
                    analytic,
                    connection,
                    capture,
                    link_outage: link,
                });
            }
        }
    }
    let mut oracle = Vec::new();
    for p in &a.oracle {
        let c = p.config;
        let exact = if c.n <= MAX_EXACT_N { Some(oracle_outage_exact(p.o, c.m, c.n, c.r)?) } else { None };
        oracle.push(OracleRow {
            config: config_text(&c),
            o: p.o,
            closed_form: final_outage(&c, p.o),
            exact,
            monte_carlo: oracle_outage_mc(p.o, c.m, c.n, c.r, a.trials, next_seed())?,
        });
    }
    let doc = SimulateJson { sf: a.sf, trials: a.trials, seed, points, oracle };
    Ok(vec![json_artifact("simulate.json", &doc)?])
}

/// Groups energy rows by `(sf, mode, formula)` for quick inspection in tests.
pub fn parse_energy_csv(bytes: &[u8]) -> Result<BTreeMap<(u8, String, String), Vec<(u32, String, Option<f64>)>>> {
    let mut out: BTreeMap<_, Vec<_>> = BTreeMap::new();
    let mut rdr = csv::Reader::from_reader(bytes);
    for rec in rdr.records() {
        let rec = rec?;
        let sf: u8 = rec[0].parse()?;
        let m: u32 = rec[1].parse()?;
        let days = rec[8].parse::<f64>().ok();
        out.entry((sf, rec[2].to_string(), rec[3].to_string())).or_default().push((m, rec[4].to_string(), days));
    }
    Ok(out)
}
