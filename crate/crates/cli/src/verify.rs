//! Invariant suites behind `lorarep verify`.
//!
//! Checks marked informational report a measured quantity without a pass
//! condition; they never affect the exit status.

use rand::Rng;
use serde::Serialize;

use lorarep_core::capacity::{invert_scheme, optimize, SearchKind};
use lorarep_core::channel::{capture_prob, connection_prob};
use lorarep_core::energy::{lifetime, scenario_report, Formula, Mode};
use lorarep_core::mcsim::{simulate_capture, simulate_connection, TrialConfig};
use lorarep_core::oracle::{oracle_outage_exact, oracle_outage_exact_with, oracle_outage_mc, DecodeRule};
use lorarep_core::params::max_copies;
use lorarep_core::quadrature::capture_integral;
use lorarep_core::sampling::{derive_seed, trial_rng};
use lorarep_core::schemes::{final_outage, ht_configs_with_copies, outage_ct, outage_ht, outage_rt};
use lorarep_core::special::hyp2f1_capture;
use lorarep_core::{NetworkScenario, SchemeConfig};

use crate::args::{Level, Suite};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Info,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub level: &'static str,
    pub seed: u64,
    pub passed: bool,
    pub first_failure: Option<String>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn human(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let tag = match c.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Info => "INFO",
            };
            s.push_str(&format!("[{tag}] {}/{}: {}\n", c.suite, c.name, c.detail));
        }
        match &self.first_failure {
            None => s.push_str("all invariant suites passed\n"),
            Some(f) => s.push_str(&format!("first failing invariant: {f}\n")),
        }
        s
    }
}

struct Ctx {
    scenario: NetworkScenario,
    level: Level,
    seed: u64,
    checks: Vec<Check>,
}

impl Ctx {
    fn push(&mut self, suite: Suite, name: &'static str, ok: bool, detail: String) {
        let status = if ok { Status::Pass } else { Status::Fail };
        self.checks.push(Check { suite: suite.as_str(), name, status, detail });
    }

    fn info(&mut self, suite: Suite, name: &'static str, detail: String) {
        self.checks.push(Check { suite: suite.as_str(), name, status: Status::Info, detail });
    }

    fn mc_trials(&self) -> u64 {
        match self.level {
            Level::Quick => 100_000,
            Level::Full => 1_000_000,
        }
    }

    fn seed_for(&self, suite: Suite, index: u64) -> u64 {
        derive_seed(derive_seed(self.seed, suite as u64), index)
    }
}

pub fn run(scenario: &NetworkScenario, suites: &[Suite], level: Level, seed: u64) -> Report {
    let mut suites: Vec<Suite> = if suites.is_empty() { Suite::ALL.to_vec() } else { suites.to_vec() };
    suites.sort();
    suites.dedup();
    let mut ctx = Ctx { scenario: scenario.clone(), level, seed, checks: Vec::new() };
    for s in suites {
        match s {
            Suite::Identities => identities(&mut ctx),
            Suite::Oracle => oracle(&mut ctx),
            Suite::Dominance => dominance(&mut ctx),
            Suite::Hyp2f1 => hyp2f1(&mut ctx),
            Suite::Capacity => capacity(&mut ctx),
            Suite::Montecarlo => montecarlo(&mut ctx),
            Suite::Energy => energy(&mut ctx),
        }
    }
    let first_failure = ctx
        .checks
        .iter()
        .find(|c| c.status == Status::Fail)
        .map(|c| format!("{}/{}", c.suite, c.name));
    Report { level: level.as_str(), seed, passed: first_failure.is_none(), first_failure, checks: ctx.checks }
}

fn identities(ctx: &mut Ctx) {
    let mut rng = trial_rng(ctx.seed_for(Suite::Identities, 0), 0);
    let (mut rt_gap, mut ct_gap) = (0.0f64, 0.0f64);
    let samples = 10_000;
    for _ in 0..samples {
        let o: f64 = rng.random();
        let m = rng.random_range(1..=12);
        let n = rng.random_range(0..=10);
        let r = rng.random_range(1..=12);
        rt_gap = rt_gap.max((outage_ht(o, m, 0, r) - outage_rt(o, m)).abs());
        ct_gap = ct_gap.max((outage_ht(o, 1, n, 1) - outage_ct(o, n)).abs());
    }
    ctx.push(Suite::Identities, "ht_without_coding_is_rt", rt_gap <= 1e-12, format!("max gap {rt_gap:e} over {samples} samples"));
    ctx.push(Suite::Identities, "ht_single_copies_is_ct", ct_gap <= 1e-12, format!("max gap {ct_gap:e} over {samples} samples"));
}

fn oracle_gap(n: u32) -> Result<f64, String> {
    let mut gap = 0.0f64;
    for m in 1..=3 {
        for r in 1..=3 {
            for k in 1..=9 {
                let o = f64::from(k) / 10.0;
                let exact = oracle_outage_exact(o, m, n, r).map_err(|e| e.to_string())?;
                gap = gap.max((exact - outage_ht(o, m, n, r)).abs());
            }
        }
    }
    Ok(gap)
}

fn oracle(ctx: &mut Ctx) {
    match oracle_gap(1) {
        Ok(g) => ctx.push(Suite::Oracle, "enumeration_matches_closed_form_n1", g <= 1e-12, format!("max gap {g:e}")),
        Err(e) => ctx.push(Suite::Oracle, "enumeration_matches_closed_form_n1", false, e),
    }
    let top = match ctx.level {
        Level::Quick => 2,
        Level::Full => 3,
    };
    for n in 2..=top {
        // the 7-period window caps recovery; the gap is reported, not asserted
        let detail = match oracle_gap(n) {
            Ok(g) => format!("n={n}: max |enumeration - closed form| = {g:e}"),
            Err(e) => e,
        };
        ctx.info(Suite::Oracle, "window_gap_n_ge_2", detail);
    }
    let mut worst = 0.0f64;
    for m in 1..=3 {
        for r in 1..=3 {
            for k in 1..=9 {
                let o = f64::from(k) / 10.0;
                let peel = oracle_outage_exact_with(DecodeRule::Peeling, o, m, 1, r).unwrap_or(f64::NAN);
                worst = worst.max(peel - outage_ht(o, m, 1, r));
            }
        }
    }
    ctx.push(Suite::Oracle, "peeling_not_worse_n1", worst <= 1e-15, format!("max excess {worst:e}"));
    let trials = ctx.mc_trials();
    let seed = ctx.seed_for(Suite::Oracle, 0);
    let (o, m, n, r) = (0.3, 2, 2, 2);
    match (oracle_outage_exact(o, m, n, r), oracle_outage_mc(o, m, n, r, trials, seed)) {
        (Ok(exact), Ok(est)) => ctx.push(
            Suite::Oracle,
            "monte_carlo_matches_enumeration",
            est.agrees_with(exact, 3.0),
            format!("HT(2,2,2)@0.3: {} ± {} vs {exact}", est.estimate, est.stderr),
        ),
        (a, b) => ctx.push(Suite::Oracle, "monte_carlo_matches_enumeration", false, format!("{a:?} {b:?}")),
    }
}

fn dominance(ctx: &mut Ctx) {
    let mut worst = f64::NEG_INFINITY;
    for copies in 2..=10u32 {
        let configs = ht_configs_with_copies(copies);
        let rt = SchemeConfig::rt(copies).expect("rt");
        let ct = SchemeConfig::ct(copies - 1).expect("ct");
        for i in 0..1000 {
            let o = f64::from(i) / 999.0;
            let best = configs.iter().map(|c| final_outage(c, o)).fold(f64::INFINITY, f64::min);
            let bound = final_outage(&rt, o).min(final_outage(&ct, o));
            worst = worst.max(best - bound);
        }
    }
    ctx.push(Suite::Dominance, "best_ht_not_above_rt_or_ct", worst <= 1e-12, format!("max excess {worst:e}"));
}

fn hyp2f1(ctx: &mut Ctx) {
    let v = hyp2f1_capture(4.0, 1.0).unwrap_or(f64::NAN);
    let err = (v - std::f64::consts::FRAC_PI_4).abs();
    ctx.push(Suite::Hyp2f1, "arctan_identity", err <= 1e-12, format!("|2F1(1,1/2;3/2;-1) - pi/4| = {err:e}"));
    let mut rng = trial_rng(ctx.seed_for(Suite::Hyp2f1, 0), 0);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let eta = rng.random_range(2.1..6.0);
        let z = 10f64.powf(rng.random_range(-3.0..8.0));
        let a = hyp2f1_capture(eta, z).unwrap_or(f64::NAN);
        let b = capture_integral(eta, z);
        worst = worst.max(((a - b) / b).abs());
    }
    ctx.push(Suite::Hyp2f1, "series_matches_quadrature", worst <= 1e-8, format!("max relative gap {worst:e}"));
}

fn capacity(ctx: &mut Ctx) {
    let mut rng = trial_rng(ctx.seed_for(Suite::Capacity, 0), 0);
    let mut worst = 0.0f64;
    for _ in 0..300 {
        let cfg = SchemeConfig::ht(rng.random_range(1..=4), rng.random_range(0..=3), rng.random_range(1..=3)).expect("ht");
        let o = rng.random_range(1e-4..(1.0 - 1e-4));
        let t = final_outage(&cfg, o);
        let back = invert_scheme(&cfg, t).unwrap_or(f64::NAN);
        worst = worst.max((back - o).abs());
    }
    ctx.push(Suite::Capacity, "inversion_round_trip", worst <= 1e-9, format!("max |o - invert(outage(o))| = {worst:e}"));
    let s = ctx.scenario.clone();
    let mut violations = Vec::new();
    for sf in s.spreading_factors() {
        for &target in &s.targets {
            let n = |k| optimize(&s, sf, target, k, 10).map(|o| o.best.n_devices).unwrap_or(f64::NAN);
            let [dt, rt, ct, ht, star] =
                [SearchKind::DT, SearchKind::RT, SearchKind::CT, SearchKind::HT, SearchKind::HTStar].map(n);
            if !(ht >= star && star >= ct && ht >= rt && rt >= dt) {
                violations.push(format!("SF{sf}@{target}"));
            }
        }
    }
    let detail = if violations.is_empty() { "HT >= HT* >= CT, HT >= RT >= DT".to_string() } else { violations.join(" ") };
    ctx.push(Suite::Capacity, "dominance_ordering", violations.is_empty(), detail);
}

fn montecarlo(ctx: &mut Ctx) {
    let trials = ctx.mc_trials();
    let base = ctx.scenario.clone();
    let sf = 7;
    let mut index = 0;
    let mut bad = Vec::new();
    let mut compared = 0;
    for frac in [0.25, 0.5, 1.0] {
        let d1 = frac * base.radius_m;
        index += 1;
        let cfg = TrialConfig { scenario: base.clone(), sf, d1, copies: 1, trials, seed: ctx.seed_for(Suite::Montecarlo, index) };
        let h1 = connection_prob(&base, sf, d1).unwrap_or(f64::NAN);
        compared += 1;
        match simulate_connection(&cfg) {
            Ok(e) if e.agrees_with(h1, 3.0) => {}
            r => bad.push(format!("H1 d={d1}: {r:?} vs {h1}")),
        }
        for n_bar in [50.0, 200.0, 1000.0] {
            for copies in [1, 4] {
                index += 1;
                let s = base.clone().with_mean_devices(sf, n_bar);
                let q = capture_prob(&s, sf, d1, copies).unwrap_or(f64::NAN);
                let cfg = TrialConfig { scenario: s, sf, d1, copies, trials, seed: ctx.seed_for(Suite::Montecarlo, index) };
                compared += 1;
                match simulate_capture(&cfg) {
                    Ok(e) if e.agrees_with(q, 3.0) => {}
                    r => bad.push(format!("Q d={d1} N={n_bar} M={copies}: {r:?} vs {q}")),
                }
            }
        }
    }
    let detail = if bad.is_empty() {
        format!("{compared} estimates within 3 standard errors at {trials} trials")
    } else {
        bad.join("; ")
    };
    ctx.push(Suite::Montecarlo, "simulation_matches_analytic", bad.is_empty(), detail);
}

fn energy(ctx: &mut Ctx) {
    let s = ctx.scenario.clone();
    let rep = |sf, m, mode, f| scenario_report(&s, sf, m, mode, f).map(|r| lifetime(&r, s.battery_mah) / 24.0);
    let pins = [(7u8, 618.2619812809027), (12u8, 333.86726081239243)];
    let mut ok = true;
    let mut detail = Vec::new();
    for (sf, days) in pins {
        let got = rep(sf, 1, Mode::Default, Formula::Literal).unwrap_or(f64::NAN);
        ok &= ((got - days) / days).abs() <= 1e-6;
        detail.push(format!("SF{sf}: {got} days"));
    }
    ctx.push(Suite::Energy, "pinned_lifetimes", ok, detail.join(", "));

    for formula in Formula::ALL {
        let mut problems = Vec::new();
        for sf in [7u8, 12] {
            let cap = max_copies(&s, sf, 10).unwrap_or(1);
            let mut prev = (f64::INFINITY, f64::INFINITY);
            for m in 1..=cap {
                let d = rep(sf, m, Mode::Default, formula).unwrap_or(f64::NAN);
                let x = rep(sf, m, Mode::Modified, formula).unwrap_or(f64::NAN);
                if !(d < prev.0 && x < prev.1) {
                    problems.push(format!("SF{sf} M={m} not decreasing"));
                }
                if m == 1 && (x - d).abs() > 1e-9 * d {
                    problems.push(format!("SF{sf} M=1 modes differ"));
                }
                if m > 1 && !(x >= d) {
                    problems.push(format!("SF{sf} M={m} modified below default"));
                }
                prev = (d, x);
            }
        }
        for m in 1..=6 {
            for mode in Mode::ALL {
                if !(rep(7, m, mode, formula).unwrap_or(0.0) >= rep(12, m, mode, formula).unwrap_or(f64::NAN)) {
                    problems.push(format!("M={m} {mode}: SF7 below SF12"));
                }
            }
        }
        let detail = if problems.is_empty() { "lifetime decreasing in M, modified >= default, SF7 >= SF12".into() } else { problems.join("; ") };
        match formula {
            Formula::ChargeBalance => ctx.push(Suite::Energy, "lifetime_shape", problems.is_empty(), detail),
            // the printed accounting multiplies sleep by M, so the mode ordering is not expected to hold
            Formula::Literal => ctx.info(Suite::Energy, "lifetime_shape_literal", detail),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suites_pass() {
        let s = NetworkScenario::default();
        let r = run(&s, &[Suite::Identities, Suite::Dominance, Suite::Hyp2f1, Suite::Energy], Level::Quick, 1);
        assert!(r.passed, "{}", r.human());
        assert!(r.human().ends_with("all invariant suites passed\n"));
    }

    #[test]
    fn report_is_deterministic() {
        let s = NetworkScenario::default();
        let a = serde_json::to_string(&run(&s, &[Suite::Identities, Suite::Capacity], Level::Quick, 4)).unwrap();
        let b = serde_json::to_string(&run(&s, &[Suite::Capacity, Suite::Identities], Level::Quick, 4)).unwrap();
        assert_eq!(a, b);
    }
}
