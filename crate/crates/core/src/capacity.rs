//! Supported device count per spreading factor under a reliability target at
//! the cell border, and exhaustive search over replication configurations.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{capture_argument, connection_prob};
use crate::error::{Error, Result};
use crate::params::{activity_factor, max_copies, NetworkScenario, SchemeConfig, SchemeKind};
use crate::schemes::final_outage;
use crate::special::hyp2f1_capture;

pub const INVERT_TOL: f64 = 1e-12;
/// Default copy budget searched by [`optimize`].
pub const DEFAULT_M_CAP: u32 = 10;
/// Candidates within this relative distance of the best capacity are reported.
pub const NEAR_TIE_REL: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub sf: u8,
    pub config: SchemeConfig,
    pub target: f64,
    /// Link outage at which the scheme meets `1 − target` exactly.
    pub required_link_outage: f64,
    pub n_devices: f64,
    /// Connection probability at the border.
    pub h1: f64,
    /// False when the target exceeds what the link allows with no interferers at all.
    pub reachable: bool,
}

/// Link outage `o` with `final_outage(config, o) = target_final_outage`, by bisection.
pub fn invert_scheme(config: &SchemeConfig, target_final_outage: f64) -> Result<f64> {
    if !(target_final_outage > 0.0 && target_final_outage < 1.0) {
        return Err(Error::Domain(format!(
            "target outage must lie in (0, 1), got {target_final_outage}"
        )));
    }
    config.validate()?;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > INVERT_TOL {
        let mid = 0.5 * (lo + hi);
        if final_outage(config, mid) < target_final_outage {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `₂F₁(1, 2/η; 1 + 2/η; −1/θ)`, the capture integral for a border device.
pub fn border_capture_factor(scenario: &NetworkScenario) -> Result<f64> {
    hyp2f1_capture(scenario.ploss_exponent, capture_argument(scenario, scenario.radius_m))
}

/// Mean number of devices on `sf` the scheme supports while a border device
/// still reaches `target`.
pub fn max_devices(
    scenario: &NetworkScenario,
    sf: u8,
    config: &SchemeConfig,
    target: f64,
) -> Result<CapacityResult> {
    let required = invert_scheme(config, 1.0 - target)?;
    let h1 = connection_prob(scenario, sf, scenario.radius_m)?;
    let f = border_capture_factor(scenario)?;
    let p = activity_factor(scenario, sf)?;
    Ok(capacity_from_parts(sf, *config, target, required, h1, p * f))
}

/// `scale` is `p_j · ₂F₁`, which multiplies every candidate alike.
fn capacity_from_parts(
    sf: u8,
    config: SchemeConfig,
    target: f64,
    required: f64,
    h1: f64,
    scale: f64,
) -> CapacityResult {
    let ratio = (1.0 - required) / h1;
    let (n_devices, reachable) = if ratio > 1.0 {
        (0.0, false)
    } else {
        let copies = f64::from(config.copies());
        ((-ratio.ln() / (2.0 * copies * scale)).max(0.0), true)
    };
    CapacityResult { sf, config, target, required_link_outage: required, n_devices, h1, reachable }
}

/// Family of configurations searched by [`optimize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SearchKind {
    DT,
    RT,
    CT,
    HT,
    /// HT restricted to the copy count of the best CT configuration.
    #[serde(rename = "HT*")]
    HTStar,
}

impl SearchKind {
    pub const ALL: [SearchKind; 5] =
        [SearchKind::DT, SearchKind::RT, SearchKind::CT, SearchKind::HT, SearchKind::HTStar];

    pub fn as_str(&self) -> &'static str {
        match self {
            SearchKind::DT => "DT",
            SearchKind::RT => "RT",
            SearchKind::CT => "CT",
            SearchKind::HT => "HT",
            SearchKind::HTStar => "HT*",
        }
    }
}

impl fmt::Display for SearchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SearchKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "DT" => Ok(SearchKind::DT),
            "RT" => Ok(SearchKind::RT),
            "CT" => Ok(SearchKind::CT),
            "HT" => Ok(SearchKind::HT),
            "HT*" | "HTSTAR" | "HT-STAR" => Ok(SearchKind::HTStar),
            _ => Err(Error::InvalidConfig(format!("unknown search kind '{s}'"))),
        }
    }
}

/// Every configuration of `kind` using at most `cap` copies.
///
/// For [`SearchKind::HTStar`] `cap` is the exact copy count instead.
pub fn candidates(kind: SearchKind, cap: u32) -> Vec<SchemeConfig> {
    let ht = |m, n, r| SchemeConfig { kind: SchemeKind::HT, m, n, r };
    match kind {
        SearchKind::DT => vec![SchemeConfig::dt()],
        SearchKind::RT => (1..=cap).map(|m| SchemeConfig { kind: SchemeKind::RT, m, n: 0, r: 1 }).collect(),
        SearchKind::CT => (0..cap).map(|n| SchemeConfig { kind: SchemeKind::CT, m: 1, n, r: 1 }).collect(),
        SearchKind::HT | SearchKind::HTStar => {
            let mut out = Vec::new();
            for m in 1..=cap {
                out.push(ht(m, 0, 1));
                for n in 1..=cap - m {
                    for r in 1..=(cap - m) / n {
                        out.push(ht(m, n, r));
                    }
                }
            }
            if kind == SearchKind::HTStar {
                out.retain(|c| c.copies() == cap);
            }
            out
        }
    }
}

/// Winner of a configuration search plus every runner-up within [`NEAR_TIE_REL`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub kind: SearchKind,
    pub best: CapacityResult,
    pub near_ties: Vec<CapacityResult>,
    /// Copy budget after the duty-cycle limit.
    pub copy_cap: u32,
    pub evaluated: usize,
}

/// Higher capacity first; then fewer copies, fewer coded messages, fewer uncoded copies.
fn rank(a: &CapacityResult, b: &CapacityResult) -> Ordering {
    b.reachable
        .cmp(&a.reachable)
        .then(b.n_devices.total_cmp(&a.n_devices))
        .then(a.config.copies().cmp(&b.config.copies()))
        .then(a.config.n.cmp(&b.config.n))
        .then(a.config.m.cmp(&b.config.m))
        .then(a.config.r.cmp(&b.config.r))
}

/// Exhaustive search for the configuration of `kind` supporting the most devices.
pub fn optimize(
    scenario: &NetworkScenario,
    sf: u8,
    target: f64,
    kind: SearchKind,
    m_cap: u32,
) -> Result<Optimum> {
    let cap = max_copies(scenario, sf, m_cap)?;
    let exact = match kind {
        SearchKind::HTStar => optimize(scenario, sf, target, SearchKind::CT, m_cap)?.best.config.copies(),
        _ => cap,
    };
    let h1 = connection_prob(scenario, sf, scenario.radius_m)?;
    let scale = activity_factor(scenario, sf)? * border_capture_factor(scenario)?;
    let pool = candidates(kind, exact);
    let mut results = pool
        .par_iter()
        .map(|c| Ok(capacity_from_parts(sf, *c, target, invert_scheme(c, 1.0 - target)?, h1, scale)))
        .collect::<Result<Vec<_>>>()?;
    results.sort_by(rank);
    let best = results[0];
    let near_ties = results[1..]
        .iter()
        .filter(|c| best.reachable && c.reachable && c.n_devices >= (1.0 - NEAR_TIE_REL) * best.n_devices)
        .copied()
        .collect();
    Ok(Optimum { kind, best, near_ties, copy_cap: exact, evaluated: results.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn copies(o: &Optimum) -> u32 {
        o.best.config.copies()
    }

    #[test]
    fn inversion_examples() {
        let rt = SchemeConfig::rt(2).unwrap();
        assert!((invert_scheme(&rt, 0.25).unwrap() - 0.5).abs() <= INVERT_TOL);
        for t in [1e-6, 0.01, 0.3, 0.77] {
            assert!((invert_scheme(&SchemeConfig::dt(), t).unwrap() - t).abs() <= INVERT_TOL);
        }
        let ct = SchemeConfig::ct(1).unwrap();
        assert!((invert_scheme(&ct, 0.2257080078125).unwrap() - 0.5).abs() <= 1e-9);
        assert!(invert_scheme(&rt, 0.0).is_err());
        assert!(invert_scheme(&rt, 1.0).is_err());
    }

    #[test]
    fn rt_bisection_matches_root() {
        for m in 1..=10 {
            let cfg = SchemeConfig::rt(m).unwrap();
            for t in [1e-3, 1e-2, 0.5] {
                let root = f64::powf(t, 1.0 / f64::from(m));
                assert!((invert_scheme(&cfg, t).unwrap() - root).abs() <= 1e-11);
            }
        }
    }

    #[test]
    fn dt_capacity_at_sf7() {
        let s = NetworkScenario::default();
        let c = max_devices(&s, 7, &SchemeConfig::dt(), 0.99).unwrap();
        assert!(c.reachable);
        assert!((c.n_devices - 91.0).abs() < 1.0, "{}", c.n_devices);
        let dense = s.clone().with_mean_devices(7, 5000.0);
        assert_eq!(max_devices(&dense, 7, &SchemeConfig::dt(), 0.99).unwrap(), c);
    }

    #[test]
    fn unreachable_target() {
        let mut s = NetworkScenario::default();
        s.tx_power_dbm = -30.0;
        let c = max_devices(&s, 7, &SchemeConfig::dt(), 0.999).unwrap();
        assert!(!c.reachable);
        assert_eq!(c.n_devices, 0.0);
        assert!(c.h1 < 0.999);
    }

    #[test]
    fn candidate_counts() {
        assert_eq!(candidates(SearchKind::RT, 10).len(), 10);
        assert_eq!(candidates(SearchKind::CT, 10).len(), 10);
        let ht = candidates(SearchKind::HT, 4);
        assert!(ht.iter().all(|c| c.copies() <= 4 && c.validate().is_ok()));
        // M=1: 1, M=2: 2, M=3: 4, M=4: 6
        assert_eq!(ht.len(), 13);
        let star = candidates(SearchKind::HTStar, 4);
        assert_eq!(star.len(), 6);
    }

    #[test]
    fn table_rt_ct_low_target() {
        let s = NetworkScenario::default();
        for sf in [7, 8, 9, 10] {
            assert_eq!(copies(&optimize(&s, sf, 0.99, SearchKind::RT, 10).unwrap()), 7, "SF{sf}");
        }
        let sf12 = optimize(&s, 12, 0.99, SearchKind::RT, 10).unwrap();
        assert_eq!(sf12.copy_cap, 6);
        assert_eq!(copies(&sf12), 6);
        for sf in 7..=12 {
            assert_eq!(copies(&optimize(&s, sf, 0.99, SearchKind::CT, 10).unwrap()), 3);
            assert_eq!(copies(&optimize(&s, sf, 0.999, SearchKind::CT, 10).unwrap()), 5);
        }
    }

    #[test]
    fn rt_near_tie_at_sf11() {
        let s = NetworkScenario::default();
        let o = optimize(&s, 11, 0.99, SearchKind::RT, 10).unwrap();
        let tied: Vec<u32> = o.near_ties.iter().map(|c| c.config.copies()).collect();
        assert!(copies(&o) == 6 || tied.contains(&6), "{o:?}");
    }

    #[test]
    fn ht_optimum_low_target() {
        let s = NetworkScenario::default();
        for sf in 7..=12 {
            let o = optimize(&s, sf, 0.99, SearchKind::HT, 10).unwrap();
            let c = o.best.config;
            assert_eq!((c.m, c.n, c.r), (2, 1, 3), "SF{sf}");
            let star = optimize(&s, sf, 0.99, SearchKind::HTStar, 10).unwrap().best.config;
            assert_eq!((star.m, star.n, star.r), (1, 1, 2));
        }
    }

    #[test]
    fn tie_break_prefers_fewer_copies() {
        let a = CapacityResult {
            sf: 7,
            config: SchemeConfig::ht(1, 1, 1).unwrap(),
            target: 0.9,
            required_link_outage: 0.1,
            n_devices: 10.0,
            h1: 1.0,
            reachable: true,
        };
        let b = CapacityResult { config: SchemeConfig::ht(2, 0, 1).unwrap(), ..a };
        let c = CapacityResult { config: SchemeConfig::ht(1, 2, 1).unwrap(), ..a };
        let mut v = vec![c, b, a];
        v.sort_by(rank);
        assert_eq!(v[0].config, b.config);
        assert_eq!(v[1].config, a.config);
    }

    #[test]
    fn argmax_invariant_to_scaling() {
        let base = NetworkScenario::default();
        let mut scaled = base.clone();
        scaled.period_s = 1200.0;
        scaled.sir_threshold_db = 3.0;
        for kind in [SearchKind::RT, SearchKind::CT, SearchKind::HT] {
            for target in [0.99, 0.999] {
                let a = optimize(&base, 8, target, kind, 10).unwrap();
                let b = optimize(&scaled, 8, target, kind, 10).unwrap();
                assert_eq!(a.best.config, b.best.config);
                assert!(b.best.n_devices != a.best.n_devices);
            }
        }
    }

    #[test]
    fn dominance_ordering() {
        let s = NetworkScenario::default();
        for sf in 7..=12 {
            for target in [0.99, 0.999] {
                let n = |k| optimize(&s, sf, target, k, 10).unwrap().best.n_devices;
                let (dt, rt, ct, ht, star) =
                    (n(SearchKind::DT), n(SearchKind::RT), n(SearchKind::CT), n(SearchKind::HT), n(SearchKind::HTStar));
                assert!(ht >= star && star >= ct, "SF{sf} {target}");
                assert!(ht >= rt && rt >= dt, "SF{sf} {target}");
            }
        }
    }

    proptest! {
        #[test]
        fn inversion_round_trip(o in 1e-4f64..(1.0 - 1e-4), m in 1u32..5, n in 0u32..4, r in 1u32..4) {
            let cfg = SchemeConfig::ht(m, n, r).unwrap();
            let t = final_outage(&cfg, o);
            let back = invert_scheme(&cfg, t).unwrap();
            prop_assert!((back - o).abs() <= 1e-9, "{cfg} o={o} back={back}");
        }
    }
}
