//! Post-decoding outage of the replication schemes as a function of the
//! per-packet link outage `o`.
//!
//! HT is evaluated through its union form, `o^m · (1 − E)^{2n}`, where `E`
//! is the probability of one recovery chain. The expanded polynomial of the
//! same quantity contains `o^{-m}` and is kept only for cross-checking.

use serde::{Deserialize, Serialize};

use crate::params::{SchemeConfig, SchemeKind};

/// Excursions outside [0, 1] smaller than this are rounding noise.
pub const CLAMP_SLACK: f64 = 1e-15;

fn clamp_prob(x: f64) -> f64 {
    debug_assert!(
        x >= -CLAMP_SLACK && x <= 1.0 + CLAMP_SLACK,
        "probability {x} outside [0, 1] beyond rounding"
    );
    x.clamp(0.0, 1.0)
}

fn pow(o: f64, e: u32) -> f64 {
    o.powi(e as i32)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeOutage {
    pub config: SchemeConfig,
    pub link_outage: f64,
    pub final_outage: f64,
}

/// Every one of `m` replicas lost: `o^m`.
pub fn outage_rt(o: f64, m: u32) -> f64 {
    clamp_prob(pow(o, m))
}

/// CT with `n` coded messages per information message.
pub fn outage_ct(o: f64, n: u32) -> f64 {
    let poly = 1.0 + o + o * o - 5.0 * pow(o, 3) + 4.0 * pow(o, 4) - pow(o, 5);
    clamp_prob(pow(o, 2 * n + 1) * pow(poly, 2 * n))
}

/// Probability that one recovery chain delivers the lost message.
///
/// The three terms are the chain reaching a received information message
/// after one, two or three coded hops. Depends on `m` and `r` only.
pub fn event_prob(o: f64, m: u32, r: u32) -> f64 {
    let om = pow(o, m);
    let m_ok = 1.0 - om;
    let r_ok = 1.0 - pow(o, r);
    clamp_prob(m_ok * r_ok * (1.0 + om * r_ok + om * om * r_ok * r_ok))
}

/// `1 − E_{m,r}`, written as a sum of non-negative terms so it stays
/// accurate when a chain almost surely succeeds.
pub fn chain_failure_prob(o: f64, m: u32, r: u32) -> f64 {
    let om = pow(o, m);
    let or = pow(o, r);
    let link = om * (1.0 - or);
    clamp_prob(link.powi(3) + or * (1.0 + link + link * link))
}

/// HT outage, `o^m · (1 − E_{m,r})^{2n}`.
pub fn outage_ht(o: f64, m: u32, n: u32, r: u32) -> f64 {
    let all_chains_fail = pow(chain_failure_prob(o, m, r), 2 * n);
    clamp_prob(pow(o, m) * all_chains_fail)
}

/// HT outage through the expanded form `o^{m(2n+1)} F_{m,n,r}^{2n}`.
///
/// Ill-conditioned as `o → 0` and undefined at `o = 0`.
pub fn outage_ht_expanded(o: f64, m: u32, n: u32, r: u32) -> f64 {
    let p = |e: i64| o.powi(e as i32);
    let (m, r) = (i64::from(m), i64::from(r));
    let f = p(2 * m) + (1.0 - p(m)) * (p(m + 3 * r) - p(2 * r) - 3.0 * p(m + 2 * r))
        + p(r) * (1.0 + p(-m) + p(m) - 3.0 * p(2 * m));
    p(m * (2 * i64::from(n) + 1)) * f.powi(2 * n as i32)
}

/// HT outage for `n = 1` through its ten-term polynomial.
pub fn outage_ht_n1_expanded(o: f64, m: u32, r: u32) -> f64 {
    let p = |e: u32| pow(o, e);
    let inner = p(3 * m) + p(r) + p(m + r) - 2.0 * p(2 * (m + r)) - p(3 * (m + r))
        + p(2 * m + r)
        - 3.0 * p(3 * m + r)
        - p(m + 2 * r)
        + 3.0 * p(3 * m + 2 * r)
        + p(2 * m + 3 * r);
    p(m) * inner * inner
}

/// Final outage of `config` at link outage `o`.
pub fn final_outage(config: &SchemeConfig, o: f64) -> f64 {
    match config.kind {
        SchemeKind::DT => clamp_prob(o),
        SchemeKind::RT => outage_rt(o, config.m),
        SchemeKind::CT => outage_ct(o, config.n),
        SchemeKind::HT => outage_ht(o, config.m, config.n, config.r),
    }
}

pub fn scheme_outage(config: SchemeConfig, o: f64) -> SchemeOutage {
    SchemeOutage { config, link_outage: o, final_outage: final_outage(&config, o) }
}

/// Every HT configuration using exactly `copies` packets, RT (`n = 0`) included once.
pub fn ht_configs_with_copies(copies: u32) -> Vec<SchemeConfig> {
    let mut out = Vec::new();
    for m in 1..=copies {
        let rest = copies - m;
        if rest == 0 {
            out.push(SchemeConfig { kind: SchemeKind::HT, m, n: 0, r: 1 });
            continue;
        }
        for n in 1..=rest {
            if rest % n == 0 {
                out.push(SchemeConfig { kind: SchemeKind::HT, m, n, r: rest / n });
            }
        }
    }
    out
}

/// The three M = 4 curves of the outage-versus-link-outage comparison:
/// the CT equivalent, an HT-only configuration, and the RT equivalent.
pub fn comparison_m4() -> [SchemeConfig; 3] {
    [
        SchemeConfig { kind: SchemeKind::HT, m: 1, n: 3, r: 1 },
        SchemeConfig { kind: SchemeKind::HT, m: 3, n: 1, r: 1 },
        SchemeConfig { kind: SchemeKind::HT, m: 4, n: 0, r: 1 },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rt_examples() {
        assert_eq!(outage_rt(0.5, 2), 0.25);
        assert_eq!(outage_rt(0.37, 1), 0.37);
        assert!((outage_rt(0.1, 7) - 1e-7).abs() < 1e-20);
    }

    #[test]
    fn ct_examples() {
        assert_eq!(outage_ct(0.42, 0), 0.42);
        let expected = 0.125 * 1.34375f64.powi(2);
        assert!((outage_ct(0.5, 1) - expected).abs() < 1e-15);
        assert!((outage_ct(0.5, 1) - 0.2257080078125).abs() < 1e-15);
        assert_eq!(outage_ct(1.0, 3), 1.0);
    }

    #[test]
    fn event_prob_examples() {
        assert_eq!(event_prob(0.0, 2, 3), 1.0);
        assert_eq!(event_prob(1.0, 2, 3), 0.0);
        assert!((event_prob(0.5, 1, 1) - 0.328125).abs() < 1e-15);
    }

    #[test]
    fn chain_failure_complements_event() {
        for o in [0.0, 0.05, 0.3, 0.8, 1.0] {
            for (m, r) in [(1, 1), (2, 3), (3, 1)] {
                assert!((chain_failure_prob(o, m, r) + event_prob(o, m, r) - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn ht_accurate_when_chains_rarely_fail() {
        // reference from 50-digit evaluation
        let v = outage_ht(0.01, 2, 1, 4);
        assert!((v / 1.000400059995998099900026e-20 - 1.0).abs() < 1e-14, "{v}");
    }

    #[test]
    fn ht_reduces_to_rt_and_ct() {
        assert_eq!(outage_ht(0.3, 3, 0, 5), outage_rt(0.3, 3));
        assert!((outage_ht(0.3, 1, 2, 1) - outage_ct(0.3, 2)).abs() < 1e-15);
    }

    #[test]
    fn ht_pinned_value() {
        // (0.5, 2, 1, 3): chain enumeration gives the same value, see oracle tests
        let v = outage_ht(0.5, 2, 1, 3);
        assert!((v - 0.007122745970264077).abs() < 1e-15, "{v}");
    }

    #[test]
    fn expanded_forms_agree() {
        for i in 0..=600 {
            let t = i as f64 / 600.0;
            // the expanded form loses digits to cancellation below o ~ 1e-2
            let o = 1e-2 + t * (1.0 - 2e-2);
            for m in 1..=3 {
                for r in 1..=4 {
                    for n in 0..=3 {
                        let a = outage_ht(o, m, n, r);
                        let b = outage_ht_expanded(o, m, n, r);
                        assert!(
                            (a - b).abs() <= 1e-9 * a,
                            "o={o} m={m} n={n} r={r}: {a} vs {b}"
                        );
                    }
                    let a = outage_ht(o, m, 1, r);
                    let c = outage_ht_n1_expanded(o, m, r);
                    assert!((a - c).abs() <= 1e-9 * a);
                }
            }
        }
    }

    #[test]
    fn dispatch() {
        assert_eq!(scheme_outage(SchemeConfig::dt(), 0.3).final_outage, 0.3);
        assert_eq!(scheme_outage(SchemeConfig::rt(4).unwrap(), 0.5).final_outage, 0.0625);
        let ht = SchemeConfig::ht(2, 1, 3).unwrap();
        // each chain fails with probability ~ o^{3m} + o^r, so HT(2,1,3) ~ o^2 (o^3)^2
        let o = 1e-4;
        let ratio = scheme_outage(ht, o).final_outage / o.powi(8);
        assert!((ratio - 1.0).abs() < 1e-2, "{ratio}");
        let ct = SchemeConfig::ct(2).unwrap();
        assert!((scheme_outage(ct, 0.4).final_outage - outage_ct(0.4, 2)).abs() < 1e-15);
    }

    #[test]
    fn endpoints() {
        for cfg in ht_configs_with_copies(6) {
            assert_eq!(final_outage(&cfg, 0.0), 0.0);
            assert_eq!(final_outage(&cfg, 1.0), 1.0);
        }
    }

    #[test]
    fn config_enumeration_by_copies() {
        let four = ht_configs_with_copies(4);
        let tuples: Vec<_> = four.iter().map(|c| (c.m, c.n, c.r)).collect();
        assert_eq!(tuples, vec![(1, 1, 3), (1, 3, 1), (2, 1, 2), (2, 2, 1), (3, 1, 1), (4, 0, 1)]);
        assert!(four.iter().all(|c| c.copies() == 4));
    }

    #[test]
    fn monotone_in_link_outage() {
        let mut cfgs: Vec<SchemeConfig> = (1..=10).flat_map(ht_configs_with_copies).collect();
        cfgs.push(SchemeConfig::dt());
        cfgs.extend((0..=9).map(|n| SchemeConfig::ct(n).unwrap()));
        for cfg in &cfgs {
            let mut prev = 0.0;
            for i in 0..=4000 {
                let v = final_outage(cfg, i as f64 / 4000.0);
                assert!(v >= prev - 1e-15, "{cfg} not monotone at step {i}");
                prev = v;
            }
        }
    }

    #[test]
    fn comparison_crossover() {
        let [ct, ht, rt] = comparison_m4();
        let lowest = |o: f64| {
            [ct, ht, rt]
                .into_iter()
                .min_by(|a, b| final_outage(a, o).total_cmp(&final_outage(b, o)))
                .unwrap()
        };
        for i in 1..=35 {
            assert_eq!(lowest(i as f64 / 100.0), ct);
        }
        assert_ne!(lowest(0.6), ct);
        assert_eq!(lowest(0.6), ht);
        assert_eq!(lowest(0.95), rt);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]
        #[test]
        fn corollaries(o in 0.0f64..=1.0, m in 1u32..12, n in 0u32..10, r in 1u32..12) {
            prop_assert!((outage_ht(o, m, 0, r) - outage_rt(o, m)).abs() <= 1e-12);
            prop_assert!((outage_ht(o, 1, n, 1) - outage_ct(o, n)).abs() <= 1e-12);
        }

        #[test]
        fn replication_never_hurts_uncoded_part(o in 0.0f64..=1.0, m in 1u32..6, n in 0u32..5, r in 1u32..6) {
            let v = outage_ht(o, m, n, r);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert!(v <= outage_rt(o, m) + 1e-15);
        }
    }
}
