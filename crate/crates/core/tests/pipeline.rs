//! End-to-end consistency between the channel, scheme and capacity layers.

use lorarep_core::capacity::{max_devices, optimize, SearchKind};
use lorarep_core::channel::link_outage;
use lorarep_core::oracle::oracle_outage_exact;
use lorarep_core::schemes::{final_outage, outage_ht};
use lorarep_core::{NetworkScenario, SchemeConfig};
use proptest::prelude::*;

#[test]
fn capacity_is_where_the_border_device_meets_the_target() {
    let s = NetworkScenario::default();
    for sf in 7..=12 {
        for target in [0.99, 0.999] {
            for kind in [SearchKind::RT, SearchKind::CT, SearchKind::HT] {
                let best = optimize(&s, sf, target, kind, 10).unwrap().best;
                let loaded = s.clone().with_mean_devices(sf, best.n_devices);
                let o = link_outage(&loaded, sf, s.radius_m, best.config.copies()).unwrap();
                assert!((o.link_outage - best.required_link_outage).abs() < 1e-9, "SF{sf} {kind}");
                let final_o = final_outage(&best.config, o.link_outage);
                assert!((final_o - (1.0 - target)).abs() < 1e-9 * (1.0 - target) * 100.0);
            }
        }
    }
}

#[test]
fn more_devices_than_capacity_misses_the_target() {
    let s = NetworkScenario::default();
    let cfg = SchemeConfig::ht(2, 1, 3).unwrap();
    let c = max_devices(&s, 9, &cfg, 0.99).unwrap();
    let over = s.clone().with_mean_devices(9, c.n_devices * 1.01);
    let under = s.clone().with_mean_devices(9, c.n_devices * 0.99);
    let fo = |sc: &NetworkScenario| final_outage(&cfg, link_outage(sc, 9, 200.0, 5).unwrap().link_outage);
    assert!(fo(&over) > 0.01);
    assert!(fo(&under) < 0.01);
}

#[test]
fn scenario_json_round_trip() {
    let s = NetworkScenario::default().with_mean_devices(8, 321.0);
    let back = NetworkScenario::from_json_str(&s.to_json_string().unwrap()).unwrap();
    assert_eq!(back, s);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn single_coded_message_enumeration_agrees(o in 0.0f64..=1.0, m in 1u32..5, r in 1u32..5) {
        let exact = oracle_outage_exact(o, m, 1, r).unwrap();
        prop_assert!((exact - outage_ht(o, m, 1, r)).abs() <= 1e-12);
    }
}
