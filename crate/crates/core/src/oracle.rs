//! Independent check of the HT/CT closed forms by working directly on the
//! decoding-event structure.
//!
//! A realization covers the seven periods `k−3 ..= k+3`. Each period holds
//! one uncoded group (all `m` replicas of the information message, lost with
//! probability `o^m`) and `n` coded groups, the `j`-th of which carries
//! `M_p ⊕ M_{p−j}` and is lost with probability `o^r`. Group outcomes are
//! independent.
//!
//! Two decoders are provided:
//!
//! - [`chain_decode`] reproduces exactly the recovery chains the closed form
//!   counts: from message `k`, follow coded links of offset `j` in one
//!   direction for up to three hops until a received information message is
//!   reached.
//! - [`peeling_decode`] recovers `M_k` whenever the received groups determine
//!   it over GF(2). Messages outside the window are unknowns with no anchor.
//!
//! For `n = 1` the chains are disjoint and the enumeration reproduces the
//! closed form. For `n ≥ 2` the seven information messages are shared by
//! all `2n` chains, so the enumeration is no longer a product of
//! independent chain events; any window decoder has outage at least `o^{7m}`.

use std::sync::OnceLock;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sampling::{count_hits, Estimate};

pub const WINDOW_HALF: i32 = 3;
pub const WINDOW_PERIODS: u32 = 7;
/// Largest `n` whose `2^{7(1+n)}` patterns are enumerated exactly.
pub const MAX_EXACT_N: u32 = 3;
/// Hops a recovery chain may take.
pub const CHAIN_DEPTH: u32 = 3;
pub const MIN_MC_TRIALS: u64 = 10_000;

/// Group outcomes of one realization; a set bit means the group was received.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventWindow {
    n: u32,
    bits: u64,
}

impl EventWindow {
    pub fn group_count(n: u32) -> u32 {
        WINDOW_PERIODS * (1 + n)
    }

    pub fn from_bits(n: u32, bits: u64) -> Self {
        let groups = Self::group_count(n);
        let mask = if groups >= 64 { u64::MAX } else { (1u64 << groups) - 1 };
        EventWindow { n, bits: bits & mask }
    }

    pub fn all_received(n: u32) -> Self {
        Self::from_bits(n, u64::MAX)
    }

    pub fn all_lost(n: u32) -> Self {
        Self::from_bits(n, 0)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    fn in_window(period: i32) -> bool {
        period.abs() <= WINDOW_HALF
    }

    fn uncoded_bit(period: i32) -> u32 {
        (period + WINDOW_HALF) as u32
    }

    fn coded_bit(&self, period: i32, offset: u32) -> u32 {
        WINDOW_PERIODS + (period + WINDOW_HALF) as u32 * self.n + (offset - 1)
    }

    /// Uncoded group of `period` (relative to `k`) received.
    pub fn uncoded(&self, period: i32) -> bool {
        Self::in_window(period) && self.bits >> Self::uncoded_bit(period) & 1 == 1
    }

    /// Coded group sent in `period` carrying `M_period ⊕ M_{period−offset}` received.
    pub fn coded(&self, period: i32, offset: u32) -> bool {
        Self::in_window(period)
            && (1..=self.n).contains(&offset)
            && self.bits >> self.coded_bit(period, offset) & 1 == 1
    }

    pub fn with_uncoded(mut self, period: i32, received: bool) -> Self {
        assert!(Self::in_window(period));
        self.set(Self::uncoded_bit(period), received);
        self
    }

    pub fn with_coded(mut self, period: i32, offset: u32, received: bool) -> Self {
        assert!(Self::in_window(period) && (1..=self.n).contains(&offset));
        let bit = self.coded_bit(period, offset);
        self.set(bit, received);
        self
    }

    fn set(&mut self, bit: u32, on: bool) {
        if on {
            self.bits |= 1 << bit;
        } else {
            self.bits &= !(1 << bit);
        }
    }

    fn lost_uncoded(&self) -> u32 {
        WINDOW_PERIODS - (self.bits & ((1 << WINDOW_PERIODS) - 1)).count_ones()
    }

    fn lost_coded(&self) -> u32 {
        WINDOW_PERIODS * self.n - (self.bits >> WINDOW_PERIODS).count_ones()
    }
}

/// Whether message `k` is recovered by its own uncoded group or by one of the
/// `2n` recovery chains.
pub fn chain_decode(window: &EventWindow) -> bool {
    if window.uncoded(0) {
        return true;
    }
    (1..=window.n()).any(|j| chain_reaches(window, j, -1) || chain_reaches(window, j, 1))
}

fn chain_reaches(window: &EventWindow, offset: u32, dir: i32) -> bool {
    let step = dir * offset as i32;
    let mut p = 0;
    for _ in 0..CHAIN_DEPTH {
        let q = p + step;
        // the link between p and q is the coded group of the later period
        if !window.coded(p.max(q), offset) {
            return false;
        }
        if window.uncoded(q) {
            return true;
        }
        p = q;
    }
    false
}

/// Whether the received groups determine `M_k` over GF(2).
///
/// Every equation involves at most two messages, so `M_k` is determined
/// exactly when its connected component (edges = received coded groups)
/// contains a received information message.
pub fn peeling_decode(window: &EventWindow) -> bool {
    let n = window.n() as i32;
    let lowest = -WINDOW_HALF - n;
    let nodes = (WINDOW_HALF - lowest + 1) as usize;
    let idx = |p: i32| (p - lowest) as usize;
    let mut parent: Vec<usize> = (0..nodes).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for p in -WINDOW_HALF..=WINDOW_HALF {
        for j in 1..=window.n() {
            if window.coded(p, j) {
                let a = find(&mut parent, idx(p));
                let b = find(&mut parent, idx(p - j as i32));
                parent[a] = b;
            }
        }
    }
    let root = find(&mut parent, idx(0));
    (-WINDOW_HALF..=WINDOW_HALF)
        .any(|p| window.uncoded(p) && find(&mut parent, idx(p)) == root)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecodeRule {
    Chain,
    Peeling,
}

impl DecodeRule {
    pub fn decode(&self, window: &EventWindow) -> bool {
        match self {
            DecodeRule::Chain => chain_decode(window),
            DecodeRule::Peeling => peeling_decode(window),
        }
    }
}

/// Number of undecodable patterns by (lost uncoded groups, lost coded groups).
///
/// The probability of a pattern depends only on those two counts, so this
/// table turns the `2^{7(1+n)}` enumeration into a polynomial that can be
/// evaluated for any `(o, m, r)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FailureCounts {
    n: u32,
    counts: Vec<u64>,
}

impl FailureCounts {
    fn coded_groups(n: u32) -> usize {
        (WINDOW_PERIODS * n) as usize + 1
    }

    fn slot(&self, lost_uncoded: u32, lost_coded: u32) -> usize {
        lost_uncoded as usize * Self::coded_groups(self.n) + lost_coded as usize
    }

    pub fn enumerate(n: u32, rule: DecodeRule) -> Result<Self> {
        if n > MAX_EXACT_N {
            return Err(Error::EnumerationBound { n, max: MAX_EXACT_N });
        }
        let groups = EventWindow::group_count(n);
        let width = (WINDOW_PERIODS as usize + 1) * Self::coded_groups(n);
        let k_bit = EventWindow::uncoded_bit(0);
        // patterns with M_k received always decode; enumerate the rest
        let free = groups - 1;
        let total = 1u64 << free;
        let chunk = 1u64 << 16.min(free);
        let empty = FailureCounts { n, counts: vec![0; width] };
        let counts = (0..total / chunk)
            .into_par_iter()
            .fold(
                || vec![0u64; width],
                |mut acc, c| {
                    for x in c * chunk..(c + 1) * chunk {
                        let low = x & ((1 << k_bit) - 1);
                        let high = (x >> k_bit) << (k_bit + 1);
                        let w = EventWindow::from_bits(n, low | high);
                        if !rule.decode(&w) {
                            acc[empty.slot(w.lost_uncoded(), w.lost_coded())] += 1;
                        }
                    }
                    acc
                },
            )
            .reduce(
                || vec![0u64; width],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            );
        Ok(FailureCounts { n, counts })
    }

    /// Cached enumeration for `n ≤ MAX_EXACT_N`.
    pub fn cached(n: u32, rule: DecodeRule) -> Result<&'static FailureCounts> {
        const SLOTS: usize = MAX_EXACT_N as usize + 1;
        static CHAIN: [OnceLock<FailureCounts>; SLOTS] = [const { OnceLock::new() }; SLOTS];
        static PEEL: [OnceLock<FailureCounts>; SLOTS] = [const { OnceLock::new() }; SLOTS];
        if n > MAX_EXACT_N {
            return Err(Error::EnumerationBound { n, max: MAX_EXACT_N });
        }
        let cell = match rule {
            DecodeRule::Chain => &CHAIN[n as usize],
            DecodeRule::Peeling => &PEEL[n as usize],
        };
        if let Some(c) = cell.get() {
            return Ok(c);
        }
        let counts = Self::enumerate(n, rule)?;
        Ok(cell.get_or_init(|| counts))
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Undecodable patterns with the given numbers of lost groups.
    pub fn count(&self, lost_uncoded: u32, lost_coded: u32) -> u64 {
        self.counts[self.slot(lost_uncoded, lost_coded)]
    }

    pub fn total_failures(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Outage probability for link outage `o` and repetition counts `m`, `r`.
    pub fn outage(&self, o: f64, m: u32, r: u32) -> f64 {
        let pm = o.powi(m as i32);
        let pr = o.powi(r as i32);
        let coded = WINDOW_PERIODS * self.n;
        let mut total = 0.0;
        for a in 0..=WINDOW_PERIODS {
            let pa = pm.powi(a as i32) * (1.0 - pm).powi((WINDOW_PERIODS - a) as i32);
            for b in 0..=coded {
                let c = self.count(a, b);
                if c != 0 {
                    total += c as f64 * pa * pr.powi(b as i32) * (1.0 - pr).powi((coded - b) as i32);
                }
            }
        }
        total.clamp(0.0, 1.0)
    }
}

/// Exact outage of the chain decoder over every window pattern.
pub fn oracle_outage_exact(o: f64, m: u32, n: u32, r: u32) -> Result<f64> {
    oracle_outage_exact_with(DecodeRule::Chain, o, m, n, r)
}

pub fn oracle_outage_exact_with(rule: DecodeRule, o: f64, m: u32, n: u32, r: u32) -> Result<f64> {
    check_args(o, m, r)?;
    Ok(FailureCounts::cached(n, rule)?.outage(o, m, r))
}

fn check_args(o: f64, m: u32, r: u32) -> Result<()> {
    if !(0.0..=1.0).contains(&o) {
        return Err(Error::Domain(format!("link outage must lie in [0, 1], got {o}")));
    }
    if m == 0 || r == 0 {
        return Err(Error::Domain("m and r must be at least 1".into()));
    }
    Ok(())
}

/// Draws a window with independent group losses.
pub fn random_window<R: Rng>(rng: &mut R, n: u32, lose_uncoded: f64, lose_coded: f64) -> EventWindow {
    let mut bits = 0u64;
    for g in 0..EventWindow::group_count(n) {
        let p = if g < WINDOW_PERIODS { lose_uncoded } else { lose_coded };
        if rng.random::<f64>() >= p {
            bits |= 1 << g;
        }
    }
    EventWindow::from_bits(n, bits)
}

/// Monte Carlo estimate of the chain-decoder outage.
pub fn oracle_outage_mc(o: f64, m: u32, n: u32, r: u32, trials: u64, seed: u64) -> Result<Estimate> {
    oracle_outage_mc_with(DecodeRule::Chain, o, m, n, r, trials, seed)
}

pub fn oracle_outage_mc_with(
    rule: DecodeRule,
    o: f64,
    m: u32,
    n: u32,
    r: u32,
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    check_args(o, m, r)?;
    if trials < MIN_MC_TRIALS {
        return Err(Error::Domain(format!("at least {MIN_MC_TRIALS} trials required, got {trials}")));
    }
    if EventWindow::group_count(n) > 64 {
        return Err(Error::Domain(format!("n = {n} needs more than 64 groups per window")));
    }
    let (pm, pr) = (o.powi(m as i32), o.powi(r as i32));
    let failures = count_hits(trials, seed, |rng| !rule.decode(&random_window(rng, n, pm, pr)));
    Ok(Estimate::from_counts(failures, trials, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{outage_ct, outage_ht};

    #[test]
    fn trivial_windows() {
        for n in 1..=3 {
            assert!(chain_decode(&EventWindow::all_received(n)));
            assert!(!chain_decode(&EventWindow::all_lost(n)));
            assert!(peeling_decode(&EventWindow::all_received(n)));
            assert!(!peeling_decode(&EventWindow::all_lost(n)));
        }
    }

    #[test]
    fn left_chain_single_hop() {
        let w = EventWindow::all_lost(1).with_uncoded(-1, true).with_coded(0, 1, true);
        assert!(chain_decode(&w));
        assert!(peeling_decode(&w));
    }

    #[test]
    fn right_chain_three_hops() {
        let w = EventWindow::all_lost(1)
            .with_coded(1, 1, true)
            .with_coded(2, 1, true)
            .with_coded(3, 1, true)
            .with_uncoded(3, true);
        assert!(chain_decode(&w));
        // one broken link kills the chain
        assert!(!chain_decode(&w.with_coded(2, 1, false)));
    }

    #[test]
    fn chain_stays_in_window() {
        // offset-2 chain: k -> k-2 uses R_k^(2); the next hop to k-4 is outside
        let w = EventWindow::all_lost(2)
            .with_coded(0, 2, true)
            .with_coded(-2, 2, true)
            .with_uncoded(-3, true);
        assert!(!chain_decode(&w));
        assert!(chain_decode(&w.with_uncoded(-2, true)));
    }

    #[test]
    fn peeling_recovers_beyond_chains() {
        // M_k via R_k^(2) to k-2, then R_{k-1}^(1) from k-2 to k-1 (a mixed path)
        let w = EventWindow::all_lost(2)
            .with_coded(0, 2, true)
            .with_coded(-1, 1, true)
            .with_uncoded(-1, true);
        assert!(!chain_decode(&w));
        assert!(peeling_decode(&w));
    }

    #[test]
    fn ct_example_by_enumeration() {
        let v = oracle_outage_exact(0.5, 1, 1, 1).unwrap();
        assert!((v - 0.2257080078125).abs() < 1e-15, "{v}");
        assert!((v - outage_ct(0.5, 1)).abs() < 1e-15);
    }

    #[test]
    fn pinned_ht_enumeration() {
        let v = oracle_outage_exact(0.5, 2, 1, 3).unwrap();
        assert!((v - 0.007122745970264077).abs() < 1e-16, "{v}");
        assert!((v - outage_ht(0.5, 2, 1, 3)).abs() < 1e-16);
    }

    #[test]
    fn zero_link_outage() {
        for n in 1..=2 {
            assert_eq!(oracle_outage_exact(0.0, 2, n, 2).unwrap(), 0.0);
        }
    }

    #[test]
    fn n1_matches_closed_form() {
        for m in 1..=3 {
            for r in 1..=3 {
                for o in [0.1, 0.3, 0.5, 0.7, 0.9] {
                    let exact = oracle_outage_exact(o, m, 1, r).unwrap();
                    let closed = outage_ht(o, m, 1, r);
                    assert!((exact - closed).abs() <= 1e-12, "({o},{m},1,{r}) {exact} {closed}");
                }
            }
        }
    }

    #[test]
    fn n2_event_space_has_outage_floor() {
        // all seven uncoded groups lost can never be rescued
        for (o, m, r) in [(0.1, 1, 3), (0.3, 2, 2), (0.5, 1, 1)] {
            let exact = oracle_outage_exact(o, m, 2, r).unwrap();
            assert!(exact >= f64::powi(o, 7 * m as i32) * (1.0 - 1e-12));
        }
        let closed = outage_ht(0.1, 1, 2, 3);
        assert!(closed < 1e-11);
        assert!(oracle_outage_exact(0.1, 1, 2, 3).unwrap() > 1e-7);
    }

    #[test]
    fn peeling_dominates_chains() {
        for n in 1..=2 {
            let chain = FailureCounts::cached(n, DecodeRule::Chain).unwrap();
            let peel = FailureCounts::cached(n, DecodeRule::Peeling).unwrap();
            assert!(peel.total_failures() <= chain.total_failures());
            for o in [0.1, 0.4, 0.8] {
                assert!(peel.outage(o, 2, 2) <= chain.outage(o, 2, 2) + 1e-15);
            }
        }
        // n = 1: every peelable pattern within the window is a chain pattern
        let o = 0.45;
        let peel = oracle_outage_exact_with(DecodeRule::Peeling, o, 2, 1, 3).unwrap();
        assert!(peel <= outage_ht(o, 2, 1, 3) + 1e-15);
    }

    #[test]
    fn enumeration_bound() {
        assert!(matches!(
            oracle_outage_exact(0.5, 1, 4, 1),
            Err(Error::EnumerationBound { n: 4, max: 3 })
        ));
    }

    #[test]
    fn mc_matches_enumeration() {
        let est = oracle_outage_mc(0.5, 1, 1, 1, 200_000, 1).unwrap();
        assert!(est.agrees_with(0.2257080078125, 3.0), "{est:?}");
        let exact = oracle_outage_exact(0.3, 2, 2, 2).unwrap();
        let est = oracle_outage_mc(0.3, 2, 2, 2, 200_000, 2).unwrap();
        assert!(est.agrees_with(exact, 3.0), "{est:?} vs {exact}");
    }

    #[test]
    fn mc_degenerate_and_validation() {
        for seed in [0, 1, 99] {
            let est = oracle_outage_mc(1.0, 2, 1, 2, 10_000, seed).unwrap();
            assert_eq!(est.estimate, 1.0);
        }
        assert!(oracle_outage_mc(0.5, 1, 1, 1, 100, 0).is_err());
    }
}
