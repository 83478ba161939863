//! Consumer outcome bookkeeping and equitability / inequality measures.
//!
//! A consumer's outcome is its T-period return: the horizon mid minus the
//! execution price for a buy, the reverse for a sell. Returns are binned on a
//! fixed grid and the equitability of a population is `1 - H_K / ln K`, where
//! `H_K` is the entropy of the empirical bin frequencies.

mod inequality;
mod returns;

pub use inequality::{generalized_entropy, gini, theil};
pub use returns::{t_period_return, BinSpec, ReturnLedger, ReturnSample};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("no samples to measure")]
    EmptyLedger,
    #[error("values have zero mean")]
    ZeroMean,
    #[error("generalized entropy with alpha={alpha} is undefined for value {value}")]
    DomainError { alpha: f64, value: f64 },
    #[error("bin edges must be finite and strictly increasing")]
    InvalidBins,
}

/// `1 - H_K / ln K` for per-bin counts, with `0 ln 0 = 0`. `K` is `counts.len()`.
pub fn entropy_equitability(counts: &[u64]) -> Result<f64, MetricsError> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(MetricsError::EmptyLedger);
    }
    let k = counts.len();
    if k < 2 {
        return Ok(1.0);
    }
    let n = total as f64;
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum();
    Ok((1.0 - h / (k as f64).ln()).clamp(0.0, 1.0))
}

/// Equitability of a possibly empty sample set, taking `H(empty) = 0`.
pub fn entropy_equitability_or_one(counts: &[u64]) -> f64 {
    entropy_equitability(counts).unwrap_or(1.0)
}

/// Incremental equitability reward for transition `t` (1-based).
///
/// Nonzero only when `t = mN + 1` for some `m >= 1`, where it is the change
/// in equitability between the samples accumulated by step `mN` and those
/// accumulated by step `(m-1)N`. `ledger_len_at_step[j]` is the number of
/// completed samples in `ledger` when step `j` was observed.
pub fn equitability_reward(ledger: &ReturnLedger, interval: usize, t: usize, ledger_len_at_step: &[usize]) -> f64 {
    assert!(interval > 1, "reward interval must exceed one step");
    if t <= interval || !(t - 1).is_multiple_of(interval) {
        return 0.0;
    }
    let m = (t - 1) / interval;
    let now = ledger_len_at_step[m * interval];
    // The first interval is measured against the empty sample set.
    let before = if m == 1 { 0 } else { ledger_len_at_step[(m - 1) * interval] };
    entropy_equitability_or_one(&ledger.prefix_counts(now)) - entropy_equitability_or_one(&ledger.prefix_counts(before))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exchange::{MidPrice, Side};
    use crate::kernel::{AgentId, SimTime};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn extremes() {
        let mut one = [0u64; 12];
        one[4] = 9;
        assert_eq!(entropy_equitability(&one).unwrap(), 1.0);
        assert!(entropy_equitability(&[3u64; 12]).unwrap().abs() < 1e-15);
        assert_eq!(entropy_equitability(&[0u64; 12]), Err(MetricsError::EmptyLedger));
    }

    #[test]
    fn two_equal_bins_of_twelve() {
        let mut c = [0u64; 12];
        c[2] = 6;
        c[7] = 6;
        let expected = 1.0 - 2f64.ln() / 12f64.ln();
        assert!((entropy_equitability(&c).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.72106).abs() < 1e-5);
    }

    fn sample(r_half: i64, completed: u64) -> ReturnSample {
        ReturnSample::new(AgentId(0), Side::Bid, 20000.0, SimTime(0), MidPrice(20000 + r_half), SimTime(completed), 1)
    }

    #[test]
    fn reward_is_zero_off_boundaries() {
        let mut ledger = ReturnLedger::new(BinSpec::default());
        for i in 0..10 {
            ledger.push(sample(i * 40, i as u64));
        }
        let lens: Vec<usize> = (0..=30).map(|j| (j / 3).min(10)).collect();
        for t in [1, 2, 3, 4, 5, 7, 12, 15] {
            assert_eq!(equitability_reward(&ledger, 5, t, &lens), 0.0, "t={t}");
        }
    }

    #[test]
    fn first_interval_single_bin_gives_zero() {
        let mut ledger = ReturnLedger::new(BinSpec::default());
        for _ in 0..4 {
            ledger.push(sample(2, 0));
        }
        let lens = vec![4usize; 10];
        assert_eq!(equitability_reward(&ledger, 3, 4, &lens), 0.0);
    }

    /// Direct end-of-period computation: -H(all samples) / ln K.
    fn direct_final(ledger: &ReturnLedger, n: usize) -> f64 {
        let counts = ledger.prefix_counts(n);
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return 0.0;
        }
        let h: f64 = counts.iter().filter(|&&c| c > 0).map(|&c| c as f64 / total as f64).map(|p| -p * p.ln()).sum();
        -h / (counts.len() as f64).ln()
    }

    #[test]
    fn rewards_telescope_to_final_entropy() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let steps = rng.random_range(20..200usize);
            let interval = rng.random_range(2..15usize);
            let mut ledger = ReturnLedger::new(BinSpec::default());
            let mut lens = Vec::with_capacity(steps + 1);
            for _ in 0..=steps {
                if rng.random_bool(0.4) {
                    let r = rng.random_range(-300_000i64..300_000) / 10i64.pow(rng.random_range(0..5));
                    ledger.push(sample(r, 0));
                }
                lens.push(ledger.len());
            }
            let total: f64 = (1..=steps).map(|t| equitability_reward(&ledger, interval, t, &lens)).sum();
            let last_m = (steps - 1) / interval;
            let expected = if last_m == 0 { 0.0 } else { direct_final(&ledger, lens[last_m * interval]) };
            assert!((total - expected).abs() < 1e-12, "{total} vs {expected}");
        }
    }

    proptest! {
        #[test]
        fn bounded_and_permutation_invariant(mut counts in prop::collection::vec(0u64..50, 12), rot in 0usize..12) {
            prop_assume!(counts.iter().sum::<u64>() > 0);
            let v = entropy_equitability(&counts).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
            counts.rotate_left(rot);
            prop_assert!((entropy_equitability(&counts).unwrap() - v).abs() < 1e-12);
        }
    }
}
