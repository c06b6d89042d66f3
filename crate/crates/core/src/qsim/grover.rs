use std::f64::consts::FRAC_PI_4;

use super::oracle::SearchOracle;
use super::state::sample;
use super::C64;
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Growth factor of the cutoff in the unknown-count schedule.
const CUTOFF_GROWTH: f64 = 6.0 / 5.0;

/// How much the searcher knows about the number of marked items.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WinnerCount {
    Known(u64),
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroverOutcome {
    /// Verified marked item, if any.
    pub found: Option<usize>,
    /// Coherent queries plus classical verification calls.
    pub queries: u64,
    pub succeeded: bool,
    /// Measure-and-verify rounds performed.
    pub rounds: u64,
}

/// `floor((π/4) / asin(√(W/N)))`.
pub fn grover_iterations(num_items: u64, winners: u64) -> u64 {
    assert!(winners > 0 && winners <= num_items);
    let theta = (winners as f64 / num_items as f64).sqrt().asin();
    (FRAC_PI_4 / theta).floor() as u64
}

/// `sin²((2j + 1)·asin(√(W/N)))` at the optimal `j`.
pub fn grover_success_probability(num_items: u64, winners: u64) -> f64 {
    let theta = (winners as f64 / num_items as f64).sqrt().asin();
    let j = grover_iterations(num_items, winners) as f64;
    ((2.0 * j + 1.0) * theta).sin().powi(2)
}

/// Inversion about the mean.
fn diffuse(amps: &mut [C64]) {
    let mean: C64 = amps.iter().sum::<C64>() / amps.len() as f64;
    for a in amps.iter_mut() {
        *a = mean * 2.0 - *a;
    }
}

/// Amplitudes after `iterations` rounds of diffusion ∘ oracle on the uniform state.
pub fn grover_state(oracle: &dyn SearchOracle, iterations: u64, rng: &mut RngStream) -> Vec<C64> {
    let n = oracle.num_items();
    let mut amps = vec![C64::new(1.0 / (n as f64).sqrt(), 0.0); n];
    for _ in 0..iterations {
        oracle.query(&mut amps, rng);
        diffuse(&mut amps);
    }
    amps
}

fn measure(amps: &[C64], rng: &mut RngStream) -> usize {
    let probs: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
    sample(&probs, rng)
}

/// Grover search with classical verification of every measured candidate.
///
/// With a known count each round runs the optimal number of iterations
/// (fewer if the budget is nearly spent). With an unknown count the
/// iteration number is drawn below an exponentially growing cutoff. Budget
/// exhaustion yields `succeeded = false` when winners are known to exist, and
/// `NoWinnerExists` otherwise.
pub fn grover_search(
    oracle: &dyn SearchOracle,
    winners: WinnerCount,
    max_queries: u64,
    rng: &mut RngStream,
) -> Result<GroverOutcome> {
    let n = oracle.num_items() as u64;
    let mut out = GroverOutcome {
        found: None,
        queries: 0,
        succeeded: false,
        rounds: 0,
    };
    if let WinnerCount::Known(0) = winners {
        return Err(Error::NoWinnerExists { queries: 0 });
    }
    let mut cutoff = 1.0f64;
    while out.queries < max_queries {
        let remaining = max_queries - out.queries;
        let planned = match winners {
            WinnerCount::Known(w) => grover_iterations(n, w.min(n)),
            WinnerCount::Unknown => rng.below(cutoff.ceil().max(1.0) as u64),
        };
        let iterations = planned.min(remaining - 1);
        let amps = grover_state(oracle, iterations, rng);
        let candidate = measure(&amps, rng);
        out.queries += iterations + 1;
        out.rounds += 1;
        if oracle.check(candidate) {
            out.found = Some(candidate);
            out.succeeded = true;
            return Ok(out);
        }
        cutoff = (cutoff * CUTOFF_GROWTH).min((n as f64).sqrt());
    }
    match winners {
        WinnerCount::Known(_) => Ok(out),
        WinnerCount::Unknown => Err(Error::NoWinnerExists {
            queries: out.queries,
        }),
    }
}

/// Probability mass on marked items.
pub fn winner_mass(oracle: &dyn SearchOracle, amps: &[C64]) -> f64 {
    amps.iter()
        .enumerate()
        .filter(|(i, _)| oracle.check(*i))
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::oracle::RewardTable;

    fn table(n: usize, winners: &[usize]) -> RewardTable {
        let mut marks = vec![false; n];
        for &w in winners {
            marks[w] = true;
        }
        let bits = n.trailing_zeros() as usize;
        RewardTable::new(2, bits, marks).unwrap()
    }

    #[test]
    fn iteration_counts() {
        assert_eq!(grover_iterations(4, 1), 1);
        assert_eq!(grover_iterations(16, 1), 3);
        assert_eq!(grover_iterations(1024, 1), 25);
        assert!((grover_success_probability(4, 1) - 1.0).abs() < 1e-12);
        assert!((grover_success_probability(16, 1) - 0.9613).abs() < 1e-4);
        assert!(grover_success_probability(1024, 1) >= 0.999);
    }

    #[test]
    fn simulated_mass_matches_formula() {
        let mut rng = RngStream::new(0, 0);
        for n in [4usize, 16, 64, 256, 1024] {
            for w in [1usize, 2, 4] {
                if w * 4 > n {
                    continue;
                }
                let winners: Vec<usize> = (0..w).map(|i| (i * 7 + 3) % n).collect();
                let t = table(n, &winners);
                let j = grover_iterations(n as u64, w as u64);
                let amps = grover_state(&t, j, &mut rng);
                let mass = winner_mass(&t, &amps);
                let want = grover_success_probability(n as u64, w as u64);
                assert!((mass - want).abs() < 1e-9, "N={n} W={w}: {mass} vs {want}");
            }
        }
    }

    #[test]
    fn sampled_success_at_sixteen() {
        let t = table(16, &[9]);
        let mut rng = RngStream::new(5, 0);
        let amps = grover_state(&t, 3, &mut rng);
        let draws = 100_000;
        let hits = (0..draws).filter(|_| measure(&amps, &mut rng) == 9).count();
        let p = hits as f64 / draws as f64;
        let sigma = (0.9613 * 0.0387 / draws as f64).sqrt();
        assert!((p - 0.961_319).abs() < 4.0 * sigma, "p = {p}");
    }

    #[test]
    fn search_finds_the_winner() {
        let t = table(256, &[77]);
        let mut rng = RngStream::new(1, 0);
        let out = grover_search(&t, WinnerCount::Known(1), 1000, &mut rng).unwrap();
        assert_eq!(out.found, Some(77));
        let out = grover_search(&t, WinnerCount::Unknown, 10_000, &mut rng).unwrap();
        assert_eq!(out.found, Some(77));
    }

    #[test]
    fn no_winner() {
        let t = table(16, &[]);
        let mut rng = RngStream::new(1, 0);
        assert!(matches!(
            grover_search(&t, WinnerCount::Unknown, 200, &mut rng),
            Err(Error::NoWinnerExists { .. })
        ));
        assert!(grover_search(&t, WinnerCount::Known(0), 200, &mut rng).is_err());
    }

    #[test]
    fn budget_is_respected() {
        let t = table(1024, &[1]);
        let mut rng = RngStream::new(2, 0);
        for seed in 0..20 {
            let mut r = RngStream::new(seed, 0);
            let out = grover_search(&t, WinnerCount::Known(1), 32, &mut r).unwrap();
            assert!(out.queries <= 32);
        }
        let out = grover_search(&t, WinnerCount::Known(1), 3, &mut rng).unwrap();
        assert!(out.queries <= 3);
    }
}
