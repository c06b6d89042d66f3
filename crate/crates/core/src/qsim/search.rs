use super::grover::{grover_search, WinnerCount};
use super::oracle::RewardTable;
use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaxRewardOutcome {
    /// Largest threshold with a verified witness (0 when none was found).
    pub value: u64,
    /// Sequence reaching `value`, if any probe succeeded.
    pub witness: Option<usize>,
    pub probes: u32,
    pub queries: u64,
}

/// Binary search for the largest achievable cumulative reward.
///
/// `family(θ)` marks the sequences whose cumulative reward is at least `θ`.
/// Each probe is one unknown-count Grover search with `queries_per_probe`
/// budget; a failed probe counts as "no witness".
pub fn max_reward_search(
    family: &dyn Fn(u64) -> RewardTable,
    reward_bound: u64,
    queries_per_probe: u64,
    rng: &mut RngStream,
) -> Result<MaxRewardOutcome> {
    let mut out = MaxRewardOutcome {
        value: 0,
        witness: None,
        probes: 0,
        queries: 0,
    };
    let (mut lo, mut hi) = (0u64, reward_bound);
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        let oracle = family(mid);
        out.probes += 1;
        match grover_search(&oracle, WinnerCount::Unknown, queries_per_probe, rng) {
            Ok(found) => {
                out.queries += found.queries;
                lo = mid;
                out.value = mid;
                out.witness = found.found;
            }
            Err(Error::NoWinnerExists { queries }) => {
                out.queries += queries;
                hi = mid - 1;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Cumulative reward per 3-step binary sequence: number of 1-actions,
    /// except that only sequence 111 reaches 3.
    fn rewards(code: usize) -> u64 {
        if code == 7 {
            3
        } else {
            (code.count_ones() as u64).min(2)
        }
    }

    fn family(theta: u64) -> RewardTable {
        RewardTable::from_fn(2, 3, |a| {
            let code = a.iter().fold(0, |acc, d| acc * 2 + d);
            rewards(code) >= theta
        })
        .unwrap()
    }

    #[test]
    fn finds_the_maximum_in_logarithmically_many_probes() {
        let mut rng = RngStream::new(8, 0);
        let out = max_reward_search(&family, 4, 400, &mut rng).unwrap();
        assert_eq!(out.value, 3);
        assert_eq!(out.witness, Some(7));
        assert!(out.probes <= 3);
    }

    #[test]
    fn all_zero_rewards_give_no_witness() {
        let zero = |_theta: u64| RewardTable::new(2, 3, vec![false; 8]).unwrap();
        let mut rng = RngStream::new(8, 0);
        let out = max_reward_search(&zero, 4, 100, &mut rng).unwrap();
        assert_eq!(out.value, 0);
        assert_eq!(out.witness, None);
    }

    #[test]
    fn marked_sets_shrink_with_threshold() {
        let sizes: Vec<usize> = (0..5).map(|t| family(t).num_winners()).collect();
        assert!(sizes.windows(2).all(|w| w[0] >= w[1]), "{sizes:?}");
    }
}
