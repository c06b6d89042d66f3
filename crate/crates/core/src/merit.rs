//! Figures of merit over histories.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::History;

/// Which merit to compute and over which entries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeritConfig {
    /// Half-open entry range `[start, end)`. `None` means every entry after
    /// the opening ε.
    pub window: Option<(usize, usize)>,
}

impl MeritConfig {
    pub fn window(start: usize, end: usize) -> Self {
        Self {
            window: Some((start, end)),
        }
    }
}

/// Rewards per entry over the configured window.
pub fn rate_merit(h: &History, cfg: &MeritConfig) -> Result<f64> {
    let (start, end) = cfg.window.unwrap_or((1, h.len()));
    if start >= end {
        return Err(Error::EmptyWindow { start, end });
    }
    if end > h.len() {
        return Err(Error::WindowOutOfRange {
            start,
            end,
            len: h.len(),
        });
    }
    let rewards = h.entries()[start..end]
        .iter()
        .filter(|e| e.reward())
        .count();
    Ok(rewards as f64 / (end - start) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::tests::epoch;
    use crate::history::Entry;
    use proptest::prelude::*;
    use std::sync::Arc;

    #[test]
    fn two_rewards_in_ten_entries() {
        // ε + 5 rounds = 11 entries; window excludes ε.
        let mut h = History::new();
        for i in 0..5 {
            h.push_action(Arc::from("0")).unwrap();
            h.push_percept(Arc::from("s"), i == 1 || i == 3).unwrap();
        }
        assert_eq!(rate_merit(&h, &MeritConfig::default()).unwrap(), 0.2);
    }

    #[test]
    fn failing_history_has_zero_rate() {
        let h = epoch(4, false).repeat(3).unwrap();
        assert_eq!(rate_merit(&h, &MeritConfig::default()).unwrap(), 0.0);
    }

    #[test]
    fn total_history_rate_is_one_per_epoch() {
        let m = 4;
        let tot = epoch(m, true).repeat(1 + 4).unwrap();
        assert_eq!(rate_merit(&tot, &MeritConfig::default()).unwrap(), 0.125);
    }

    #[test]
    fn bad_windows() {
        let h = epoch(2, true);
        assert!(matches!(
            rate_merit(&h, &MeritConfig::window(3, 3)),
            Err(Error::EmptyWindow { .. })
        ));
        assert!(matches!(
            rate_merit(&h, &MeritConfig::window(0, 99)),
            Err(Error::WindowOutOfRange { .. })
        ));
    }

    fn arb_history() -> impl Strategy<Value = History> {
        prop::collection::vec((0u8..3, 0u8..3, any::<bool>()), 0..30).prop_map(|steps| {
            let mut h = History::new();
            for (a, s, r) in steps {
                h.push_action(Arc::from(format!("a{a}"))).unwrap();
                h.push_percept(Arc::from(format!("s{s}")), r).unwrap();
            }
            h
        })
    }

    fn relabel(h: &History, shift: u8) -> History {
        History::from_entries(h.entries().iter().skip(1).map(|e| match e {
            Entry::Percept { label, reward } => Entry::Percept {
                label: Arc::from(format!("{label}#{shift}")),
                reward: *reward,
            },
            Entry::Action { label } => Entry::Action {
                label: Arc::from(format!("{label}@{shift}")),
            },
        }))
        .unwrap()
    }

    proptest! {
        #[test]
        fn rate_ignores_labels(h in arb_history(), shift in 0u8..10) {
            prop_assume!(h.len() > 1);
            let cfg = MeritConfig::default();
            prop_assert_eq!(rate_merit(&h, &cfg).unwrap(), rate_merit(&relabel(&h, shift), &cfg).unwrap());
        }

        #[test]
        fn reward_counts_add_under_concat(a in arb_history(), b in arb_history()) {
            let c = a.concat(&b).unwrap();
            prop_assert_eq!(c.len(), a.len() + b.len() - 1);
            prop_assert_eq!(c.rewards(), a.rewards() + b.rewards());
            if c.len() > 1 {
                let full = |h: &History| if h.len() > 1 {
                    rate_merit(h, &MeritConfig::default()).unwrap() * (h.len() - 1) as f64
                } else { 0.0 };
                prop_assert!((full(&c) - full(&a) - full(&b)).abs() < 1e-9);
            }
        }
    }
}
