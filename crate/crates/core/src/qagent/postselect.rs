use crate::agent::{Agent, Percept};
use crate::error::{Error, Result};
use crate::history::{Entry, History};
use crate::rng::RngStream;

/// Resets allowed before a target history is declared unreachable.
pub const DEFAULT_RETRY_BUDGET: u64 = 1_000_000;

/// An agent conditioned on a history, plus the history's last percept,
/// which the agent has not acted on yet.
#[derive(Clone, Debug)]
pub struct Conditioned<A> {
    pub agent: A,
    pub pending: Percept,
    pub resets: u64,
}

/// Replays `target` repeated `copies` times, resetting the agent whenever
/// its sampled action deviates, until one contiguous run reproduces the
/// whole repetition. Uses no interaction steps.
pub fn train_by_postselection<A: Agent>(
    mut agent: A,
    target: &History,
    copies: usize,
    retry_budget: u64,
    rng: &mut RngStream,
) -> Result<Conditioned<A>> {
    let spaces = agent.spaces().clone();
    // (percept shown, action expected) per round; unknown actions never match.
    let mut rounds = Vec::new();
    let mut shown = Percept::EMPTY;
    for e in target.entries().iter().skip(1) {
        match e {
            Entry::Action { label } => {
                let a = spaces.actions.index_of(label).unwrap_or(usize::MAX);
                rounds.push((shown, a));
            }
            Entry::Percept { label, reward } => {
                shown = Percept::new(spaces.percepts.index_of(label)?, *reward);
            }
        }
    }
    let last = shown;
    // Copies after the first start from the previous copy's last percept.
    let mut plan = Vec::with_capacity(rounds.len() * copies);
    for c in 0..copies {
        for (i, r) in rounds.iter().enumerate() {
            let p = if c > 0 && i == 0 { last } else { r.0 };
            plan.push((p, r.1));
        }
    }
    let mut resets = 0u64;
    loop {
        agent.reset();
        if plan.iter().all(|&(p, a)| agent.act(p, rng) == a) {
            return Ok(Conditioned {
                agent,
                pending: last,
                resets,
            });
        }
        resets += 1;
        if resets > retry_budget {
            return Err(Error::RetryBudgetExhausted {
                budget: retry_budget,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::{PsLiteAgent, RurAgent};
    use crate::env::{DeterministicTask, Environment, MazeEnv, MazeSpec};
    use crate::interaction::Session;

    fn win_history(env: &MazeEnv, m: usize) -> History {
        let s = env.spaces();
        let w = MazeSpec::line_winner(2, m);
        let ps = env.percepts_of(&w).unwrap();
        let mut h = History::new();
        for (a, p) in w.iter().zip(ps) {
            h.push_action(s.actions.label(*a).clone()).unwrap();
            h.push_percept(s.percepts.label(p.index).clone(), p.reward)
                .unwrap();
        }
        h
    }

    #[test]
    fn trained_rur_plays_the_winning_path() {
        let m = 4;
        let env = MazeEnv::new(MazeSpec::line(2, m, m).unwrap()).unwrap();
        let h = win_history(&env, m);
        let mut rng = RngStream::new(1, 0);
        let c = train_by_postselection(
            RurAgent::new(env.spaces().clone()),
            &h,
            3,
            DEFAULT_RETRY_BUDGET,
            &mut rng,
        )
        .unwrap();
        let mut s = Session::with_pending(c.agent, env, c.pending).unwrap();
        for _ in 0..10 {
            assert!(s.play_game(&mut rng));
        }
    }

    #[test]
    fn unrealizable_target_exhausts_the_budget() {
        let env = MazeEnv::new(MazeSpec::line(2, 2, 2).unwrap()).unwrap();
        let mut h = History::new();
        h.push_action("9".into()).unwrap();
        h.push_percept(env.spaces().percepts.label(1).clone(), false)
            .unwrap();
        let r = train_by_postselection(
            RurAgent::new(env.spaces().clone()),
            &h,
            1,
            100,
            &mut RngStream::new(0, 0),
        );
        assert_eq!(r.unwrap_err(), Error::RetryBudgetExhausted { budget: 100 });
    }

    #[test]
    fn trained_ps_lite_replays_more_often() {
        let m = 4;
        let env = MazeEnv::new(MazeSpec::line(2, m, m).unwrap()).unwrap();
        let h = win_history(&env, m);
        let spaces = env.spaces().clone();
        let trials = 500;
        let mut trained = Vec::new();
        let mut fresh = Vec::new();
        for seed in 0..trials {
            let mut rng = RngStream::new(2, seed);
            let c = train_by_postselection(
                PsLiteAgent::new(spaces.clone(), 1.0, 0.0).unwrap(),
                &h,
                5,
                DEFAULT_RETRY_BUDGET,
                &mut rng,
            )
            .unwrap();
            let mut s = Session::with_pending(c.agent, env.clone(), c.pending).unwrap();
            trained.push(f64::from(u8::from(s.play_game(&mut rng))));
            let mut s = Session::new(
                PsLiteAgent::new(spaces.clone(), 1.0, 0.0).unwrap(),
                env.clone(),
            )
            .unwrap();
            fresh.push(f64::from(u8::from(s.play_game(&mut rng))));
        }
        let (mt, vt) = crate::interaction::mean_var(&trained);
        let (mf, vf) = crate::interaction::mean_var(&fresh);
        let se = (vt / trials as f64 + vf / trials as f64).sqrt();
        assert!(mt - mf > 3.0 * se, "trained {mt} vs fresh {mf} (se {se})");
    }
}
