//! The synchronous interaction engine.

use serde::Serialize;

use crate::agent::{Agent, Percept};
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::history::History;
use crate::qagent::train_by_postselection;
use crate::rng::RngStream;

/// An agent and an environment mid-interaction.
///
/// `pending` is the percept the agent has not yet acted on.
pub struct Session<A, E> {
    pub agent: A,
    pub env: E,
    pending: Percept,
    steps: u64,
}

impl<A: Agent, E: Environment> Session<A, E> {
    /// Starts a fresh interaction: the environment opens a new epoch and
    /// emits ε. The agent is not reset.
    pub fn new(agent: A, env: E) -> Result<Self> {
        Self::with_pending(agent, env, Percept::EMPTY)
    }

    /// Continues from `pending`, e.g. the last percept of a conditioning history.
    pub fn with_pending(agent: A, mut env: E, pending: Percept) -> Result<Self> {
        agent.spaces().check_compatible(env.spaces())?;
        env.reset();
        Ok(Self {
            agent,
            env,
            pending,
            steps: 0,
        })
    }

    /// One action/percept round.
    pub fn step(&mut self, rng: &mut RngStream) -> (usize, Percept) {
        let a = self.agent.act(self.pending, rng);
        let p = self.env.respond(a, rng);
        self.pending = p;
        self.steps += 1;
        (a, p)
    }

    /// One full epoch; returns whether it was rewarded.
    pub fn play_game(&mut self, rng: &mut RngStream) -> bool {
        let m = self.env.spaces().epoch_len;
        let mut won = false;
        for _ in 0..m {
            won |= self.step(rng).1.reward;
        }
        won
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn pending(&self) -> Percept {
        self.pending
    }

    pub fn into_parts(self) -> (A, E) {
        (self.agent, self.env)
    }
}

/// `steps` rounds of interaction from a fresh environment epoch.
pub fn interact<A: Agent, E: Environment>(
    agent: &mut A,
    env: &mut E,
    steps: usize,
    rng: &mut RngStream,
) -> Result<History> {
    agent.spaces().check_compatible(env.spaces())?;
    env.reset();
    let spaces = agent.spaces().clone();
    let mut h = History::new();
    let mut percept = Percept::EMPTY;
    for _ in 0..steps {
        let a = agent.act(percept, rng);
        h.push_action(spaces.actions.label(a).clone())?;
        percept = env.respond(a, rng);
        h.push_percept(spaces.percepts.label(percept.index).clone(), percept.reward)?;
    }
    Ok(h)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct InteractionStats {
    pub games_played: u64,
    pub steps: u64,
    /// 1-based index of the first rewarded game.
    pub first_win_game: Option<u64>,
    pub rewards: u64,
    /// `(step, cumulative rate per entry)` at the end of each game.
    pub rate_trace: Vec<(u64, f64)>,
}

/// Plays `num_games` full epochs from a fresh environment epoch.
pub fn run_games<A: Agent, E: Environment>(
    agent: &mut A,
    env: &mut E,
    num_games: u64,
    rng: &mut RngStream,
) -> Result<InteractionStats> {
    agent.spaces().check_compatible(env.spaces())?;
    env.reset();
    let m = env.spaces().epoch_len as u64;
    let mut stats = InteractionStats::default();
    let mut percept = Percept::EMPTY;
    for g in 1..=num_games {
        let mut won = false;
        for _ in 0..m {
            let a = agent.act(percept, rng);
            percept = env.respond(a, rng);
            won |= percept.reward;
        }
        stats.games_played = g;
        stats.steps += m;
        if won {
            stats.rewards += 1;
            stats.first_win_game.get_or_insert(g);
        }
        stats
            .rate_trace
            .push((stats.steps, stats.rewards as f64 / (2 * stats.steps) as f64));
    }
    Ok(stats)
}

/// Games until the first reward, capped at `max_games`.
pub fn games_to_first_win<A: Agent, E: Environment>(
    agent: &mut A,
    env: &mut E,
    max_games: u64,
    rng: &mut RngStream,
) -> Result<Option<u64>> {
    agent.spaces().check_compatible(env.spaces())?;
    env.reset();
    let m = env.spaces().epoch_len;
    let mut percept = Percept::EMPTY;
    for g in 1..=max_games {
        let mut won = false;
        for _ in 0..m {
            let a = agent.act(percept, rng);
            percept = env.respond(a, rng);
            won |= percept.reward;
        }
        if won {
            return Ok(Some(g));
        }
    }
    Ok(None)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LuckProbe {
    pub rate_lucky: f64,
    pub rate_unlucky: f64,
    /// Standard error of `rate_lucky − rate_unlucky`.
    pub stderr: f64,
}

/// Compares the future rate of `A(h_lucky)` against `A(h_unlucky)`.
///
/// Each conditioned agent is obtained by post-selected replay of the history
/// from reset and then plays `eval_steps` rounds against a fresh environment.
#[allow(clippy::too_many_arguments)]
pub fn luck_favoring_probe<A, E>(
    agent_factory: &dyn Fn() -> A,
    env_factory: &dyn Fn() -> E,
    h_lucky: &History,
    h_unlucky: &History,
    eval_steps: u64,
    trials: u64,
    retry_budget: u64,
    rng: &mut RngStream,
) -> Result<LuckProbe>
where
    A: Agent,
    E: Environment,
{
    if !agent_factory().is_stochastic() {
        return Err(Error::BadHyperparameter(
            "luck-favoring probe needs an agent with full action support".into(),
        ));
    }
    if trials < 2 || eval_steps == 0 {
        return Err(Error::BadHyperparameter(
            "need >= 2 trials and >= 1 step".into(),
        ));
    }
    let sample = |h: &History, rng: &mut RngStream| -> Result<Vec<f64>> {
        (0..trials)
            .map(|_| {
                let cond = train_by_postselection(agent_factory(), h, 1, retry_budget, rng)
                    .map_err(|e| match e {
                        Error::RetryBudgetExhausted { budget } => {
                            Error::UnrealizableHistory { budget }
                        }
                        other => other,
                    })?;
                let mut s = Session::with_pending(cond.agent, env_factory(), cond.pending)?;
                let mut rewards = 0u64;
                for _ in 0..eval_steps {
                    rewards += u64::from(s.step(rng).1.reward);
                }
                Ok(rewards as f64 / (2 * eval_steps) as f64)
            })
            .collect()
    };
    let lucky = sample(h_lucky, rng)?;
    let unlucky = sample(h_unlucky, rng)?;
    let (ml, vl) = mean_var(&lucky);
    let (mu, vu) = mean_var(&unlucky);
    Ok(LuckProbe {
        rate_lucky: ml,
        rate_unlucky: mu,
        stderr: (vl / lucky.len() as f64 + vu / unlucky.len() as f64).sqrt(),
    })
}

pub(crate) fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::{PsLiteAgent, RurAgent, ScriptedAgent};
    use crate::env::{MazeEnv, MazeSpec};
    use crate::space::{FiniteSpace, Spaces};
    use proptest::prelude::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn maze(m: usize) -> MazeEnv {
        MazeEnv::new(MazeSpec::line(2, m, m).unwrap()).unwrap()
    }

    fn rur(env: &MazeEnv) -> RurAgent {
        RurAgent::new(env.spaces().clone())
    }

    #[test]
    fn zero_steps_is_just_epsilon() {
        let mut env = maze(2);
        let mut a = rur(&env);
        let h = interact(&mut a, &mut env, 0, &mut RngStream::new(0, 0)).unwrap();
        assert!(h.is_empty());
    }

    #[test]
    fn mismatched_spaces_are_rejected() {
        let mut env = maze(2);
        let other = Spaces::new(
            FiniteSpace::new("p", ["z"], true).unwrap(),
            FiniteSpace::indexed("a", 2).unwrap(),
            2,
        )
        .unwrap();
        let mut a = RurAgent::new(other);
        assert!(matches!(
            interact(&mut a, &mut env, 4, &mut RngStream::new(0, 0)),
            Err(Error::SpaceMismatch(_))
        ));
    }

    #[test]
    fn first_epoch_win_rate_is_a_quarter() {
        let trials = 20_000;
        let mut wins = 0;
        for s in 0..trials {
            let mut env = maze(2);
            let mut a = rur(&env);
            let h = interact(&mut a, &mut env, 2, &mut RngStream::new(1, s)).unwrap();
            wins += h.rewards();
        }
        let p = wins as f64 / trials as f64;
        let sigma = (0.25 * 0.75 / trials as f64).sqrt();
        assert!((p - 0.25).abs() < 3.0 * sigma, "p = {p}");
    }

    #[test]
    fn rur_replays_after_first_win() {
        let mut env = maze(3);
        let mut a = rur(&env);
        let stats = run_games(&mut a, &mut env, 200, &mut RngStream::new(4, 0)).unwrap();
        let first = stats.first_win_game.expect("wins within 200 games");
        assert_eq!(stats.rewards, stats.games_played - first + 1);
        // After the first win every epoch of 2M entries carries one reward.
        assert!(stats.games_played - first > 0);
    }

    #[test]
    fn zero_games_gives_empty_stats() {
        let mut env = maze(3);
        let mut a = rur(&env);
        let s = run_games(&mut a, &mut env, 0, &mut RngStream::new(0, 0)).unwrap();
        assert_eq!(s, InteractionStats::default());
    }

    #[test]
    fn pre_reward_sequences_are_uniform() {
        // n=2, M=3: the first epoch's action sequence is uniform over 8.
        let mut counts = [0usize; 8];
        let draws = 10_000;
        for s in 0..draws {
            let mut env = maze(3);
            let mut a = rur(&env);
            let h = interact(&mut a, &mut env, 3, &mut RngStream::new(2, s)).unwrap();
            let code = h
                .actions()
                .fold(0, |acc, l| acc * 2 + l.parse::<usize>().unwrap());
            counts[code] += 1;
        }
        let e = draws as f64 / 8.0;
        let chi: f64 = counts.iter().map(|c| (*c as f64 - e).powi(2) / e).sum();
        let p = 1.0 - ChiSquared::new(7.0).unwrap().cdf(chi);
        assert!(p > 0.01, "p = {p}");
    }

    #[test]
    fn mean_epochs_to_first_win_is_sixteen() {
        let trials = 2000;
        let total: u64 = (0..trials)
            .map(|s| {
                let mut env = maze(4);
                let mut a = rur(&env);
                games_to_first_win(&mut a, &mut env, 100_000, &mut RngStream::new(3, s))
                    .unwrap()
                    .unwrap()
            })
            .sum();
        let mean = total as f64 / trials as f64;
        assert!((mean - 16.0).abs() < 1.6, "mean = {mean}");
    }

    #[test]
    fn first_win_is_geometric() {
        // Chi-square against geometric(1/16) over bins 1..=40 plus a tail.
        let trials = 2000u64;
        let bins = 40usize;
        let mut counts = vec![0usize; bins + 1];
        for s in 0..trials {
            let mut env = maze(4);
            let mut a = rur(&env);
            let g = run_games(&mut a, &mut env, 100, &mut RngStream::new(6, s))
                .unwrap()
                .first_win_game
                .unwrap_or(u64::MAX);
            counts[(g as usize).min(bins + 1) - 1] += 1;
        }
        let q: f64 = 15.0 / 16.0;
        let mut expected: Vec<f64> = (0..bins).map(|k| q.powi(k as i32) / 16.0).collect();
        expected.push(q.powi(bins as i32));
        // Merge into bins of expected count >= 5.
        let (mut chi, mut dof, mut acc_o, mut acc_e) = (0.0f64, 0usize, 0.0f64, 0.0f64);
        for (o, e) in counts.iter().zip(&expected) {
            acc_o += *o as f64;
            acc_e += e * trials as f64;
            if acc_e >= 5.0 {
                chi += (acc_o - acc_e).powi(2) / acc_e;
                dof += 1;
                acc_o = 0.0;
                acc_e = 0.0;
            }
        }
        let p = 1.0 - ChiSquared::new((dof - 1) as f64).unwrap().cdf(chi);
        assert!(p > 0.01, "p = {p}");
    }

    fn epoch(spaces: &Spaces, actions: &[usize], env: &MazeEnv) -> History {
        let mut h = History::new();
        let ps = crate::env::DeterministicTask::percepts_of(env, actions).unwrap();
        for (a, p) in actions.iter().zip(ps) {
            h.push_action(spaces.actions.label(*a).clone()).unwrap();
            h.push_percept(spaces.percepts.label(p.index).clone(), p.reward)
                .unwrap();
        }
        h
    }

    #[test]
    fn rur_is_luck_favoring() {
        let m = 4;
        let env = maze(m);
        let spaces = env.spaces().clone();
        let lucky = epoch(&spaces, &MazeSpec::line_winner(2, m), &env);
        let unlucky = epoch(&spaces, &[0; 4], &env);
        let probe = luck_favoring_probe(
            &|| RurAgent::new(spaces.clone()),
            &|| maze(m),
            &lucky,
            &unlucky,
            40,
            500,
            1_000_000,
            &mut RngStream::new(5, 0),
        )
        .unwrap();
        assert_eq!(probe.rate_lucky, 1.0 / (2 * m) as f64);
        assert!(probe.rate_unlucky + 3.0 * probe.stderr < probe.rate_lucky);
        let same = luck_favoring_probe(
            &|| RurAgent::new(spaces.clone()),
            &|| maze(m),
            &unlucky,
            &unlucky,
            40,
            500,
            1_000_000,
            &mut RngStream::new(6, 0),
        )
        .unwrap();
        assert!((same.rate_lucky - same.rate_unlucky).abs() <= 3.0 * same.stderr);
    }

    #[test]
    fn ps_lite_is_luck_favoring() {
        let m = 4;
        let env = maze(m);
        let spaces = env.spaces().clone();
        let lucky = epoch(&spaces, &MazeSpec::line_winner(2, m), &env);
        let unlucky = epoch(&spaces, &[0; 4], &env);
        let probe = luck_favoring_probe(
            &|| PsLiteAgent::new(spaces.clone(), 1.0, 0.0).unwrap(),
            &|| maze(m),
            &lucky,
            &unlucky,
            40,
            500,
            1_000_000,
            &mut RngStream::new(7, 0),
        )
        .unwrap();
        assert!(probe.rate_lucky - probe.rate_unlucky > -3.0 * probe.stderr);
        assert!(probe.rate_lucky > probe.rate_unlucky);
    }

    #[test]
    fn deterministic_agents_are_rejected_by_the_probe() {
        let env = maze(2);
        let spaces = env.spaces().clone();
        let h = History::new();
        let r = luck_favoring_probe(
            &|| ScriptedAgent::new(spaces.clone(), vec![0]),
            &|| maze(2),
            &h,
            &h,
            4,
            4,
            10,
            &mut RngStream::new(0, 0),
        );
        assert!(matches!(r, Err(Error::BadHyperparameter(_))));
    }

    #[test]
    fn unrealizable_history_is_reported() {
        let env = maze(2);
        let spaces = env.spaces().clone();
        let mut h = History::new();
        h.push_action("7".into()).unwrap();
        h.push_percept(spaces.percepts.label(1).clone(), false)
            .unwrap();
        let r = luck_favoring_probe(
            &|| RurAgent::new(spaces.clone()),
            &|| maze(2),
            &h,
            &h,
            4,
            2,
            50,
            &mut RngStream::new(0, 0),
        );
        assert!(matches!(r, Err(Error::UnrealizableHistory { budget: 50 })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn histories_alternate_and_replay(seed in any::<u64>(), m in 1usize..5, steps in 0usize..40, glow in 0.1f64..5.0) {
            let env0 = maze(m);
            let spaces = env0.spaces().clone();
            let run = |seed: u64| {
                let mut env = maze(m);
                let mut a = PsLiteAgent::new(spaces.clone(), glow, 0.1).unwrap();
                interact(&mut a, &mut env, steps, &mut RngStream::new(seed, 0)).unwrap()
            };
            let h = run(seed);
            prop_assert_eq!(h.len(), 2 * steps + 1);
            h.validate(&spaces).unwrap();
            for (i, e) in h.entries().iter().enumerate() {
                prop_assert_eq!(e.is_percept(), i % 2 == 0);
            }
            prop_assert_eq!(h, run(seed));
        }
    }
}
