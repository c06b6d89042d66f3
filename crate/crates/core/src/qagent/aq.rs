use serde::Serialize;

use super::postselect::{train_by_postselection, DEFAULT_RETRY_BUDGET};
use crate::agent::{Agent, Percept};
use crate::env::{ControllableEnv, DeterministicTask, EnvMode, Environment};
use crate::error::{Error, Result};
use crate::history::History;
use crate::qsim::{grover_search, SearchOracle, WinnerCount, C64};
use crate::rng::RngStream;
use crate::space::{decode, Spaces};

/// Parameters of the quantum-enhanced construction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AqConfig {
    /// Confidence parameter; the search budget is `k·⌈√(n^M)⌉` games.
    pub k: u64,
    /// Copies of the winning epoch fed to post-selection.
    /// `None` means `1 + k·⌈√(n^M)⌉`.
    pub copies: Option<usize>,
    pub retry_budget: u64,
    /// Further searches for winners not found yet.
    pub extra_winners: usize,
}

impl AqConfig {
    pub fn new(k: u64) -> Self {
        Self {
            k,
            copies: None,
            retry_budget: DEFAULT_RETRY_BUDGET,
            extra_winners: 0,
        }
    }

    pub fn search_budget(&self, num_items: u64) -> u64 {
        self.k * ceil_sqrt(num_items)
    }

    pub fn copies_for(&self, num_items: u64) -> usize {
        self.copies
            .unwrap_or(1 + self.search_budget(num_items) as usize)
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::BadHyperparameter("k must be at least 1".into()));
        }
        if self.copies == Some(0) {
            return Err(Error::BadHyperparameter("copies must be at least 1".into()));
        }
        Ok(())
    }
}

/// Steps and register operations billed by a protocol.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ProtocolCost {
    pub oracle_games: u64,
    pub interaction_steps: u64,
    pub hijack_ops: u64,
    pub scavenge_ops: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AqStatus {
    Trained,
    /// The search budget ran out; the agent is the untrained original.
    GroverFailed,
}

/// The classical agent after quantum-assisted training.
///
/// Forwards every percept and action. Right after construction the inner
/// agent is owed the final percept of its training history, which replaces
/// the first percept it is shown.
#[derive(Clone, Debug)]
pub struct QuantumEnhancedAgent<A> {
    inner: A,
    trained: A,
    resume: Option<Percept>,
    pending: Option<Percept>,
    status: AqStatus,
    h_win: Option<History>,
    winners: Vec<usize>,
    queries_used: u64,
}

impl<A: Agent + Clone> QuantumEnhancedAgent<A> {
    pub fn status(&self) -> AqStatus {
        self.status
    }

    /// The harvested winning epoch, when the search succeeded.
    pub fn winning_history(&self) -> Option<&History> {
        self.h_win.as_ref()
    }

    /// Winning action sequences, as codes, in the order found.
    pub fn winners(&self) -> &[usize] {
        &self.winners
    }

    /// Oracle calls actually made, which may be fewer than billed.
    pub fn queries_used(&self) -> u64 {
        self.queries_used
    }

    pub fn inner(&self) -> &A {
        &self.inner
    }
}

impl<A: Agent + Clone> Agent for QuantumEnhancedAgent<A> {
    fn spaces(&self) -> &Spaces {
        self.inner.spaces()
    }

    /// Returns to the state right after construction.
    fn reset(&mut self) {
        self.inner = self.trained.clone();
        self.pending = self.resume;
    }

    fn act(&mut self, percept: Percept, rng: &mut RngStream) -> usize {
        let p = self.pending.take().unwrap_or(percept);
        self.inner.act(p, rng)
    }

    fn is_stochastic(&self) -> bool {
        self.inner.is_stochastic()
    }
}

/// Smallest `r` with `r² ≥ x`.
pub(crate) fn ceil_sqrt(x: u64) -> u64 {
    let mut r = (x as f64).sqrt() as u64;
    while r * r < x {
        r += 1;
    }
    while r > 0 && (r - 1) * (r - 1) >= x {
        r -= 1;
    }
    r
}

/// Oracle that undoes the marks of already found items.
struct Excluding<'a> {
    oracle: &'a dyn SearchOracle,
    found: &'a [usize],
}

impl SearchOracle for Excluding<'_> {
    fn num_items(&self) -> usize {
        self.oracle.num_items()
    }

    fn query(&self, amps: &mut [C64], rng: &mut RngStream) {
        self.oracle.query(amps, rng);
        for &f in self.found {
            amps[f] = -amps[f];
        }
    }

    fn check(&self, item: usize) -> bool {
        self.oracle.check(item) && !self.found.contains(&item)
    }
}

/// Builds the quantum-enhanced agent from a classical one.
///
/// Searches the oracle view of `env` for a rewarded epoch, replays it once
/// classically to collect its percepts, and post-selects a copy of `agent`
/// on that history. Each search bills its full budget of oracle games, so
/// the cost does not depend on when the winner turned up.
pub fn aq_construct<A, T>(
    agent: &A,
    env: &mut ControllableEnv<T>,
    cfg: &AqConfig,
    rng: &mut RngStream,
) -> Result<(QuantumEnhancedAgent<A>, ProtocolCost)>
where
    A: Agent + Clone,
    T: DeterministicTask,
{
    cfg.validate()?;
    agent.spaces().check_compatible(env.spaces())?;
    let total_winners = env.table().num_winners() as u64;
    if total_winners == 0 {
        return Err(Error::NoWinnerExists { queries: 0 });
    }
    let num_items = env.num_items() as u64;
    let budget = cfg.search_budget(num_items);
    let m = env.epoch_len();
    let n = env.spaces().num_actions();

    env.set_mode(EnvMode::Oracle);
    let mut winners = Vec::new();
    let mut queries_used = 0;
    let mut searches = 0u64;
    let rounds = 1 + cfg.extra_winners.min(total_winners as usize - 1);
    for _ in 0..rounds {
        let view = Excluding {
            oracle: &*env,
            found: &winners,
        };
        let left = total_winners - winners.len() as u64;
        let out = grover_search(&view, WinnerCount::Known(left), budget, rng)?;
        searches += 1;
        queries_used += out.queries;
        match out.found {
            Some(w) => winners.push(w),
            None => break,
        }
    }
    let mut cost = ProtocolCost {
        oracle_games: searches * budget,
        ..ProtocolCost::default()
    };
    cost.interaction_steps = cost.oracle_games * m as u64;
    env.set_mode(EnvMode::Classical);

    if winners.is_empty() {
        let untrained = QuantumEnhancedAgent {
            inner: agent.clone(),
            trained: agent.clone(),
            resume: None,
            pending: None,
            status: AqStatus::GroverFailed,
            h_win: None,
            winners,
            queries_used,
        };
        return Ok((untrained, cost));
    }

    // Harvest the percepts of the first winner with one classical epoch.
    // Later winners are kept for inspection only: a learner that replays
    // one winner could never reproduce a history alternating between them.
    let spaces = env.spaces().clone();
    let mut h_win = History::new();
    env.reset();
    for a in decode(winners[0], n, m) {
        h_win.push_action(spaces.actions.label(a).clone())?;
        let p = env.respond(a, rng);
        h_win.push_percept(spaces.percepts.label(p.index).clone(), p.reward)?;
    }
    cost.interaction_steps += m as u64;
    env.reset();

    let copies = cfg.copies_for(num_items);
    let trained = train_by_postselection(agent.clone(), &h_win, copies, cfg.retry_budget, rng)?;
    let aq = QuantumEnhancedAgent {
        inner: trained.agent.clone(),
        trained: trained.agent,
        resume: Some(trained.pending),
        pending: Some(trained.pending),
        status: AqStatus::Trained,
        h_win: Some(h_win),
        winners,
        queries_used,
    };
    Ok((aq, cost))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::RurAgent;
    use crate::env::{MazeEnv, MazeSpec};
    use crate::interaction::Session;
    use crate::space::encode;

    fn maze(m: usize, m_max: usize) -> ControllableEnv<MazeEnv> {
        ControllableEnv::new(MazeEnv::new(MazeSpec::line(2, m, m_max).unwrap()).unwrap()).unwrap()
    }

    #[test]
    fn ceil_sqrt_is_exact() {
        for x in 0..5000u64 {
            let r = ceil_sqrt(x);
            assert!(r * r >= x);
            assert!(r == 0 || (r - 1) * (r - 1) < x, "{x}");
        }
        assert_eq!(ceil_sqrt(1024), 32);
        assert_eq!(ceil_sqrt(1025), 33);
    }

    #[test]
    fn default_copies_follow_the_budget() {
        let cfg = AqConfig::new(5);
        assert_eq!(cfg.search_budget(1024), 160);
        assert_eq!(cfg.copies_for(1024), 161);
    }

    #[test]
    fn billing_covers_search_and_harvest() {
        let (m, k) = (6u64, 3u64);
        let mut env = maze(m as usize, m as usize);
        let agent = RurAgent::new(env.spaces().clone());
        let (aq, cost) = aq_construct(
            &agent,
            &mut env,
            &AqConfig::new(k),
            &mut RngStream::new(4, 0),
        )
        .unwrap();
        assert_eq!(aq.status(), AqStatus::Trained);
        assert_eq!(cost.oracle_games, k * 8);
        assert_eq!(cost.interaction_steps, k * 8 * m + m);
        assert!(env.oracle_calls() <= k * 8);
        assert_eq!(env.classical_steps(), m);
    }

    #[test]
    fn trained_rur_wins_every_game() {
        let m = 6;
        let mut env = maze(m, m);
        let agent = RurAgent::new(env.spaces().clone());
        let mut rng = RngStream::new(9, 0);
        let (aq, _) = aq_construct(&agent, &mut env, &AqConfig::new(2), &mut rng).unwrap();
        assert_eq!(aq.winners(), &[encode(&MazeSpec::line_winner(2, m), 2)]);
        assert_eq!(aq.winning_history().unwrap().len(), 2 * m + 1);
        let mut s = Session::new(aq, env).unwrap();
        for _ in 0..20 {
            assert!(s.play_game(&mut rng));
        }
    }

    #[test]
    fn reset_restores_the_trained_state() {
        let m = 4;
        let mut env = maze(m, m);
        let agent = RurAgent::new(env.spaces().clone());
        let mut rng = RngStream::new(10, 0);
        let (mut aq, _) = aq_construct(&agent, &mut env, &AqConfig::new(2), &mut rng).unwrap();
        aq.reset();
        let mut s = Session::new(aq, env).unwrap();
        assert!(s.play_game(&mut rng));
    }

    /// Two binary actions per epoch, never rewarded.
    #[derive(Clone)]
    struct Barren(Spaces);

    impl Barren {
        fn new() -> Self {
            let p = crate::space::FiniteSpace::new("percepts", ["x"], true).unwrap();
            let a = crate::space::FiniteSpace::indexed("actions", 2).unwrap();
            Barren(Spaces::new(p, a, 2).unwrap())
        }
    }

    impl Environment for Barren {
        fn spaces(&self) -> &Spaces {
            &self.0
        }
        fn reset(&mut self) {}
        fn respond(&mut self, _: usize, _: &mut RngStream) -> Percept {
            Percept::new(1, false)
        }
        fn is_deterministic(&self) -> bool {
            true
        }
    }

    impl DeterministicTask for Barren {
        fn reward_of(&self, _: &[usize]) -> Result<bool> {
            Ok(false)
        }
        fn percepts_of(&self, a: &[usize]) -> Result<Vec<Percept>> {
            Ok(vec![Percept::new(1, false); a.len()])
        }
    }

    #[test]
    fn no_reward_is_an_error() {
        let mut env = ControllableEnv::new(Barren::new()).unwrap();
        let agent = RurAgent::new(env.spaces().clone());
        let r = aq_construct(
            &agent,
            &mut env,
            &AqConfig::new(3),
            &mut RngStream::new(0, 0),
        );
        assert_eq!(r.unwrap_err(), Error::NoWinnerExists { queries: 0 });
        assert_eq!(env.oracle_calls(), 0);
    }

    #[test]
    fn extra_winners_are_distinct() {
        let mut env = maze(2, 3);
        let agent = RurAgent::new(env.spaces().clone());
        let mut cfg = AqConfig::new(4);
        cfg.extra_winners = 4;
        let (aq, cost) = aq_construct(&agent, &mut env, &cfg, &mut RngStream::new(1, 0)).unwrap();
        let mut w = aq.winners().to_vec();
        w.sort_unstable();
        w.dedup();
        assert_eq!(w.len(), aq.winners().len());
        assert!(w.iter().all(|&c| env.table().is_marked(c)));
        assert_eq!(cost.oracle_games % 12, 0);
        assert!(cost.oracle_games >= aq.winners().len() as u64 * 12);
    }

    #[test]
    fn zero_k_is_rejected() {
        let mut env = maze(3, 3);
        let agent = RurAgent::new(env.spaces().clone());
        let r = aq_construct(
            &agent,
            &mut env,
            &AqConfig::new(0),
            &mut RngStream::new(0, 0),
        );
        assert!(matches!(r, Err(Error::BadHyperparameter(_))));
    }
}
