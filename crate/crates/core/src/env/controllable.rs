use std::cell::Cell;

use super::{DeterministicTask, Environment};
use crate::agent::Percept;
use crate::error::{Error, Result};
use crate::qsim::{
    build_oracle, OracleKind, OracleSpec, QuantumChannel, RewardTable, SearchOracle, C64,
};
use crate::rng::RngStream;
use crate::space::{decode, Spaces};

/// Which view of a controllable environment the agent is using.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnvMode {
    Classical,
    Oracle,
}

/// A deterministic game the agent can play classically or query as a
/// phase-flip oracle of its reward function.
///
/// Every oracle query, coherent or classical, is billed as one full game of
/// `M_max` interaction steps.
#[derive(Debug)]
pub struct ControllableEnv<T: DeterministicTask> {
    task: T,
    table: RewardTable,
    mode: EnvMode,
    oracle_calls: Cell<u64>,
    classical_steps: u64,
}

impl<T: DeterministicTask> Clone for ControllableEnv<T> {
    fn clone(&self) -> Self {
        Self {
            task: self.task.clone(),
            table: self.table.clone(),
            mode: self.mode,
            oracle_calls: Cell::new(self.oracle_calls.get()),
            classical_steps: self.classical_steps,
        }
    }
}

impl<T: DeterministicTask> ControllableEnv<T> {
    /// Wraps `task` after checking, exhaustively, that it is single-win and
    /// that its reward flag agrees with `reward_of`.
    pub fn new(task: T) -> Result<Self> {
        if !task.is_deterministic() {
            return Err(Error::NotOracularizable("environment is stochastic".into()));
        }
        let table = task
            .reward_table()
            .map_err(|e| Error::NotOracularizable(e.to_string()))?;
        let (n, m) = (task.spaces().num_actions(), task.spaces().epoch_len);
        for code in 0..table.num_items() {
            let ps = task.percepts_of(&decode(code, n, m))?;
            let rewards = ps.iter().filter(|p| p.reward).count();
            if rewards > 1 {
                return Err(Error::NotOracularizable(format!(
                    "sequence {code} is rewarded {rewards} times"
                )));
            }
            if ps.last().map(|p| p.reward) != Some(table.is_marked(code)) {
                return Err(Error::NotOracularizable(format!(
                    "sequence {code}: reward not on the final percept"
                )));
            }
        }
        Ok(Self {
            task,
            table,
            mode: EnvMode::Classical,
            oracle_calls: Cell::new(0),
            classical_steps: 0,
        })
    }

    pub fn task(&self) -> &T {
        &self.task
    }

    pub fn table(&self) -> &RewardTable {
        &self.table
    }

    pub fn mode(&self) -> EnvMode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: EnvMode) {
        if mode != self.mode {
            self.task.reset();
        }
        self.mode = mode;
    }

    /// The phase-flip oracle of the reward function.
    pub fn oracle(&self) -> Result<QuantumChannel> {
        build_oracle(&OracleSpec {
            kind: OracleKind::Phaseflip,
            table: self.table.clone(),
        })
    }

    pub fn epoch_len(&self) -> usize {
        self.task.spaces().epoch_len
    }

    pub fn oracle_calls(&self) -> u64 {
        self.oracle_calls.get()
    }

    pub fn classical_steps(&self) -> u64 {
        self.classical_steps
    }

    /// All interaction steps billed so far.
    pub fn billed_steps(&self) -> u64 {
        self.oracle_calls.get() * self.epoch_len() as u64 + self.classical_steps
    }

    fn bill_query(&self) {
        self.oracle_calls.set(self.oracle_calls.get() + 1);
    }
}

impl<T: DeterministicTask> Environment for ControllableEnv<T> {
    fn spaces(&self) -> &Spaces {
        self.task.spaces()
    }

    fn reset(&mut self) {
        self.task.reset();
    }

    fn respond(&mut self, action: usize, rng: &mut RngStream) -> Percept {
        self.classical_steps += 1;
        self.task.respond(action, rng)
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

impl<T: DeterministicTask> SearchOracle for ControllableEnv<T> {
    fn num_items(&self) -> usize {
        self.table.num_items()
    }

    fn query(&self, amps: &mut [C64], rng: &mut RngStream) {
        self.bill_query();
        self.table.query(amps, rng);
    }

    fn check(&self, item: usize) -> bool {
        self.bill_query();
        self.table.is_marked(item)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{MazeEnv, MazeSpec};
    use crate::qsim::StateVector;

    fn maze(m: usize) -> MazeEnv {
        MazeEnv::new(MazeSpec::line(2, m, m).unwrap()).unwrap()
    }

    #[test]
    fn classical_mode_is_a_pass_through() {
        let mut c = ControllableEnv::new(maze(3)).unwrap();
        let mut plain = maze(3);
        let mut r1 = RngStream::new(0, 0);
        let mut r2 = RngStream::new(0, 0);
        for i in 0..30 {
            let a = (i * 7 + i / 3) % 2;
            assert_eq!(c.respond(a, &mut r1), plain.respond(a, &mut r2));
        }
        assert_eq!(c.billed_steps(), 30);
    }

    #[test]
    fn oracle_view_flips_the_winner() {
        let mut c = ControllableEnv::new(maze(3)).unwrap();
        c.set_mode(EnvMode::Oracle);
        let o = c.oracle().unwrap();
        let mut rng = RngStream::new(0, 0);
        let win = crate::space::encode(&MazeSpec::line_winner(2, 3), 2);
        let s = StateVector::basis(o.input_layout().clone(), &[win]).unwrap();
        assert_eq!(
            o.apply_state(&s, &mut rng).unwrap().amps()[win],
            C64::new(-1.0, 0.0)
        );
        assert_eq!(
            o.table().fingerprint(),
            c.task().reward_table().unwrap().fingerprint()
        );
    }

    #[test]
    fn each_query_bills_a_game() {
        let c = ControllableEnv::new(maze(4)).unwrap();
        let mut amps = vec![C64::new(0.25, 0.0); 16];
        let mut rng = RngStream::new(0, 0);
        for _ in 0..5 {
            c.query(&mut amps, &mut rng);
        }
        c.check(3);
        assert_eq!(c.oracle_calls(), 6);
        assert_eq!(c.billed_steps(), 24);
    }

    /// Two-step game that rewards every step: not single-win.
    #[derive(Clone)]
    struct Generous(Spaces);

    impl Environment for Generous {
        fn spaces(&self) -> &Spaces {
            &self.0
        }
        fn reset(&mut self) {}
        fn respond(&mut self, _a: usize, _rng: &mut RngStream) -> Percept {
            Percept::new(1, true)
        }
        fn is_deterministic(&self) -> bool {
            true
        }
    }

    impl DeterministicTask for Generous {
        fn reward_of(&self, _a: &[usize]) -> Result<bool> {
            Ok(true)
        }
        fn percepts_of(&self, a: &[usize]) -> Result<Vec<Percept>> {
            Ok(vec![Percept::new(1, true); a.len()])
        }
    }

    #[test]
    fn multi_reward_games_are_not_oracularizable() {
        use crate::space::FiniteSpace;
        let spaces = Spaces::new(
            FiniteSpace::new("s", ["x"], true).unwrap(),
            FiniteSpace::indexed("a", 2).unwrap(),
            2,
        )
        .unwrap();
        assert!(matches!(
            ControllableEnv::new(Generous(spaces)),
            Err(Error::NotOracularizable(_))
        ));
    }
}
