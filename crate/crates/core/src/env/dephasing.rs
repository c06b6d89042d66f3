use super::{DeterministicTask, Environment};
use crate::agent::Percept;
use crate::error::Result;
use crate::qsim::{DensityOperator, RewardTable, SearchOracle, C64};
use crate::rng::RngStream;
use crate::space::Spaces;

/// A quantum extension of a deterministic game in which every environment
/// map is sandwiched between classical-basis measurements of the interface.
///
/// Classical inputs behave exactly like the wrapped game; superposed inputs
/// collapse to a classical mixture before and after the map.
#[derive(Clone, Debug)]
pub struct DephasingExtension<T: DeterministicTask> {
    task: T,
    table: RewardTable,
}

impl<T: DeterministicTask> DephasingExtension<T> {
    pub fn new(task: T) -> Result<Self> {
        let table = task.reward_table()?;
        Ok(Self { task, table })
    }

    pub fn table(&self) -> &RewardTable {
        &self.table
    }

    /// Exact action on a density operator over the action register `A`.
    pub fn apply_density(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        let before = rho.dephase("A")?;
        let mut m = before.matrix().clone();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if self.table.is_marked(i) != self.table.is_marked(j) {
                    m[(i, j)] = -m[(i, j)];
                }
            }
        }
        let phased = DensityOperator::new(rho.layout().clone(), m)?;
        phased.dephase("A")
    }
}

impl<T: DeterministicTask> Environment for DephasingExtension<T> {
    fn spaces(&self) -> &Spaces {
        self.task.spaces()
    }

    fn reset(&mut self) {
        self.task.reset();
    }

    fn respond(&mut self, action: usize, rng: &mut RngStream) -> Percept {
        self.task.respond(action, rng)
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

impl<T: DeterministicTask> SearchOracle for DephasingExtension<T> {
    fn num_items(&self) -> usize {
        self.table.num_items()
    }

    /// Measure, phase, measure: the state leaves as the measured basis state.
    fn query(&self, amps: &mut [C64], rng: &mut RngStream) {
        let probs: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
        let x = crate::qsim::sample_index(&probs, rng);
        amps.iter_mut().for_each(|a| *a = C64::new(0.0, 0.0));
        let sign = if self.table.is_marked(x) { -1.0 } else { 1.0 };
        amps[x] = C64::new(sign, 0.0);
    }

    fn check(&self, item: usize) -> bool {
        self.table.is_marked(item)
    }
}
