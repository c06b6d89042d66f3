//! Executable checks of the tester lemmas on small tri-register scenarios.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use super::{
    apply_tester, classicality_check, dephase_interface, HistoryDistribution, TesterPolicy,
    TesterRecord, CLASSICAL_TOL,
};
use crate::agent::RurAgent;
use crate::env::{DephasingExtension, Environment, MazeEnv, MazeSpec};
use crate::error::{Error, Result};
use crate::interaction::games_to_first_win;
use crate::qsim::{
    grover_search, sample_index, DensityOperator, Layout, Register, StateVector, WinnerCount, C64,
};
use crate::rng::RngStream;
use crate::space::FiniteSpace;

const AGENT: &str = "RA";
const INTERFACE: &str = "RC";
const ENV: &str = "RE";

const MAX_INTERFACE: usize = 4;
const MAX_ROUNDS: usize = 4;
const MAX_DIM: usize = 64;

/// Probability below which a branch of the exact history tree is dropped.
const BRANCH_CUTOFF: f64 = 1e-14;

/// Significance level of the two-sample test in the dephasing check.
const KS_ALPHA: f64 = 0.01;

/// Agent memory, interface and environment memory, with per-round maps.
///
/// Each round applies the agent map on `(RA, RC)`, then the environment map
/// on `(RC, RE)`; the interface is tested after each map.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub initial: DensityOperator,
    pub agent_maps: Vec<DMatrix<C64>>,
    pub env_maps: Vec<DMatrix<C64>>,
}

/// Input of [`lemma_check`].
#[derive(Clone, Debug)]
pub enum LemmaScenario {
    Interaction(Scenario),
    /// Grover search against a dephasing extension of a line maze.
    Search {
        epoch_len: usize,
        trials: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaReport {
    pub lemma: u8,
    pub scenario: String,
    pub metric: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn permutation(d: usize, f: impl Fn(usize) -> usize) -> DMatrix<C64> {
    let mut u = DMatrix::from_element(d, d, c(0.0));
    for i in 0..d {
        u[(f(i), i)] = c(1.0);
    }
    u
}

fn interface_space() -> FiniteSpace {
    FiniteSpace::new(INTERFACE, ["s0", "s1", "a0", "a1"], false).expect("distinct labels")
}

fn tri_layout() -> Layout {
    Layout::new(vec![
        Register::indexed(AGENT, 2),
        Register::new(INTERFACE, interface_space()),
        Register::indexed(ENV, 2),
    ])
    .expect("small layout")
}

/// Agent with memory bit `m` answers percept `s_j` with action `a_(m⊕j)`.
fn classical_agent_map() -> DMatrix<C64> {
    // Index m·4 + c; c: s0, s1, a0, a1.
    permutation(8, |i| {
        let (m, c) = (i / 4, i % 4);
        let c2 = match c {
            0 | 1 => 2 + (m ^ c),
            _ => m ^ (c - 2),
        };
        m * 4 + c2
    })
}

/// Action `a_j` becomes percept `s_j` and toggles the memory bit when `j = 1`.
fn classical_env_map() -> DMatrix<C64> {
    // Index c·2 + e.
    permutation(8, |i| {
        let (c, e) = (i / 2, i % 2);
        let (c2, e2) = if c >= 2 {
            (c - 2, e ^ (c - 2))
        } else {
            (c + 2, e ^ c)
        };
        c2 * 2 + e2
    })
}

/// Hadamard on the action labels of the interface.
fn action_hadamard() -> DMatrix<C64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut u = DMatrix::identity(8, 8);
    for m in 0..2 {
        let (x, y) = (m * 4 + 2, m * 4 + 3);
        u[(x, x)] = c(h);
        u[(x, y)] = c(h);
        u[(y, x)] = c(h);
        u[(y, y)] = c(-h);
    }
    u
}

fn basis_density(layout: &Layout, digits: &[usize]) -> DensityOperator {
    StateVector::basis(layout.clone(), digits)
        .expect("valid digits")
        .to_density()
}

impl Scenario {
    pub fn new(
        name: &str,
        initial: DensityOperator,
        agent_maps: Vec<DMatrix<C64>>,
        env_maps: Vec<DMatrix<C64>>,
    ) -> Result<Self> {
        let names: Vec<&str> = initial
            .layout()
            .registers()
            .iter()
            .map(|r| r.name.as_str())
            .collect();
        if names != [AGENT, INTERFACE, ENV] {
            return Err(Error::LayoutMismatch(format!(
                "scenario registers {names:?}"
            )));
        }
        let dims = initial.layout().dims();
        let rounds = agent_maps.len();
        if dims[1] > MAX_INTERFACE || rounds > MAX_ROUNDS || initial.layout().total() > MAX_DIM {
            return Err(Error::ScenarioTooLarge(format!(
                "interface {}, {rounds} rounds, dimension {}",
                dims[1],
                initial.layout().total()
            )));
        }
        if rounds == 0 || env_maps.len() != rounds {
            return Err(Error::LayoutMismatch(
                "one agent and one environment map per round".into(),
            ));
        }
        let (da, dc) = (dims[0] * dims[1], dims[1] * dims[2]);
        if agent_maps
            .iter()
            .any(|u| u.nrows() != da || u.ncols() != da)
            || env_maps.iter().any(|u| u.nrows() != dc || u.ncols() != dc)
        {
            return Err(Error::LayoutMismatch("map dimensions".into()));
        }
        Ok(Self {
            name: name.to_string(),
            initial,
            agent_maps,
            env_maps,
        })
    }

    /// Permutation maps from a classical basis state: a classical pair.
    pub fn scripted_classical(rounds: usize) -> Result<Self> {
        let layout = tri_layout();
        Self::new(
            "scripted-classical",
            basis_density(&layout, &[1, 0, 0]),
            vec![classical_agent_map(); rounds],
            vec![classical_env_map(); rounds],
        )
    }

    /// The classical pair, but the agent emits its action in superposition.
    pub fn superposition_agent(rounds: usize) -> Result<Self> {
        let layout = tri_layout();
        let agent = action_hadamard() * classical_agent_map();
        Self::new(
            "superposition-agent",
            basis_density(&layout, &[0, 0, 0]),
            vec![agent; rounds],
            vec![classical_env_map(); rounds],
        )
    }

    /// The classical maps with the agent memory starting in `|+⟩`.
    pub fn coherent_memory(rounds: usize) -> Result<Self> {
        let layout = tri_layout();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = StateVector::product(
            layout,
            &[
                vec![c(h), c(h)],
                vec![c(1.0), c(0.0), c(0.0), c(0.0)],
                vec![c(1.0), c(0.0)],
            ],
        )?
        .to_density();
        Self::new(
            "coherent-memory",
            plus,
            vec![classical_agent_map(); rounds],
            vec![classical_env_map(); rounds],
        )
    }

    pub fn rounds(&self) -> usize {
        self.agent_maps.len()
    }

    /// Applies map `k` (agent maps at even `k`, environment maps at odd).
    fn apply(&self, rho: &DensityOperator, k: usize) -> Result<DensityOperator> {
        if k.is_multiple_of(2) {
            rho.apply_on(&[AGENT, INTERFACE], &self.agent_maps[k / 2])
        } else {
            rho.apply_on(&[INTERFACE, ENV], &self.env_maps[k / 2])
        }
    }

    fn num_maps(&self) -> usize {
        2 * self.rounds()
    }

    /// Joint states after each map, with or without the averaged tester.
    pub fn evolve(&self, tested: bool) -> Result<Vec<DensityOperator>> {
        let mut rho = self.initial.clone();
        let mut out = Vec::with_capacity(self.num_maps());
        for k in 0..self.num_maps() {
            rho = self.apply(&rho, k)?;
            if tested {
                rho = dephase_interface(&rho, INTERFACE)?;
            }
            out.push(rho.clone());
        }
        Ok(out)
    }

    /// One run under the classical tester, measuring after every map.
    pub fn trajectory(&self, rng: &mut RngStream) -> Result<TesterRecord> {
        let mut rho = self.initial.clone();
        let mut rec = TesterRecord::new(TesterPolicy::Classical);
        for k in 0..self.num_maps() {
            rho = self.apply(&rho, k)?;
            let (post, entry) =
                apply_tester(&rho, TesterPolicy::Classical, k as u64 + 1, INTERFACE, rng)?;
            rho = post;
            rec.entries.extend(entry);
        }
        Ok(rec)
    }

    /// Exact distribution of tester records, read off the branch weights.
    pub fn exact_history(&self) -> Result<HistoryDistribution> {
        let labels = interface_space();
        let mut branches = vec![(Vec::<Arc<str>>::new(), 1.0, self.initial.clone())];
        for k in 0..self.num_maps() {
            let mut next = Vec::new();
            for (key, w, rho) in branches {
                let rho = self.apply(&rho, k)?;
                for (o, p) in rho
                    .register_probabilities(INTERFACE)?
                    .into_iter()
                    .enumerate()
                {
                    if p < BRANCH_CUTOFF {
                        continue;
                    }
                    let (_, post) = rho.project(INTERFACE, o)?;
                    let mut key = key.clone();
                    key.push(labels.label(o).clone());
                    next.push((key, w * p, post));
                }
            }
            branches = next;
        }
        let mut out = HistoryDistribution::default();
        for (key, w, _) in branches {
            *out.weights.entry(key).or_insert(0.0) += w;
        }
        Ok(out)
    }

    /// The classical simulation: agent and environment each keep a classical
    /// description of their own memory state and see only the interface label.
    pub fn classicalized(&self) -> Result<ClassicalizedPair> {
        let agent = self.initial.partial_trace(&[AGENT])?;
        let env = self.initial.partial_trace(&[ENV])?;
        let iface = self.initial.partial_trace(&[INTERFACE])?;
        let probs = iface.diagonal();
        let start = probs
            .iter()
            .position(|p| (p - 1.0).abs() <= CLASSICAL_TOL)
            .ok_or_else(|| Error::InvalidState("interface must start in a basis state".into()))?;
        let product = agent
            .tensor(&basis_density(iface.layout(), &[start]))?
            .tensor(&env)?;
        if product.trace_distance(&self.initial)? > CLASSICAL_TOL {
            return Err(Error::InvalidState("initial state is not a product".into()));
        }
        Ok(ClassicalizedPair {
            scenario: self.clone(),
            agent,
            env,
            start,
        })
    }
}

/// Classical descriptions of agent and environment memories.
pub struct ClassicalizedPair {
    scenario: Scenario,
    agent: DensityOperator,
    env: DensityOperator,
    start: usize,
}

impl ClassicalizedPair {
    /// Local state of the mover at map `k`, joined with interface label `c`.
    fn local(&self, memory: &DensityOperator, k: usize, c: usize) -> Result<DensityOperator> {
        let iface = Layout::new(vec![Register::new(INTERFACE, interface_space())])?;
        let label = basis_density(&iface, &[c]);
        let (joint, names, u) = if k.is_multiple_of(2) {
            (
                memory.tensor(&label)?,
                [AGENT, INTERFACE],
                &self.scenario.agent_maps[k / 2],
            )
        } else {
            (
                label.tensor(memory)?,
                [INTERFACE, ENV],
                &self.scenario.env_maps[k / 2],
            )
        };
        joint.apply_on(&names, u)
    }

    fn mover(k: usize) -> &'static str {
        if k.is_multiple_of(2) {
            AGENT
        } else {
            ENV
        }
    }

    pub fn trajectory(&self, rng: &mut RngStream) -> Result<TesterRecord> {
        let labels = interface_space();
        let (mut agent, mut env, mut c) = (self.agent.clone(), self.env.clone(), self.start);
        let mut rec = TesterRecord::new(TesterPolicy::Classical);
        for k in 0..self.scenario.num_maps() {
            let memory = if k.is_multiple_of(2) { &agent } else { &env };
            let joint = self.local(memory, k, c)?;
            let o = sample_index(&joint.register_probabilities(INTERFACE)?, rng);
            let (_, post) = joint.project(INTERFACE, o)?;
            let updated = post.partial_trace(&[Self::mover(k)])?;
            if k.is_multiple_of(2) {
                agent = updated;
            } else {
                env = updated;
            }
            c = o;
            rec.entries.push(super::RecordEntry {
                step: k as u64 + 1,
                label: labels.label(o).clone(),
                reward: None,
            });
        }
        Ok(rec)
    }

    pub fn exact_history(&self) -> Result<HistoryDistribution> {
        let labels = interface_space();
        let mut branches = vec![(
            Vec::<Arc<str>>::new(),
            1.0,
            self.agent.clone(),
            self.env.clone(),
            self.start,
        )];
        for k in 0..self.scenario.num_maps() {
            let mut next = Vec::new();
            for (key, w, agent, env, c) in branches {
                let memory = if k.is_multiple_of(2) { &agent } else { &env };
                let joint = self.local(memory, k, c)?;
                for (o, p) in joint
                    .register_probabilities(INTERFACE)?
                    .into_iter()
                    .enumerate()
                {
                    if p < BRANCH_CUTOFF {
                        continue;
                    }
                    let (_, post) = joint.project(INTERFACE, o)?;
                    let updated = post.partial_trace(&[Self::mover(k)])?;
                    let mut key = key.clone();
                    key.push(labels.label(o).clone());
                    let (a2, e2) = if k.is_multiple_of(2) {
                        (updated, env.clone())
                    } else {
                        (agent.clone(), updated)
                    };
                    next.push((key, w * p, a2, e2, o));
                }
            }
            branches = next;
        }
        let mut out = HistoryDistribution::default();
        for (key, w, ..) in branches {
            *out.weights.entry(key).or_insert(0.0) += w;
        }
        Ok(out)
    }
}

/// Two-sample Kolmogorov–Smirnov test: statistic and asymptotic p-value.
pub(crate) fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let en = (n * m / (n + m)).sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * d;
    (d, kolmogorov_survival(lambda))
}

/// `P(K > λ)` for the Kolmogorov distribution.
fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn report(
    lemma: u8,
    scenario: &str,
    metric: &str,
    value: f64,
    threshold: f64,
    pass: bool,
) -> LemmaReport {
    LemmaReport {
        lemma,
        scenario: scenario.to_string(),
        metric: metric.to_string(),
        value,
        threshold,
        pass,
    }
}

/// Seeds used by the trajectory comparison.
const LEMMA2_SEEDS: u64 = 200;

/// Runs one lemma check.
///
/// 1. The classical tester leaves the joint state unchanged at every step
///    exactly when every step passes the classicality check.
/// 2. The classical simulation produces the same tester records as the
///    quantum pair, seed for seed.
/// 3. Under the classical tester the quantum pair and its classical
///    simulation have the same exact history distribution.
/// 4. Against the dephasing extension, Grover rounds to the first win are
///    distributed like classical random-search games to the first win.
pub fn lemma_check(lemma: u8, scenario: &LemmaScenario, seed: u64) -> Result<LemmaReport> {
    match (lemma, scenario) {
        (1, LemmaScenario::Interaction(s)) => {
            let free = s.evolve(false)?;
            let tested = s.evolve(true)?;
            let mut distance: f64 = 0.0;
            for (a, b) in free.iter().zip(&tested) {
                distance = distance.max(a.trace_distance(b)?);
            }
            let mut classical = true;
            for rho in &free {
                classical &= classicality_check(rho, (AGENT, INTERFACE, ENV))?.is_classical;
            }
            let unchanged = distance <= CLASSICAL_TOL;
            Ok(report(
                1,
                &s.name,
                "max_trace_distance",
                distance,
                CLASSICAL_TOL,
                unchanged == classical,
            ))
        }
        (2, LemmaScenario::Interaction(s)) => {
            let sim = s.classicalized()?;
            let mut mismatches = 0u64;
            for trial in 0..LEMMA2_SEEDS {
                let q = s.trajectory(&mut RngStream::new(seed, trial))?;
                let c = sim.trajectory(&mut RngStream::new(seed, trial))?;
                mismatches += u64::from(q != c);
            }
            Ok(report(
                2,
                &s.name,
                "record_mismatches",
                mismatches as f64,
                0.0,
                mismatches == 0,
            ))
        }
        (3, LemmaScenario::Interaction(s)) => {
            let q = s.exact_history()?;
            let c = s.classicalized()?.exact_history()?;
            let tv = q.tv_distance(&c);
            let valid = (q.total() - 1.0).abs() <= CLASSICAL_TOL;
            Ok(report(
                3,
                &s.name,
                "history_trace_distance",
                tv,
                CLASSICAL_TOL,
                valid && tv <= CLASSICAL_TOL,
            ))
        }
        (4, LemmaScenario::Search { epoch_len, trials }) => {
            let task = MazeEnv::new(MazeSpec::line(2, *epoch_len, *epoch_len)?)?;
            let ext = DephasingExtension::new(task.clone())?;
            let mut quantum = Vec::with_capacity(*trials as usize);
            let mut classical = Vec::with_capacity(*trials as usize);
            for trial in 0..*trials {
                let mut rng = RngStream::new(seed, trial);
                let out = grover_search(&ext, WinnerCount::Known(1), u64::MAX, &mut rng)?;
                quantum.push(out.rounds as f64);
                let mut agent = RurAgent::new(task.spaces().clone());
                let games = games_to_first_win(&mut agent, &mut task.clone(), u64::MAX, &mut rng)?;
                classical.push(games.unwrap_or(u64::MAX) as f64);
            }
            let (_, p) = ks_two_sample(&quantum, &classical);
            let name = format!("dephased-search-N{}", 1u64 << epoch_len);
            Ok(report(4, &name, "ks_p_value", p, KS_ALPHA, p > KS_ALPHA))
        }
        (1..=4, _) => Err(Error::Config(format!(
            "lemma {lemma} needs a different scenario kind"
        ))),
        _ => Err(Error::Config(format!("no lemma {lemma}"))),
    }
}
