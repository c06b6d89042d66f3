//! Testers: measurements that copy the interface into a record.
//!
//! A classical tester copies every interface state into a fresh register
//! and never touches it again. Tracing that register out is a
//! classical-basis measurement, so the tester is implemented as
//! measure-and-log on the interface register.

mod lemma;

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::{Entry, History};
use crate::qsim::{sample_index, DensityOperator, Layout, Register, C64};
use crate::rng::RngStream;

pub use lemma::{lemma_check, LemmaReport, LemmaScenario, Scenario};

/// Threshold below which coherences and negativities count as zero.
pub const CLASSICAL_TOL: f64 = 1e-10;

/// Which interaction steps get tested. Steps count from 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TesterPolicy {
    None,
    Classical,
    /// Untested before `t_switch`, classical from then on.
    Sporadic {
        t_switch: u64,
    },
}

impl TesterPolicy {
    pub fn tests(&self, step: u64) -> bool {
        match self {
            TesterPolicy::None => false,
            TesterPolicy::Classical => true,
            TesterPolicy::Sporadic { t_switch } => step >= *t_switch,
        }
    }

    /// First tested step, if any.
    pub fn first_tested(&self) -> Option<u64> {
        match self {
            TesterPolicy::None => None,
            TesterPolicy::Classical => Some(0),
            TesterPolicy::Sporadic { t_switch } => Some(*t_switch),
        }
    }
}

/// One copied interface state.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct RecordEntry {
    pub step: u64,
    pub label: Arc<str>,
    /// Reward flag, for percepts read off a classical history.
    pub reward: Option<bool>,
}

/// Everything a tester copied during one run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct TesterRecord {
    /// Steps before this index were not tested.
    pub untested_prefix: u64,
    pub entries: Vec<RecordEntry>,
}

impl TesterRecord {
    pub fn new(policy: TesterPolicy) -> Self {
        Self {
            untested_prefix: policy.first_tested().unwrap_or(u64::MAX),
            entries: Vec::new(),
        }
    }

    /// What a tester following `policy` copies from a classical interaction.
    /// Entry `t` of `h` is step `t`; the opening ε is step 0.
    pub fn from_history(h: &History, policy: TesterPolicy) -> Self {
        let mut rec = Self::new(policy);
        for (t, e) in h.entries().iter().enumerate() {
            let step = t as u64;
            if !policy.tests(step) {
                continue;
            }
            rec.entries.push(match e {
                Entry::Action { label } => RecordEntry {
                    step,
                    label: label.clone(),
                    reward: None,
                },
                Entry::Percept { label, reward } => RecordEntry {
                    step,
                    label: label.clone(),
                    reward: Some(*reward),
                },
            });
        }
        rec
    }

    /// Rewards among the recorded percepts at steps in `[from, to)`.
    pub fn rewards_between(&self, from: u64, to: u64) -> u64 {
        self.entries
            .iter()
            .filter(|e| e.step >= from && e.step < to && e.reward == Some(true))
            .count() as u64
    }

    /// Recorded labels, the key of a history distribution.
    pub fn key(&self) -> Vec<Arc<str>> {
        self.entries.iter().map(|e| e.label.clone()).collect()
    }
}

/// Applies the tester at `step` to the interface register `interface`.
///
/// A tested step measures the interface in its classical basis, logs the
/// outcome and returns the post-measurement state; an untested step changes
/// nothing.
pub fn apply_tester(
    rho: &DensityOperator,
    policy: TesterPolicy,
    step: u64,
    interface: &str,
    rng: &mut RngStream,
) -> Result<(DensityOperator, Option<RecordEntry>)> {
    let reg = rho.layout().register(interface)?.clone();
    if !policy.tests(step) {
        return Ok((rho.clone(), None));
    }
    let probs = rho.register_probabilities(interface)?;
    let k = sample_index(&probs, rng);
    let (_, post) = rho.project(interface, k)?;
    let entry = RecordEntry {
        step,
        label: reg.space.label(k).clone(),
        reward: None,
    };
    Ok((post, Some(entry)))
}

/// The tester averaged over outcomes: the interface loses its coherences.
pub fn dephase_interface(rho: &DensityOperator, interface: &str) -> Result<DensityOperator> {
    rho.dephase(interface)
}

/// The tester as written: copy the interface into a fresh register with a
/// generalised CNOT, then trace the copy out.
pub fn copy_then_trace(rho: &DensityOperator, interface: &str) -> Result<DensityOperator> {
    let src = rho.layout().register(interface)?;
    let d = src.dim();
    let copy_reg = Register::new("__tester_copy", (*src.space).clone());
    let blank = {
        let mut m = DMatrix::from_element(d, d, C64::new(0.0, 0.0));
        m[(0, 0)] = C64::new(1.0, 0.0);
        DensityOperator::new(Layout::new(vec![copy_reg])?, m)?
    };
    let joint = rho.tensor(&blank)?;
    let mut cnot = DMatrix::from_element(d * d, d * d, C64::new(0.0, 0.0));
    for c in 0..d {
        for t in 0..d {
            cnot[(c * d + (t + c) % d, c * d + t)] = C64::new(1.0, 0.0);
        }
    }
    let copied = joint.apply_on(&[interface, "__tester_copy"], &cnot)?;
    let names: Vec<&str> = rho
        .layout()
        .registers()
        .iter()
        .map(|r| r.name.as_str())
        .collect();
    copied.partial_trace(&names)
}

/// A distribution over recorded histories.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HistoryDistribution {
    pub weights: BTreeMap<Vec<Arc<str>>, f64>,
}

impl HistoryDistribution {
    pub fn total(&self) -> f64 {
        self.weights.values().sum()
    }

    pub fn prob(&self, key: &[Arc<str>]) -> f64 {
        self.weights.get(key).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Total variation distance.
    pub fn tv_distance(&self, other: &HistoryDistribution) -> f64 {
        let mut keys: Vec<&Vec<Arc<str>>> = self.weights.keys().collect();
        keys.extend(other.weights.keys());
        keys.sort();
        keys.dedup();
        0.5 * keys
            .iter()
            .map(|k| (self.prob(k) - other.prob(k)).abs())
            .sum::<f64>()
    }
}

/// Empirical distribution of per-trial records.
pub fn quantum_history(records: &[TesterRecord]) -> HistoryDistribution {
    let mut out = HistoryDistribution::default();
    let w = 1.0 / records.len().max(1) as f64;
    for r in records {
        *out.weights.entry(r.key()).or_insert(0.0) += w;
    }
    out
}

/// Necessary conditions for a classical interaction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassicalityReport {
    pub is_classical: bool,
    /// Largest `|ρ_ij|` between basis states with different interface labels.
    pub max_interface_coherence: f64,
    /// Larger negativity of the `A | CE` and `AC | E` cuts.
    pub max_entanglement_witness: f64,
}

/// Checks a three-register state `(agent, interface, environment)` for
/// interface coherence and for entanglement across both cuts.
///
/// Coherence is read off the joint state: a state whose interface marginal
/// is diagonal can still carry coherence between interface labels once the
/// other registers are included, and such a state is not classical.
pub fn classicality_check(
    rho: &DensityOperator,
    partition: (&str, &str, &str),
) -> Result<ClassicalityReport> {
    let (ra, rc, re) = partition;
    let names: Vec<&str> = rho
        .layout()
        .registers()
        .iter()
        .map(|r| r.name.as_str())
        .collect();
    if names != [ra, rc, re] {
        return Err(Error::LayoutMismatch(format!(
            "expected registers [{ra}, {rc}, {re}], found {names:?}"
        )));
    }
    let coherence = rho.max_coherence(rc)?;
    let witness = rho.negativity(&[ra])?.max(rho.negativity(&[re])?);
    Ok(ClassicalityReport {
        is_classical: coherence <= CLASSICAL_TOL && witness <= CLASSICAL_TOL,
        max_interface_coherence: coherence,
        max_entanglement_witness: witness,
    })
}
