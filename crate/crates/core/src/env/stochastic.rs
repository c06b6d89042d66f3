use super::{DeterministicTask, Environment};
use crate::agent::Percept;
use crate::error::{Error, Result};
use crate::qsim::DEFAULT_DIM_CAP;
use crate::rng::RngStream;
use crate::space::{decode, encode, FiniteSpace, Spaces};

/// Tolerance on the normalisation of each conditional row.
const ROW_TOL: f64 = 1e-12;

/// A tabular stochastic epoch environment.
///
/// `tables[k]` holds the rows `P(s_{k+2} | a_1..a_{k+1}, s_2..s_{k+1})`,
/// indexed by the prefix code `enc(actions) · |𝒮′|^k + enc(percepts)`.
/// Raw percept `j` appears as percept index `j + 1` (ε is index 0).
#[derive(Clone, Debug)]
pub struct StochasticEnv {
    spaces: Spaces,
    n: usize,
    ns: usize,
    t: usize,
    tables: Vec<Vec<Vec<f64>>>,
    rewards: Vec<bool>,
    cap: usize,
    actions: Vec<usize>,
    percepts: Vec<usize>,
}

impl StochasticEnv {
    pub fn new(
        n: usize,
        percept_labels: &[&str],
        t: usize,
        tables: Vec<Vec<Vec<f64>>>,
        reward: impl Fn(&[usize], &[usize]) -> bool,
    ) -> Result<Self> {
        Self::with_cap(n, percept_labels, t, tables, reward, DEFAULT_DIM_CAP)
    }

    pub fn with_cap(
        n: usize,
        percept_labels: &[&str],
        t: usize,
        tables: Vec<Vec<Vec<f64>>>,
        reward: impl Fn(&[usize], &[usize]) -> bool,
        cap: usize,
    ) -> Result<Self> {
        let ns = percept_labels.len();
        let seqs = n
            .checked_pow(t as u32)
            .and_then(|a| ns.checked_pow(t as u32).and_then(|s| a.checked_mul(s)))
            .filter(|d| *d <= cap)
            .ok_or(Error::DimensionCap {
                dim: usize::MAX,
                cap,
            })?;
        if tables.len() != t {
            return Err(Error::LengthMismatch {
                expected: t,
                got: tables.len(),
            });
        }
        for (k, table) in tables.iter().enumerate() {
            let rows = n.pow(k as u32 + 1) * ns.pow(k as u32);
            if table.len() != rows {
                return Err(Error::LengthMismatch {
                    expected: rows,
                    got: table.len(),
                });
            }
            for (r, row) in table.iter().enumerate() {
                let sum: f64 = row.iter().sum();
                if row.len() != ns || row.iter().any(|p| *p < 0.0) || (sum - 1.0).abs() > ROW_TOL {
                    return Err(Error::BadDistribution(format!(
                        "step {} row {r} sums to {sum}",
                        k + 1
                    )));
                }
            }
        }
        let s_count = ns.pow(t as u32);
        let rewards = (0..seqs)
            .map(|c| reward(&decode(c / s_count, n, t), &decode(c % s_count, ns, t)))
            .collect();
        let spaces = Spaces::new(
            FiniteSpace::new("percepts", percept_labels, true)?,
            FiniteSpace::indexed("actions", n)?,
            t,
        )?;
        Ok(Self {
            spaces,
            n,
            ns,
            t,
            tables,
            rewards,
            cap,
            actions: Vec::with_capacity(t),
            percepts: Vec::with_capacity(t),
        })
    }

    /// Builds the tables from a conditional-distribution function.
    pub fn from_fn(
        n: usize,
        percept_labels: &[&str],
        t: usize,
        cond: impl Fn(&[usize], &[usize]) -> Vec<f64>,
        reward: impl Fn(&[usize], &[usize]) -> bool,
    ) -> Result<Self> {
        let ns = percept_labels.len();
        let tables = (0..t)
            .map(|k| {
                let pk = ns.pow(k as u32);
                (0..n.pow(k as u32 + 1) * pk)
                    .map(|c| cond(&decode(c / pk, n, k + 1), &decode(c % pk, ns, k)))
                    .collect()
            })
            .collect();
        Self::new(n, percept_labels, t, tables, reward)
    }

    /// One-step environment: action `a` wins with probability `p_win[a]`.
    pub fn coin(p_win: &[f64]) -> Result<Self> {
        Self::from_fn(
            p_win.len(),
            &["win", "lose"],
            1,
            |a, _| vec![p_win[a[0]], 1.0 - p_win[a[0]]],
            |_, s| s[0] == 0,
        )
    }

    /// Point-mass tables reproducing a deterministic task.
    pub fn from_task<T: DeterministicTask>(task: &T) -> Result<Self> {
        let spaces = task.spaces();
        let labels: Vec<&str> = spaces
            .percepts
            .proper_indices()
            .map(|i| &**spaces.percepts.label(i))
            .collect();
        let (n, t) = (spaces.num_actions(), spaces.epoch_len);
        let ns = labels.len();
        let tables = (0..t)
            .map(|k| {
                let pk = ns.pow(k as u32);
                (0..n.pow(k as u32 + 1) * pk)
                    .map(|c| {
                        // Pad the action prefix to a full epoch; only the prefix matters.
                        let mut a = decode(c / pk, n, k + 1);
                        a.resize(t, 0);
                        let ps = task.percepts_of(&a)?;
                        let mut row = vec![0.0; ns];
                        row[ps[k].index - 1] = 1.0;
                        Ok(row)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let reward_task = task.clone();
        Self::new(n, &labels, t, tables, move |a, _| {
            reward_task.reward_of(a).unwrap_or(false)
        })
    }

    pub fn num_actions(&self) -> usize {
        self.n
    }

    pub fn num_raw_percepts(&self) -> usize {
        self.ns
    }

    pub fn epoch_len(&self) -> usize {
        self.t
    }

    pub fn dim_cap(&self) -> usize {
        self.cap
    }

    fn row(&self, actions: &[usize], percepts: &[usize]) -> &[f64] {
        let k = percepts.len();
        let code = encode(actions, self.n) * self.ns.pow(k as u32) + encode(percepts, self.ns);
        &self.tables[k][code]
    }

    /// `P(s | a)` for full sequences, raw percept digits in `0..|𝒮′|`.
    pub fn sequence_probability(&self, actions: &[usize], percepts: &[usize]) -> f64 {
        (0..self.t)
            .map(|k| self.row(&actions[..=k], &percepts[..k])[percepts[k]])
            .product()
    }

    pub fn reward(&self, actions: &[usize], percepts: &[usize]) -> bool {
        let s_count = self.ns.pow(self.t as u32);
        self.rewards[encode(actions, self.n) * s_count + encode(percepts, self.ns)]
    }
}

impl Environment for StochasticEnv {
    fn spaces(&self) -> &Spaces {
        &self.spaces
    }

    fn reset(&mut self) {
        self.actions.clear();
        self.percepts.clear();
    }

    fn respond(&mut self, action: usize, rng: &mut RngStream) -> Percept {
        self.actions.push(action);
        let row = self.row(&self.actions, &self.percepts);
        let mut u = rng.unit();
        let mut s = row.len() - 1;
        for (j, p) in row.iter().enumerate() {
            if u < *p {
                s = j;
                break;
            }
            u -= p;
        }
        self.percepts.push(s);
        let mut reward = false;
        if self.actions.len() == self.t {
            reward = self.reward(&self.actions, &self.percepts);
            self.reset();
        }
        Percept::new(s + 1, reward)
    }

    fn is_deterministic(&self) -> bool {
        self.tables
            .iter()
            .flatten()
            .all(|row| row.iter().all(|p| *p == 0.0 || *p == 1.0))
    }
}
