use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::density::DensityOperator;
use super::layout::{Layout, Register};
use super::state::{sample, StateVector};
use super::{C64, DEFAULT_DIM_CAP, ONE, ZERO};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::space::{decode, FiniteSpace};

/// Truth table of a reward function over `n^len` action sequences.
///
/// Index `code` is the mixed-radix encoding of the sequence, first action most
/// significant.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RewardTable {
    n: usize,
    len: usize,
    marks: Vec<bool>,
}

impl RewardTable {
    pub fn new(n: usize, len: usize, marks: Vec<bool>) -> Result<Self> {
        let total = n
            .checked_pow(len as u32)
            .ok_or_else(|| Error::InvalidSpace(format!("{n}^{len} overflows")))?;
        if marks.len() != total {
            return Err(Error::LengthMismatch {
                expected: total,
                got: marks.len(),
            });
        }
        Ok(Self { n, len, marks })
    }

    /// Tabulates `f` over every sequence.
    pub fn from_fn(n: usize, len: usize, mut f: impl FnMut(&[usize]) -> bool) -> Result<Self> {
        let total = n
            .checked_pow(len as u32)
            .ok_or_else(|| Error::InvalidSpace(format!("{n}^{len} overflows")))?;
        let marks = (0..total).map(|c| f(&decode(c, n, len))).collect();
        Ok(Self { n, len, marks })
    }

    pub fn num_actions(&self) -> usize {
        self.n
    }

    pub fn seq_len(&self) -> usize {
        self.len
    }

    pub fn num_items(&self) -> usize {
        self.marks.len()
    }

    pub fn is_marked(&self, code: usize) -> bool {
        self.marks[code]
    }

    pub fn marks(&self) -> &[bool] {
        &self.marks
    }

    pub fn winners(&self) -> Vec<usize> {
        (0..self.marks.len()).filter(|&c| self.marks[c]).collect()
    }

    pub fn num_winners(&self) -> usize {
        self.marks.iter().filter(|m| **m).count()
    }

    /// Fraction of rewarded sequences.
    pub fn fraction(&self) -> f64 {
        self.num_winners() as f64 / self.marks.len() as f64
    }

    /// Fingerprint used to check that two views share the same reward function.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.hash(&mut h);
        h.finish()
    }

    /// Same table with `codes` additionally unmarked.
    pub fn without(&self, codes: &[usize]) -> RewardTable {
        let mut t = self.clone();
        for &c in codes {
            t.marks[c] = false;
        }
        t
    }

    /// Register over all sequences.
    pub fn action_register(&self, name: &str) -> Result<Register> {
        Ok(Register::new(
            name,
            FiniteSpace::sequences(name, self.n, self.len)?,
        ))
    }
}

/// Something a Grover-type search can query.
pub trait SearchOracle {
    fn num_items(&self) -> usize;

    /// One coherent query acting on search-register amplitudes.
    fn query(&self, amps: &mut [C64], rng: &mut RngStream);

    /// One classical evaluation of an item.
    fn check(&self, item: usize) -> bool;
}

impl SearchOracle for RewardTable {
    fn num_items(&self) -> usize {
        self.marks.len()
    }

    fn query(&self, amps: &mut [C64], _rng: &mut RngStream) {
        for (a, m) in amps.iter_mut().zip(&self.marks) {
            if *m {
                *a = -*a;
            }
        }
    }

    fn check(&self, item: usize) -> bool {
        self.marks[item]
    }
}

/// The four oracle flavours.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleKind {
    /// `|x⟩|y⟩ → |x⟩|f(x) ⊕ y⟩`.
    Bitflip,
    /// `|x⟩ → (−1)^{f(x)}|x⟩`.
    Phaseflip,
    /// `|x⟩⟨x′| → |x⟩⟨x′| ⊗ |f(x)⟩⟨f(x′)|`.
    Copy,
    /// `ρ → Σ_x ρ_xx |f(x)⟩⟨f(x)|`.
    Dephasing,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleSpec {
    pub kind: OracleKind,
    pub table: RewardTable,
}

/// A built oracle together with its input and output layouts.
///
/// The action register is named `A`; the ancilla of the bit-flip oracle is
/// `Y`, the output qubit of the copy and dephasing oracles is `F`.
#[derive(Clone, Debug)]
pub struct QuantumChannel {
    kind: OracleKind,
    table: RewardTable,
    input: Layout,
    output: Layout,
}

/// Builds an oracle of the requested flavour within the default dimension cap.
pub fn build_oracle(spec: &OracleSpec) -> Result<QuantumChannel> {
    build_oracle_with_cap(spec, DEFAULT_DIM_CAP)
}

pub(crate) fn build_oracle_with_cap(spec: &OracleSpec, cap: usize) -> Result<QuantumChannel> {
    let a = spec.table.action_register("A")?;
    let bit = |name: &str| Register::indexed(name, 2);
    let (input, output) = match spec.kind {
        OracleKind::Phaseflip => {
            let l = Layout::with_cap(vec![a], cap)?;
            (l.clone(), l)
        }
        OracleKind::Bitflip => {
            let l = Layout::with_cap(vec![a, bit("Y")], cap)?;
            (l.clone(), l)
        }
        OracleKind::Copy => (
            Layout::with_cap(vec![a.clone()], cap)?,
            Layout::with_cap(vec![a, bit("F")], cap)?,
        ),
        OracleKind::Dephasing => (
            Layout::with_cap(vec![a], cap)?,
            Layout::with_cap(vec![bit("F")], cap)?,
        ),
    };
    Ok(QuantumChannel {
        kind: spec.kind,
        table: spec.table.clone(),
        input,
        output,
    })
}

impl QuantumChannel {
    pub fn kind(&self) -> OracleKind {
        self.kind
    }

    pub fn table(&self) -> &RewardTable {
        &self.table
    }

    pub fn input_layout(&self) -> &Layout {
        &self.input
    }

    pub fn output_layout(&self) -> &Layout {
        &self.output
    }

    /// The unitary or isometry as a dense `out × in` matrix; `None` for the
    /// dephasing channel.
    pub fn matrix(&self) -> Option<DMatrix<C64>> {
        let n = self.table.num_items();
        let f = |x: usize| usize::from(self.table.is_marked(x));
        match self.kind {
            OracleKind::Phaseflip => Some(DMatrix::from_fn(n, n, |r, c| {
                if r != c {
                    ZERO
                } else if f(r) == 1 {
                    -ONE
                } else {
                    ONE
                }
            })),
            OracleKind::Bitflip => Some(DMatrix::from_fn(2 * n, 2 * n, |r, c| {
                let (x, y) = (c / 2, c % 2);
                if r == 2 * x + (y ^ f(x)) {
                    ONE
                } else {
                    ZERO
                }
            })),
            OracleKind::Copy => Some(DMatrix::from_fn(2 * n, n, |r, c| {
                if r == 2 * c + f(c) {
                    ONE
                } else {
                    ZERO
                }
            })),
            OracleKind::Dephasing => None,
        }
    }

    /// Applies the oracle to a pure state. The dephasing channel samples its
    /// classical-basis measurement from `rng`.
    pub fn apply_state(&self, psi: &StateVector, rng: &mut RngStream) -> Result<StateVector> {
        if psi.layout() != &self.input {
            return Err(Error::LayoutMismatch(
                "state does not match oracle input".into(),
            ));
        }
        let amps = psi.amps();
        let f = |x: usize| usize::from(self.table.is_marked(x));
        let out = match self.kind {
            OracleKind::Phaseflip => amps
                .iter()
                .enumerate()
                .map(|(x, a)| if f(x) == 1 { -a } else { *a })
                .collect(),
            OracleKind::Bitflip => {
                let mut out = vec![ZERO; amps.len()];
                for (i, a) in amps.iter().enumerate() {
                    let (x, y) = (i / 2, i % 2);
                    out[2 * x + (y ^ f(x))] = *a;
                }
                out
            }
            OracleKind::Copy => {
                let mut out = vec![ZERO; 2 * amps.len()];
                for (x, a) in amps.iter().enumerate() {
                    out[2 * x + f(x)] = *a;
                }
                out
            }
            OracleKind::Dephasing => {
                let probs: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
                let x = sample(&probs, rng);
                return StateVector::basis(self.output.clone(), &[f(x)]);
            }
        };
        StateVector::new(self.output.clone(), out)
    }

    /// Applies the oracle to a density operator exactly.
    pub fn apply_density(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        if rho.layout() != &self.input {
            return Err(Error::LayoutMismatch(
                "state does not match oracle input".into(),
            ));
        }
        match self.matrix() {
            Some(v) => Ok(DensityOperator::new_unchecked(
                self.output.clone(),
                &v * rho.matrix() * v.adjoint(),
            )),
            None => {
                let mut m = DMatrix::from_element(2, 2, ZERO);
                for (x, p) in rho.diagonal().into_iter().enumerate() {
                    let b = usize::from(self.table.is_marked(x));
                    m[(b, b)] += C64::new(p, 0.0);
                }
                Ok(DensityOperator::new_unchecked(self.output.clone(), m))
            }
        }
    }
}
