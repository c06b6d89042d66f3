use std::sync::Arc;

use nalgebra::DMatrix;

use super::density::DensityOperator;
use super::layout::Layout;
use super::{C64, ONE, ZERO};
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Tolerance on the norm of a constructed state.
pub const NORM_TOL: f64 = 1e-12;

/// Conditional norms below this are treated as zero.
pub const MIN_CONDITIONAL_NORM: f64 = 1e-14;

/// A normalised pure state over a register layout.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    layout: Layout,
    amps: Vec<C64>,
}

impl StateVector {
    /// Validates length and unit norm.
    pub fn new(layout: Layout, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != layout.total() {
            return Err(Error::InvalidState(format!(
                "{} amplitudes for a layout of dimension {}",
                amps.len(),
                layout.total()
            )));
        }
        let n = norm(&amps);
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("norm {n} differs from 1")));
        }
        Ok(Self { layout, amps })
    }

    /// Normalises `amps` first.
    pub fn normalized(layout: Layout, mut amps: Vec<C64>) -> Result<Self> {
        let n = norm(&amps);
        if n < MIN_CONDITIONAL_NORM {
            return Err(Error::ZeroNorm(n));
        }
        let inv = C64::new(1.0 / n, 0.0);
        amps.iter_mut().for_each(|a| *a *= inv);
        Self::new(layout, amps)
    }

    /// The basis state with the given register digits.
    pub fn basis(layout: Layout, digits: &[usize]) -> Result<Self> {
        if digits.len() != layout.registers().len()
            || digits.iter().zip(layout.dims()).any(|(d, n)| *d >= n)
        {
            return Err(Error::InvalidState(format!(
                "digits {digits:?} outside layout"
            )));
        }
        let mut amps = vec![ZERO; layout.total()];
        amps[layout.encode(digits)] = ONE;
        Ok(Self { layout, amps })
    }

    /// Tensor product of one normalised vector per register.
    pub fn product(layout: Layout, factors: &[Vec<C64>]) -> Result<Self> {
        if factors.len() != layout.registers().len() {
            return Err(Error::LayoutMismatch("one factor per register".into()));
        }
        let mut amps = vec![ONE];
        for (f, d) in factors.iter().zip(layout.dims()) {
            if f.len() != d {
                return Err(Error::LayoutMismatch(format!(
                    "factor of length {} for dim {d}",
                    f.len()
                )));
            }
            amps = amps
                .iter()
                .flat_map(|a| f.iter().map(move |b| a * b))
                .collect();
        }
        Self::normalized(layout, amps)
    }

    /// Uniform superposition over all basis states.
    pub fn uniform(layout: Layout) -> Self {
        let n = layout.total();
        let a = C64::new(1.0 / (n as f64).sqrt(), 0.0);
        Self {
            layout,
            amps: vec![a; n],
        }
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    /// Raw amplitude access; the caller keeps the state normalised.
    pub fn amps_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amps)
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Applies a full-dimension matrix.
    pub fn apply_matrix(&self, u: &DMatrix<C64>) -> Result<StateVector> {
        if u.ncols() != self.amps.len() || u.nrows() != self.amps.len() {
            return Err(Error::LayoutMismatch(format!(
                "{}x{} operator on dimension {}",
                u.nrows(),
                u.ncols(),
                self.amps.len()
            )));
        }
        let v = nalgebra::DVector::from_column_slice(&self.amps);
        let out = u * v;
        Ok(StateVector {
            layout: self.layout.clone(),
            amps: out.iter().copied().collect(),
        })
    }

    /// Applies `local` to the registers at `positions` (mixed-radix in the given order).
    pub fn apply_local(&mut self, positions: &[usize], local: &DMatrix<C64>) {
        let sub = self.layout.sub_dim(positions);
        assert_eq!(local.nrows(), sub, "local operator dimension");
        // Most local operators here are permutations or near-diagonal.
        let rows: Vec<Vec<(usize, C64)>> = (0..sub)
            .map(|r| {
                (0..sub)
                    .filter(|&c| local[(r, c)] != ZERO)
                    .map(|c| (c, local[(r, c)]))
                    .collect()
            })
            .collect();
        let mut buf = vec![ZERO; sub];
        let mut idx = vec![0; sub];
        for base in self.layout.bases_outside(positions) {
            for (s, slot) in idx.iter_mut().enumerate() {
                *slot = self.layout.scatter(base, positions, s);
            }
            for (r, row) in rows.iter().enumerate() {
                buf[r] = row.iter().map(|&(c, v)| v * self.amps[idx[c]]).sum();
            }
            for (s, &i) in idx.iter().enumerate() {
                self.amps[i] = buf[s];
            }
        }
    }

    /// Named-register version of [`StateVector::apply_local`].
    pub fn apply_on(&mut self, names: &[&str], local: &DMatrix<C64>) -> Result<()> {
        let pos = self.layout.positions(names)?;
        self.apply_local(&pos, local);
        Ok(())
    }

    /// Born probabilities of each basis label of a register.
    pub fn register_probabilities(&self, name: &str) -> Result<Vec<f64>> {
        let p = self.layout.position(name)?;
        let mut probs = vec![0.0; self.layout.registers()[p].dim()];
        for (i, a) in self.amps.iter().enumerate() {
            probs[self.layout.digit(i, p)] += a.norm_sqr();
        }
        Ok(probs)
    }

    /// Projects a register onto `outcome`; returns the probability and the
    /// renormalised conditional state.
    pub fn project(&self, name: &str, outcome: usize) -> Result<(f64, StateVector)> {
        let p = self.layout.position(name)?;
        let mut amps = self.amps.clone();
        for (i, a) in amps.iter_mut().enumerate() {
            if self.layout.digit(i, p) != outcome {
                *a = ZERO;
            }
        }
        let n = norm(&amps);
        if n < MIN_CONDITIONAL_NORM {
            return Err(Error::ZeroNorm(n));
        }
        let st = StateVector::normalized(self.layout.clone(), amps)?;
        Ok((n * n, st))
    }

    /// Born-rule measurement of one register.
    pub fn measure(&self, name: &str, rng: &mut RngStream) -> Result<(Arc<str>, StateVector)> {
        let probs = self.register_probabilities(name)?;
        let outcome = sample(&probs, rng);
        let (_, post) = self.project(name, outcome)?;
        let label = self.layout.register(name)?.space.label(outcome).clone();
        Ok((label, post))
    }

    /// Reduced density operator on the named registers.
    ///
    /// Kept registers stay in layout order. Works from the amplitudes, so the
    /// full density matrix is never formed.
    pub fn reduced(&self, keep: &[&str]) -> Result<DensityOperator> {
        let mut pos = self.layout.positions(keep)?;
        pos.sort_unstable();
        let sub = self.layout.select(&pos)?;
        let d = sub.total();
        let envs = self.layout.bases_outside(&pos);
        let mut psi = DMatrix::from_element(d, envs.len(), ZERO);
        for (e, &base) in envs.iter().enumerate() {
            for k in 0..d {
                psi[(k, e)] = self.amps[self.layout.scatter(base, &pos, k)];
            }
        }
        Ok(DensityOperator::new_unchecked(sub, &psi * psi.adjoint()))
    }

    pub fn to_density(&self) -> DensityOperator {
        DensityOperator::from_pure(self)
    }
}

pub(crate) fn norm(amps: &[C64]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Samples an index from a probability vector.
pub(crate) fn sample(probs: &[f64], rng: &mut RngStream) -> usize {
    let total: f64 = probs.iter().sum();
    let mut u = rng.unit() * total;
    let mut last = 0;
    for (i, p) in probs.iter().enumerate() {
        if *p > 0.0 {
            last = i;
            if u < *p {
                return i;
            }
            u -= p;
        }
    }
    last
}
