use std::sync::Arc;

use crate::error::{Error, Result};
use crate::space::FiniteSpace;

use super::DEFAULT_DIM_CAP;

/// A named quantum register whose basis is labelled by a finite space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Register {
    pub name: String,
    pub space: Arc<FiniteSpace>,
}

impl Register {
    pub fn new(name: &str, space: FiniteSpace) -> Self {
        Self {
            name: name.to_string(),
            space: Arc::new(space),
        }
    }

    /// A register with basis labels `0..dim`.
    pub fn indexed(name: &str, dim: usize) -> Self {
        Self::new(name, FiniteSpace::indexed(name, dim).expect("dim > 0"))
    }

    pub fn dim(&self) -> usize {
        self.space.len()
    }
}

/// Ordered registers; register 0 is the most significant digit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    regs: Vec<Register>,
    strides: Vec<usize>,
    total: usize,
}

impl Layout {
    pub fn new(regs: Vec<Register>) -> Result<Self> {
        Self::with_cap(regs, DEFAULT_DIM_CAP)
    }

    pub fn with_cap(regs: Vec<Register>, cap: usize) -> Result<Self> {
        for (i, r) in regs.iter().enumerate() {
            if regs[..i].iter().any(|o| o.name == r.name) {
                return Err(Error::LayoutMismatch(format!(
                    "duplicate register `{}`",
                    r.name
                )));
            }
        }
        let mut total: usize = 1;
        for r in &regs {
            total =
                total
                    .checked_mul(r.dim())
                    .filter(|t| *t <= cap)
                    .ok_or(Error::DimensionCap {
                        dim: total.saturating_mul(r.dim()),
                        cap,
                    })?;
        }
        let mut strides = vec![1; regs.len()];
        for i in (0..regs.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * regs[i + 1].dim();
        }
        Ok(Self {
            regs,
            strides,
            total,
        })
    }

    /// `count` qubit registers named `prefix0`, `prefix1`, ….
    pub fn qubits(prefix: &str, count: usize) -> Result<Self> {
        Self::new(
            (0..count)
                .map(|i| Register::indexed(&format!("{prefix}{i}"), 2))
                .collect(),
        )
    }

    pub fn registers(&self) -> &[Register] {
        &self.regs
    }

    pub fn dims(&self) -> Vec<usize> {
        self.regs.iter().map(Register::dim).collect()
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn stride(&self, reg: usize) -> usize {
        self.strides[reg]
    }

    pub fn position(&self, name: &str) -> Result<usize> {
        self.regs
            .iter()
            .position(|r| r.name == name)
            .ok_or_else(|| Error::UnknownRegister(name.to_string()))
    }

    pub fn register(&self, name: &str) -> Result<&Register> {
        Ok(&self.regs[self.position(name)?])
    }

    /// Digit of register `reg` in basis index `idx`.
    pub fn digit(&self, idx: usize, reg: usize) -> usize {
        (idx / self.strides[reg]) % self.regs[reg].dim()
    }

    pub fn decode(&self, idx: usize) -> Vec<usize> {
        (0..self.regs.len()).map(|r| self.digit(idx, r)).collect()
    }

    pub fn encode(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.strides).map(|(d, s)| d * s).sum()
    }

    /// Sub-layout with the given registers, in this layout's order.
    pub fn select(&self, positions: &[usize]) -> Result<Layout> {
        let mut sorted = positions.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        Layout::new(sorted.iter().map(|&p| self.regs[p].clone()).collect())
    }

    /// Positions of the named registers, in the order given.
    pub fn positions(&self, names: &[&str]) -> Result<Vec<usize>> {
        names.iter().map(|n| self.position(n)).collect()
    }

    /// Basis index restricted to `positions` (mixed-radix in the given order).
    pub fn sub_index(&self, idx: usize, positions: &[usize]) -> usize {
        positions
            .iter()
            .fold(0, |acc, &p| acc * self.regs[p].dim() + self.digit(idx, p))
    }

    /// Product of the dimensions of `positions`.
    pub fn sub_dim(&self, positions: &[usize]) -> usize {
        positions.iter().map(|&p| self.regs[p].dim()).product()
    }

    /// Mixed-radix index over a subset in the given order, back to full digits.
    pub fn scatter(&self, base: usize, positions: &[usize], mut sub: usize) -> usize {
        let mut idx = base;
        for &p in positions.iter().rev() {
            let d = self.regs[p].dim();
            idx += (sub % d) * self.strides[p];
            sub /= d;
        }
        idx
    }

    /// Basis indices whose digits on `positions` are all zero.
    pub fn bases_outside(&self, positions: &[usize]) -> Vec<usize> {
        (0..self.total)
            .filter(|&i| positions.iter().all(|&p| self.digit(i, p) == 0))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_radix_round_trip() {
        let l = Layout::new(vec![
            Register::indexed("a", 2),
            Register::indexed("b", 3),
            Register::indexed("c", 4),
        ])
        .unwrap();
        assert_eq!(l.total(), 24);
        for i in 0..24 {
            assert_eq!(l.encode(&l.decode(i)), i);
        }
        assert_eq!(l.decode(23), vec![1, 2, 3]);
        let pos = [2, 0];
        assert_eq!(l.sub_index(l.encode(&[1, 2, 3]), &pos), 3 * 2 + 1);
        assert_eq!(
            l.scatter(l.encode(&[0, 2, 0]), &pos, 7),
            l.encode(&[1, 2, 3])
        );
    }

    #[test]
    fn cap_and_names() {
        assert!(matches!(
            Layout::with_cap(
                vec![Register::indexed("a", 8), Register::indexed("b", 8)],
                32
            ),
            Err(Error::DimensionCap { .. })
        ));
        let l = Layout::qubits("q", 2).unwrap();
        assert!(matches!(l.position("x"), Err(Error::UnknownRegister(_))));
        assert!(Layout::new(vec![Register::indexed("a", 2), Register::indexed("a", 2)]).is_err());
    }
}
