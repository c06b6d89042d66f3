use nalgebra::DMatrix;

use super::layout::Layout;
use super::linalg::{embed_operator, hermitian_eigenvalues};
use super::state::{StateVector, MIN_CONDITIONAL_NORM};
use super::{C64, ZERO};
use crate::error::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-8;

/// A density operator over a register layout.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    layout: Layout,
    matrix: DMatrix<C64>,
}

impl DensityOperator {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(layout: Layout, matrix: DMatrix<C64>) -> Result<Self> {
        let rho = Self { layout, matrix };
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn new_unchecked(layout: Layout, matrix: DMatrix<C64>) -> Self {
        debug_assert_eq!(matrix.nrows(), layout.total());
        Self { layout, matrix }
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        let v = nalgebra::DVector::from_column_slice(psi.amps());
        Self {
            layout: psi.layout().clone(),
            matrix: &v * v.adjoint(),
        }
    }

    /// `Σ_i w_i |ψ_i⟩⟨ψ_i|` over states sharing one layout.
    pub fn mixture(parts: &[(f64, StateVector)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidState("empty mixture".into()))?;
        let mut m = DMatrix::from_element(first.1.layout().total(), first.1.layout().total(), ZERO);
        for (w, s) in parts {
            if s.layout() != first.1.layout() {
                return Err(Error::LayoutMismatch("mixture of different layouts".into()));
            }
            m += Self::from_pure(s).matrix * C64::new(*w, 0.0);
        }
        Self::new(first.1.layout().clone(), m)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.matrix;
        if m.nrows() != self.layout.total() || m.ncols() != self.layout.total() {
            return Err(Error::LayoutMismatch(
                "matrix size differs from layout".into(),
            ));
        }
        let herm = (m - m.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian: {herm:e}")));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let min = hermitian_eigenvalues(m).first().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// Diagonal in the computational basis.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.matrix.nrows())
            .map(|i| self.matrix[(i, i)].re)
            .collect()
    }

    /// Reduced state on the named registers (kept in layout order).
    pub fn partial_trace(&self, keep: &[&str]) -> Result<DensityOperator> {
        let mut pos = self.layout.positions(keep)?;
        pos.sort_unstable();
        let sub = self.layout.select(&pos)?;
        let d = sub.total();
        let mut out = DMatrix::from_element(d, d, ZERO);
        // `env` runs over the traced registers' basis.
        for env in self.layout.bases_outside(&pos) {
            for c in 0..d {
                let col = self.layout.scatter(env, &pos, c);
                for r in 0..d {
                    out[(r, c)] += self.matrix[(self.layout.scatter(env, &pos, r), col)];
                }
            }
        }
        Ok(DensityOperator::new_unchecked(sub, out))
    }

    /// Partial transpose on the named registers (not a state in general).
    pub fn partial_transpose(&self, regs: &[&str]) -> Result<DMatrix<C64>> {
        let pos = self.layout.positions(regs)?;
        let n = self.layout.total();
        let mut out = DMatrix::from_element(n, n, ZERO);
        for i in 0..n {
            for j in 0..n {
                // Swap the digits of `pos` between row and column.
                let (mut ri, mut cj) = (i, j);
                for &p in &pos {
                    let s = self.layout.stride(p);
                    let (di, dj) = (self.layout.digit(i, p), self.layout.digit(j, p));
                    ri = ri - di * s + dj * s;
                    cj = cj - dj * s + di * s;
                }
                out[(ri, cj)] = self.matrix[(i, j)];
            }
        }
        Ok(out)
    }

    /// Negativity `Σ |λ_-|` of the partial transpose on `regs`.
    pub fn negativity(&self, regs: &[&str]) -> Result<f64> {
        let pt = self.partial_transpose(regs)?;
        Ok(hermitian_eigenvalues(&pt)
            .into_iter()
            .filter(|l| *l < 0.0)
            .map(f64::abs)
            .sum())
    }

    /// `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityOperator) -> Result<f64> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch(
                "trace distance across layouts".into(),
            ));
        }
        let diff = &self.matrix - &other.matrix;
        Ok(0.5
            * hermitian_eigenvalues(&diff)
                .iter()
                .map(|l| l.abs())
                .sum::<f64>())
    }

    /// Zeroes every coherence between different basis labels of `name`.
    pub fn dephase(&self, name: &str) -> Result<DensityOperator> {
        let p = self.layout.position(name)?;
        let mut m = self.matrix.clone();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if self.layout.digit(i, p) != self.layout.digit(j, p) {
                    m[(i, j)] = ZERO;
                }
            }
        }
        Ok(DensityOperator::new_unchecked(self.layout.clone(), m))
    }

    /// Largest `|ρ_ij|` over pairs differing on register `name`.
    pub fn max_coherence(&self, name: &str) -> Result<f64> {
        let p = self.layout.position(name)?;
        let mut best: f64 = 0.0;
        for i in 0..self.matrix.nrows() {
            for j in 0..self.matrix.ncols() {
                if self.layout.digit(i, p) != self.layout.digit(j, p) {
                    best = best.max(self.matrix[(i, j)].norm());
                }
            }
        }
        Ok(best)
    }

    /// `U ρ U†` for a full-dimension unitary.
    pub fn conjugate(&self, u: &DMatrix<C64>) -> DensityOperator {
        DensityOperator::new_unchecked(self.layout.clone(), u * &self.matrix * u.adjoint())
    }

    /// `U ρ U†` with `U` acting on the named registers.
    pub fn apply_on(&self, names: &[&str], local: &DMatrix<C64>) -> Result<DensityOperator> {
        let pos = self.layout.positions(names)?;
        Ok(self.conjugate(&embed_operator(&self.layout, &pos, local)))
    }

    pub fn register_probabilities(&self, name: &str) -> Result<Vec<f64>> {
        let p = self.layout.position(name)?;
        let mut probs = vec![0.0; self.layout.registers()[p].dim()];
        for i in 0..self.matrix.nrows() {
            probs[self.layout.digit(i, p)] += self.matrix[(i, i)].re;
        }
        Ok(probs)
    }

    /// Projects `name` onto `outcome`: probability and normalised post-state.
    pub fn project(&self, name: &str, outcome: usize) -> Result<(f64, DensityOperator)> {
        let p = self.layout.position(name)?;
        let mut m = self.matrix.clone();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if self.layout.digit(i, p) != outcome || self.layout.digit(j, p) != outcome {
                    m[(i, j)] = ZERO;
                }
            }
        }
        let prob = m.trace().re;
        if prob < MIN_CONDITIONAL_NORM {
            return Err(Error::ZeroNorm(prob));
        }
        m /= C64::new(prob, 0.0);
        Ok((prob, DensityOperator::new_unchecked(self.layout.clone(), m)))
    }

    /// Tensor product `self ⊗ other`.
    pub fn tensor(&self, other: &DensityOperator) -> Result<DensityOperator> {
        let mut regs = self.layout.registers().to_vec();
        regs.extend_from_slice(other.layout.registers());
        let layout = Layout::new(regs)?;
        Ok(DensityOperator::new_unchecked(
            layout,
            self.matrix.kronecker(&other.matrix),
        ))
    }
}
