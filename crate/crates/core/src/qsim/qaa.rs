//! Amplitude amplification over stochastic environments.
//!
//! Registers: `A` holds the action sequence, `S` the percept sequence and
//! `M` its mirror copy (the purification). `S` and `M` have basis
//! `{ε…ε} ∪ 𝒮′^t` with `ε…ε` at index 0.

use nalgebra::DMatrix;

use super::layout::{Layout, Register};
use super::state::StateVector;
use super::{C64, ONE, ZERO};
use crate::env::StochasticEnv;
use crate::error::{Error, Result};
use crate::space::{decode, FiniteSpace};

/// Column norms below this are dropped during Gram–Schmidt completion.
const GS_TOL: f64 = 1e-9;

/// All operators and states of one amplitude-amplification instance.
#[derive(Clone, Debug)]
pub struct QaaSystem {
    pub layout: Layout,
    /// `U_𝒮′`.
    pub raw_percept: DMatrix<C64>,
    /// `U_R = (−1)^{R(a, s)}`.
    pub reward_reflector: DMatrix<C64>,
    /// `U′_init = ((1 − 2|φ⟩⟨φ|) ⊗ 1) U_𝒮′†`.
    pub init_reflector: DMatrix<C64>,
    /// `U_𝒮′ U′_init`, the reflection used in the iteration.
    pub applied_init_reflector: DMatrix<C64>,
    /// `U_𝒮′ ((1 − 2|φ, ε…ε, ε…ε⟩⟨φ, ε…ε, ε…ε|) U_𝒮′†`, which is exactly
    /// `1 − 2|ψ_init⟩⟨ψ_init|` on the whole space.
    pub conditioned_init_reflector: DMatrix<C64>,
    /// `U_𝒮′ |φ⟩|ε…ε⟩|ε…ε⟩`.
    pub psi_init: StateVector,
    /// Normalised projection of `psi_init` onto the rewarded subspace.
    pub psi_target: StateVector,
}

impl QaaSystem {
    pub fn new(env: &StochasticEnv) -> Result<Self> {
        let (layout, raw_percept) = build_raw_percept_oracle(env)?;
        let reward_reflector = build_reward_reflector(env)?;
        let init_reflector = build_init_reflector(env)?;
        let applied_init_reflector = &raw_percept * &init_reflector;
        let conditioned_init_reflector = &raw_percept * build_conditioned_init_reflector(env)?;
        let fid = fiducial(&layout)?;
        let psi_init = fid.apply_matrix(&raw_percept)?;
        let mut tar = psi_init.amps().to_vec();
        for (i, a) in tar.iter_mut().enumerate() {
            if reward_reflector[(i, i)].re > 0.0 {
                *a = ZERO;
            }
        }
        let psi_target = StateVector::normalized(layout.clone(), tar)?;
        Ok(Self {
            layout,
            raw_percept,
            reward_reflector,
            init_reflector,
            applied_init_reflector,
            conditioned_init_reflector,
            psi_init,
            psi_target,
        })
    }

    /// `|⟨ψ_tar|ψ_init⟩|`, the sine of the rotation angle.
    pub fn overlap(&self) -> f64 {
        self.psi_target.inner(&self.psi_init).norm()
    }

    /// `floor((π/4)/θ)` iterations.
    pub fn optimal_iterations(&self) -> usize {
        (std::f64::consts::FRAC_PI_4 / self.overlap().asin()).floor() as usize
    }

    /// Analytic target fidelity after `k` iterations: `sin²((2k+1)θ)`.
    pub fn analytic_fidelity(&self, k: usize) -> f64 {
        ((2 * k + 1) as f64 * self.overlap().asin()).sin().powi(2)
    }

    /// Fidelity with the target after `k` iterations, by simulation.
    ///
    /// Follows the rotation formula only while `U_R` keeps the state in the
    /// busy subspace, i.e. when the reward depends on the actions alone.
    pub fn simulated_fidelity(&self, k: usize) -> Result<f64> {
        let out = qaa(
            &self.psi_init,
            &self.applied_init_reflector,
            &self.reward_reflector,
            k,
        )?;
        Ok(self.psi_target.fidelity(&out))
    }

    /// As [`simulated_fidelity`](Self::simulated_fidelity), with the init
    /// reflection also conditioned on empty percept registers.
    pub fn conditioned_fidelity(&self, k: usize) -> Result<f64> {
        let out = qaa(
            &self.psi_init,
            &self.conditioned_init_reflector,
            &self.reward_reflector,
            k,
        )?;
        Ok(self.psi_target.fidelity(&out))
    }

    /// Largest gap between the simulated fidelity and the rotation formula
    /// over `0..=2·optimal` iterations.
    pub fn max_trace_error(&self, conditioned: bool) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for k in 0..=2 * self.optimal_iterations() {
            let sim = if conditioned {
                self.conditioned_fidelity(k)?
            } else {
                self.simulated_fidelity(k)?
            };
            worst = worst.max((sim - self.analytic_fidelity(k)).abs());
        }
        Ok(worst)
    }
}

fn percept_register(name: &str, env: &StochasticEnv) -> Result<Register> {
    let seqs = FiniteSpace::sequences(name, env.num_raw_percepts(), env.epoch_len())?;
    // ε at index 0 stands for the all-empty sequence ε…ε.
    let labels = seqs.labels().iter().map(|l| format!("s{l}"));
    Ok(Register::new(name, FiniteSpace::new(name, labels, true)?))
}

fn qaa_layout(env: &StochasticEnv) -> Result<Layout> {
    let a = Register::new(
        "A",
        FiniteSpace::sequences("A", env.num_actions(), env.epoch_len())?,
    );
    Layout::with_cap(
        vec![a, percept_register("S", env)?, percept_register("M", env)?],
        env.dim_cap(),
    )
}

fn fiducial(layout: &Layout) -> Result<StateVector> {
    let na = layout.dims()[0];
    let mut amps = vec![ZERO; layout.total()];
    let w = C64::new(1.0 / (na as f64).sqrt(), 0.0);
    for a in 0..na {
        amps[layout.encode(&[a, 0, 0])] = w;
    }
    StateVector::new(layout.clone(), amps)
}

/// `U_𝒮′` as a dense matrix, block-diagonal in the action register.
///
/// The column for `|a⟩|ε…ε⟩|ε…ε⟩` is `|a⟩ Σ_s √P(s|a) |s⟩|s⟩`; the rest of
/// each block is completed by Gram–Schmidt over standard basis vectors in
/// basis order.
pub fn build_raw_percept_oracle(env: &StochasticEnv) -> Result<(Layout, DMatrix<C64>)> {
    let layout = qaa_layout(env)?;
    let dims = layout.dims();
    let (na, d) = (dims[0], dims[1]);
    let block = d * d;
    let t = env.epoch_len();
    let ns = env.num_raw_percepts();
    let mut u = DMatrix::from_element(layout.total(), layout.total(), ZERO);
    for a in 0..na {
        let actions = decode(a, env.num_actions(), t);
        let mut first = vec![ZERO; block];
        for code in 0..d - 1 {
            let p = env.sequence_probability(&actions, &decode(code, ns, t));
            first[(code + 1) * d + code + 1] = C64::new(p.sqrt(), 0.0);
        }
        let cols = complete_basis(first, block)?;
        for (c, col) in cols.iter().enumerate() {
            for (r, v) in col.iter().enumerate() {
                u[(a * block + r, a * block + c)] = *v;
            }
        }
    }
    Ok((layout, u))
}

/// Orthonormal basis whose first vector is `first`, completed from the
/// standard basis in order.
fn complete_basis(first: Vec<C64>, dim: usize) -> Result<Vec<Vec<C64>>> {
    let n: f64 = first.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (n - 1.0).abs() > 1e-12 {
        return Err(Error::BadDistribution(format!(
            "percept amplitudes have norm {n}"
        )));
    }
    let mut basis = vec![first];
    for e in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut v = vec![ZERO; dim];
        v[e] = ONE;
        for b in &basis {
            let proj: C64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= proj * bi;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > GS_TOL {
            v.iter_mut().for_each(|z| *z /= norm);
            basis.push(v);
        }
    }
    Ok(basis)
}

/// `U_R`: diagonal `(−1)^{R(a, s)}`, read from the `S` register.
pub fn build_reward_reflector(env: &StochasticEnv) -> Result<DMatrix<C64>> {
    let layout = qaa_layout(env)?;
    let t = env.epoch_len();
    let ns = env.num_raw_percepts();
    let mut u = DMatrix::from_element(layout.total(), layout.total(), ZERO);
    for i in 0..layout.total() {
        let digits = layout.decode(i);
        let rewarded = digits[1] > 0
            && env.reward(
                &decode(digits[0], env.num_actions(), t),
                &decode(digits[1] - 1, ns, t),
            );
        u[(i, i)] = if rewarded { -ONE } else { ONE };
    }
    Ok(u)
}

/// `U′_init = ((1 − 2|φ⟩⟨φ|) ⊗ 1) U_𝒮′†` with `|φ⟩` uniform over action sequences.
pub fn build_init_reflector(env: &StochasticEnv) -> Result<DMatrix<C64>> {
    let (layout, u) = build_raw_percept_oracle(env)?;
    let na = layout.dims()[0];
    let rest = layout.total() / na;
    let w = C64::new(2.0 / na as f64, 0.0);
    // (1 − 2|φ⟩⟨φ|) ⊗ 1 applied to the rows of U†.
    let ud = u.adjoint();
    let mut out = ud.clone();
    for r in 0..rest {
        for c in 0..layout.total() {
            let sum: C64 = (0..na).map(|a| ud[(a * rest + r, c)]).sum();
            for a in 0..na {
                out[(a * rest + r, c)] -= w * sum;
            }
        }
    }
    Ok(out)
}

/// `((1 − 2|φ, ε…ε, ε…ε⟩⟨φ, ε…ε, ε…ε|)) U_𝒮′†`: the reflection about the
/// uniform action state restricted to empty percept registers.
pub fn build_conditioned_init_reflector(env: &StochasticEnv) -> Result<DMatrix<C64>> {
    let (layout, u) = build_raw_percept_oracle(env)?;
    let na = layout.dims()[0];
    let rows: Vec<usize> = (0..na).map(|a| layout.encode(&[a, 0, 0])).collect();
    let w = C64::new(2.0 / na as f64, 0.0);
    let ud = u.adjoint();
    let mut out = ud.clone();
    for c in 0..layout.total() {
        let sum: C64 = rows.iter().map(|&r| ud[(r, c)]).sum();
        for &r in &rows {
            out[(r, c)] -= w * sum;
        }
    }
    Ok(out)
}

/// `(refl_init · refl_tar)^iterations |initial⟩`.
pub fn qaa(
    initial: &StateVector,
    refl_init: &DMatrix<C64>,
    refl_tar: &DMatrix<C64>,
    iterations: usize,
) -> Result<StateVector> {
    let mut s = initial.clone();
    for _ in 0..iterations {
        s = s.apply_matrix(refl_tar)?;
        s = s.apply_matrix(refl_init)?;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::linalg::{is_unitary, operator_distance};

    fn biased() -> StochasticEnv {
        StochasticEnv::coin(&[0.8, 0.2]).unwrap()
    }

    #[test]
    fn raw_percept_oracle_on_fiducials() {
        let env = biased();
        let (layout, u) = build_raw_percept_oracle(&env).unwrap();
        assert!(is_unitary(&u, 1e-10));
        let inp = StateVector::basis(layout.clone(), &[0, 0, 0]).unwrap();
        let out = inp.apply_matrix(&u).unwrap();
        // Percept 0 ("win") and 1 ("lose") sit at S/M indices 1 and 2.
        let win = out.amps()[layout.encode(&[0, 1, 1])].re;
        let lose = out.amps()[layout.encode(&[0, 2, 2])].re;
        assert!((win - 0.8f64.sqrt()).abs() < 1e-12);
        assert!((lose - 0.2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn mirrored_registers_are_correlated() {
        let sys = QaaSystem::new(&biased()).unwrap();
        let mut rng = crate::rng::RngStream::new(4, 0);
        for _ in 0..200 {
            let (s, post) = sys.psi_init.measure("S", &mut rng).unwrap();
            let (m, _) = post.measure("M", &mut rng).unwrap();
            assert_eq!(s, m);
        }
    }

    #[test]
    fn reward_reflector_is_an_involution() {
        let u = build_reward_reflector(&biased()).unwrap();
        let sq = &u * &u;
        assert!((sq - DMatrix::<C64>::identity(u.nrows(), u.ncols())).camax() < 1e-12);
        let never =
            StochasticEnv::from_fn(2, &["x", "y"], 1, |_, _| vec![0.5, 0.5], |_, _| false).unwrap();
        let id = build_reward_reflector(&never).unwrap();
        assert!((id.clone() - DMatrix::<C64>::identity(id.nrows(), id.ncols())).camax() == 0.0);
    }

    #[test]
    fn init_reflector_flips_psi_init_and_fixes_its_complement() {
        let env = biased();
        let sys = QaaSystem::new(&env).unwrap();
        let flipped = sys
            .psi_init
            .apply_matrix(&sys.applied_init_reflector)
            .unwrap();
        for (a, b) in flipped.amps().iter().zip(sys.psi_init.amps()) {
            assert!((a + b).norm() < 1e-10);
        }
        // U_𝒮′|0⟩|εε⟩ − U_𝒮′|1⟩|εε⟩ lies in the busy subspace, orthogonal to ψ_init.
        let l = &sys.layout;
        let mut amps = vec![ZERO; l.total()];
        amps[l.encode(&[0, 0, 0])] = ONE;
        amps[l.encode(&[1, 0, 0])] = -ONE;
        let v = StateVector::normalized(l.clone(), amps)
            .unwrap()
            .apply_matrix(&sys.raw_percept)
            .unwrap();
        assert!(v.inner(&sys.psi_init).norm() < 1e-12);
        let out = v.apply_matrix(&sys.applied_init_reflector).unwrap();
        assert!((out.fidelity(&v) - 1.0).abs() < 1e-10);
        assert!((out.inner(&v).re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn composition_matches_ideal_reflection_on_busy_subspace() {
        let sys = QaaSystem::new(&biased()).unwrap();
        let l = &sys.layout;
        let na = l.dims()[0];
        // Busy basis: U_𝒮′|a, ε, ε⟩.
        let busy: Vec<StateVector> = (0..na)
            .map(|a| {
                StateVector::basis(l.clone(), &[a, 0, 0])
                    .unwrap()
                    .apply_matrix(&sys.raw_percept)
                    .unwrap()
            })
            .collect();
        let v = nalgebra::DVector::from_column_slice(sys.psi_init.amps());
        let ideal =
            DMatrix::<C64>::identity(l.total(), l.total()) - &v * v.adjoint() * C64::new(2.0, 0.0);
        let mut got = DMatrix::from_element(l.total(), na, ZERO);
        let mut want = got.clone();
        for (c, b) in busy.iter().enumerate() {
            // U′_init acting after U_𝒮′, mapped back into the busy subspace.
            let g = b.apply_matrix(&sys.applied_init_reflector).unwrap();
            let w = b.apply_matrix(&ideal).unwrap();
            for r in 0..l.total() {
                got[(r, c)] = g.amps()[r];
                want[(r, c)] = w.amps()[r];
            }
        }
        assert!(operator_distance(&got, &want) <= 1e-9);
    }

    #[test]
    fn zero_iterations_is_identity_and_quarter_overlap_rotates() {
        let sys = QaaSystem::new(&biased()).unwrap();
        let out = qaa(
            &sys.psi_init,
            &sys.applied_init_reflector,
            &sys.reward_reflector,
            0,
        )
        .unwrap();
        assert_eq!(out, sys.psi_init);
        // Overlap² = 1/2 gives θ = π/4 and fidelity sin²(3π/4) = 1/2 after one step.
        let half = StochasticEnv::coin(&[0.5, 0.5]).unwrap();
        let sys = QaaSystem::new(&half).unwrap();
        assert!((sys.overlap().powi(2) - 0.5).abs() < 1e-12);
        assert!((sys.simulated_fidelity(1).unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn target_action_distribution_matches_brute_force() {
        let env = biased();
        let sys = QaaSystem::new(&env).unwrap();
        let got = sys.psi_target.register_probabilities("A").unwrap();
        // Independent enumeration of P′(s, a | R = 1).
        let mut joint = [0.0; 2];
        for (a, p) in joint.iter_mut().enumerate() {
            for s in 0..2 {
                if env.reward(&[a], &[s]) {
                    *p += env.sequence_probability(&[a], &[s]);
                }
            }
        }
        let z: f64 = joint.iter().sum();
        for a in 0..2 {
            assert!((got[a] - joint[a] / z).abs() < 1e-12);
        }
        assert!((got[0] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn conditioned_reflector_is_the_exact_reflection() {
        let sys = QaaSystem::new(&biased()).unwrap();
        let v = nalgebra::DVector::from_column_slice(sys.psi_init.amps());
        let n = sys.layout.total();
        let ideal = DMatrix::<C64>::identity(n, n) - &v * v.adjoint() * C64::new(2.0, 0.0);
        assert!(operator_distance(&sys.conditioned_init_reflector, &ideal) <= 1e-12);
    }

    /// Three steps, percept bias driven by the last action.
    fn three_step(reward: impl Fn(&[usize], &[usize]) -> bool) -> StochasticEnv {
        StochasticEnv::from_fn(
            2,
            &["x", "y"],
            3,
            |a, s| {
                let b = 0.15 + 0.2 * a[a.len() - 1] as f64 + 0.1 * s.len() as f64;
                vec![b, 1.0 - b]
            },
            reward,
        )
        .unwrap()
    }

    #[test]
    fn literal_reflector_rotates_when_reward_ignores_percepts() {
        let sys = QaaSystem::new(&three_step(|a, _| a == [1, 0, 1])).unwrap();
        assert!(sys.max_trace_error(false).unwrap() <= 1e-12);
        assert!(sys.max_trace_error(true).unwrap() <= 1e-12);
    }

    #[test]
    fn literal_reflector_stalls_when_reward_reads_percepts() {
        // Symmetric coin: U_R ψ_init leaves the busy subspace and the literal
        // iteration never moves the target fidelity off its initial 0.05.
        let sys = QaaSystem::new(&StochasticEnv::coin(&[0.05, 0.05]).unwrap()).unwrap();
        for k in 0..=3 {
            assert!((sys.simulated_fidelity(k).unwrap() - 0.05).abs() < 1e-12);
        }
        assert!(sys.max_trace_error(true).unwrap() <= 1e-12);
        let sys = QaaSystem::new(&three_step(|_, s| s == [0, 0, 0])).unwrap();
        assert!(sys.max_trace_error(false).unwrap() > 0.1);
        assert!(sys.max_trace_error(true).unwrap() <= 1e-12);
    }
}
