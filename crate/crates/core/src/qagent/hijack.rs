//! Oracle synthesis by hijacking and scavenging environment registers.
//!
//! The environment is modelled by its memory: action registers `A1..AM`,
//! percept slots `P1..PM` (basis `{ε} ∪ 𝒮′`) and a reward qubit `R`. Step
//! `t` writes percept `t` into slot `Pt` with a controlled swap `ε ↔ s`,
//! which is its own inverse, and the last step flips `R` on rewarded
//! sequences.

use nalgebra::DMatrix;

use super::aq::ProtocolCost;
use crate::env::DeterministicTask;
use crate::error::{Error, Result};
use crate::qsim::{Layout, Register, StateVector, C64};
use crate::space::{decode, FiniteSpace};

/// Largest allowed `‖U − U†‖` and `‖U†U − 1‖` (max-entry norm).
const SELF_INVERSE_TOL: f64 = 1e-10;

/// Largest `n^M` replayed exhaustively when checking the classical limit.
const CLASSICAL_CHECK_ITEMS: usize = 1 << 12;

const REWARD: &str = "R";

fn action_reg(t: usize) -> String {
    format!("A{t}")
}

fn percept_reg(t: usize) -> String {
    format!("P{t}")
}

/// A deterministic episodic environment whose step maps are Hermitian.
#[derive(Clone, Debug)]
pub struct HermitianEnvExtension {
    n: usize,
    m: usize,
    layout: Layout,
    /// Map of step `t + 1`, on `[A1..A(t+1), P(t+1)]`.
    step_maps: Vec<DMatrix<C64>>,
    /// Reward flip on `[A1..AM, R]`.
    reward_map: DMatrix<C64>,
    rewarded: Vec<bool>,
}

/// Deliberate protocol faults, for checking that the comparison can fail.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum HijackMutation {
    #[default]
    None,
    /// Leave `|φ−⟩` in the reward slot for the second game.
    KeepPhiMinus,
    /// Implant `|φ+⟩` for the first game.
    NoKickback,
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn identity(d: usize) -> DMatrix<C64> {
    DMatrix::identity(d, d)
}

/// Identity with basis states `i` and `j` exchanged.
fn swap_pair(u: &mut DMatrix<C64>, i: usize, j: usize) {
    u[(i, i)] = c(0.0);
    u[(j, j)] = c(0.0);
    u[(i, j)] = c(1.0);
    u[(j, i)] = c(1.0);
}

fn self_inverse_deviation(u: &DMatrix<C64>) -> f64 {
    let herm = (u - u.adjoint())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let unit = (u.adjoint() * u - identity(u.nrows()))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    herm.max(unit)
}

/// Builds the self-inverse quantum extension of a deterministic task.
///
/// Percepts depend only on the action prefix, so each step map swaps `ε`
/// with the percept of that prefix (padded with action 0 to query the task).
pub fn build_hermitian_extension<T: DeterministicTask>(task: &T) -> Result<HermitianEnvExtension> {
    let spaces = task.spaces();
    let (n, m) = (spaces.num_actions(), spaces.epoch_len);
    let d = spaces.percepts.len();
    let mut step_maps = Vec::with_capacity(m);
    for t in 1..=m {
        let prefixes = n.pow(t as u32);
        let mut u = identity(prefixes * d);
        for p in 0..prefixes {
            let mut actions = decode(p, n, t);
            actions.resize(m, 0);
            let s = task.percepts_of(&actions)?[t - 1].index;
            if s != 0 {
                swap_pair(&mut u, p * d, p * d + s);
            }
        }
        step_maps.push(u);
    }
    let table = task.reward_table()?;
    let mut reward_map = identity(table.num_items() * 2);
    for w in table.winners() {
        swap_pair(&mut reward_map, 2 * w, 2 * w + 1);
    }
    let ext = HermitianEnvExtension::from_parts(&spaces.percepts, n, step_maps, reward_map)?;
    if ext.rewarded.len() <= CLASSICAL_CHECK_ITEMS {
        for code in 0..ext.rewarded.len() {
            let actions = decode(code, n, m);
            let want = task.percepts_of(&actions)?;
            let (slots, reward) = ext.classical_replay(&actions)?;
            let same = slots.iter().zip(&want).all(|(s, p)| *s == p.index);
            if !same || reward != table.is_marked(code) {
                return Err(Error::InvalidState(format!(
                    "quantum extension disagrees with the task on sequence {code}"
                )));
            }
        }
    }
    Ok(ext)
}

impl HermitianEnvExtension {
    /// Assembles an extension from explicit maps, checking that each is a
    /// Hermitian unitary.
    pub fn from_parts(
        percepts: &FiniteSpace,
        n: usize,
        step_maps: Vec<DMatrix<C64>>,
        reward_map: DMatrix<C64>,
    ) -> Result<Self> {
        let m = step_maps.len();
        let d = percepts.len();
        for (i, u) in step_maps.iter().enumerate() {
            let want = n.pow(i as u32 + 1) * d;
            if u.nrows() != want || u.ncols() != want {
                return Err(Error::LayoutMismatch(format!(
                    "step {} map is {}x{}, expected {want}",
                    i + 1,
                    u.nrows(),
                    u.ncols()
                )));
            }
        }
        let items = n.pow(m as u32);
        if reward_map.nrows() != 2 * items || reward_map.ncols() != 2 * items {
            return Err(Error::LayoutMismatch("reward map dimension".into()));
        }
        for u in step_maps.iter().chain([&reward_map]) {
            let dev = self_inverse_deviation(u);
            if dev > SELF_INVERSE_TOL {
                return Err(Error::ExtensionNotSelfInverse(dev));
            }
        }
        let mut regs = Vec::with_capacity(2 * m + 1);
        for t in 1..=m {
            regs.push(Register::indexed(&action_reg(t), n));
        }
        for t in 1..=m {
            regs.push(Register::new(&percept_reg(t), percepts.clone()));
        }
        regs.push(Register::indexed(REWARD, 2));
        let layout = Layout::new(regs)?;
        let rewarded = (0..items)
            .map(|i| reward_map[(2 * i + 1, 2 * i)].norm() > 0.5)
            .collect();
        Ok(Self {
            n,
            m,
            layout,
            step_maps,
            reward_map,
            rewarded,
        })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn epoch_len(&self) -> usize {
        self.m
    }

    pub fn num_actions(&self) -> usize {
        self.n
    }

    pub fn step_maps(&self) -> &[DMatrix<C64>] {
        &self.step_maps
    }

    pub fn reward_map(&self) -> &DMatrix<C64> {
        &self.reward_map
    }

    /// Whether action sequence `code` flips the reward qubit.
    pub fn is_rewarded(&self, code: usize) -> bool {
        self.rewarded[code]
    }

    /// Runs one game on a basis input: percept slot contents and reward bit.
    pub fn classical_replay(&self, actions: &[usize]) -> Result<(Vec<usize>, bool)> {
        let mut digits = vec![0; self.layout.registers().len()];
        digits[..self.m].copy_from_slice(actions);
        let psi = self.play(StateVector::basis(self.layout.clone(), &digits)?);
        let (idx, amp) = psi
            .amps()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .expect("non-empty state");
        if (amp.norm() - 1.0).abs() > SELF_INVERSE_TOL {
            return Err(Error::InvalidState(
                "step maps are not classical on basis inputs".into(),
            ));
        }
        let out = self.layout.decode(idx);
        Ok((out[self.m..2 * self.m].to_vec(), out[2 * self.m] == 1))
    }

    /// One full game: every step map in order, then the reward flip.
    fn play(&self, mut psi: StateVector) -> StateVector {
        for (i, u) in self.step_maps.iter().enumerate() {
            let mut pos: Vec<usize> = (0..=i).collect();
            pos.push(self.m + i);
            psi.apply_local(&pos, u);
        }
        let mut pos: Vec<usize> = (0..self.m).collect();
        pos.push(2 * self.m);
        psi.apply_local(&pos, &self.reward_map);
        psi
    }

    /// Input on the actions, `|ε…ε⟩` on the slots, `reward_slot` on `R`.
    fn embed(&self, input: &StateVector, reward_slot: [C64; 2]) -> Result<StateVector> {
        let items = self.rewarded.len();
        if input.amps().len() != items {
            return Err(Error::LayoutMismatch(format!(
                "input has {} amplitudes, expected {items} action sequences",
                input.amps().len()
            )));
        }
        let stride = self.layout.total() / items;
        let mut amps = vec![C64::new(0.0, 0.0); self.layout.total()];
        for (code, a) in input.amps().iter().enumerate() {
            amps[code * stride] = a * reward_slot[0];
            amps[code * stride + 1] = a * reward_slot[1];
        }
        StateVector::new(self.layout.clone(), amps)
    }
}

fn phi(sign: f64) -> [C64; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [c(h), c(sign * h)]
}

/// Synthesizes the phase-flip oracle from two games.
///
/// 1. The reward slot is hijacked with `|φ−⟩` and one game is played, so
///    the reward flip kicks back `(−1)^R` onto the actions.
/// 2. The percept registers are implanted back into the environment memory
///    with `|φ−⟩` exchanged for `|φ+⟩`.
/// 3. A second game runs the self-inverse step maps again, erasing the
///    percepts; the flip leaves `|φ+⟩` alone.
///
/// The output lives on the extension layout: `(−1)^R(a)` times the input on
/// the action registers, `|ε…ε⟩` on the slots and `|φ+⟩` on `R`.
pub fn hijack_scavenge_oracularize(
    ext: &HermitianEnvExtension,
    input: &StateVector,
) -> Result<(StateVector, ProtocolCost)> {
    hijack_with_mutation(ext, input, HijackMutation::None)
}

/// [`hijack_scavenge_oracularize`] with an optional injected fault.
pub fn hijack_with_mutation(
    ext: &HermitianEnvExtension,
    input: &StateVector,
    mutation: HijackMutation,
) -> Result<(StateVector, ProtocolCost)> {
    let m = ext.m as u64;
    let first = if mutation == HijackMutation::NoKickback {
        1.0
    } else {
        -1.0
    };
    // The reward slot starts hijacked, so the fiducial |0⟩ never appears.
    let psi = ext.embed(input, phi(first))?;
    let mut psi = ext.play(psi);
    if mutation != HijackMutation::KeepPhiMinus {
        // φ∓ → φ± on the reward slot; the percept slots go back untouched.
        let z = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(-1.0)]));
        psi.apply_local(&[2 * ext.m], &z);
    }
    let psi = ext.play(psi);
    let cost = ProtocolCost {
        oracle_games: 2,
        interaction_steps: 2 * m + (m + 1) + 2 * m,
        hijack_ops: m + 1,
        scavenge_ops: 2 * m,
    };
    Ok((psi, cost))
}

/// Frobenius distance between the synthesized map and
/// `phaseflip ⊗ |ε…ε, φ+⟩`, over all action-basis inputs.
pub fn synthesized_map_distance(
    ext: &HermitianEnvExtension,
    mutation: HijackMutation,
) -> Result<f64> {
    let items = ext.rewarded.len();
    let input_layout = Layout::new(vec![Register::indexed("A", items)])?;
    let mut total = 0.0;
    for code in 0..items {
        let input = StateVector::basis(input_layout.clone(), &[code])?;
        let (out, _) = hijack_with_mutation(ext, &input, mutation)?;
        let sign = if ext.rewarded[code] { -1.0 } else { 1.0 };
        let want = ext.embed(
            &StateVector::basis(input_layout.clone(), &[code])?,
            phi(1.0),
        )?;
        total += out
            .amps()
            .iter()
            .zip(want.amps())
            .map(|(o, w)| (o - w * sign).norm_sqr())
            .sum::<f64>();
    }
    Ok(total.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Environment, MazeEnv, MazeSpec, PerceptMode};
    use crate::qsim::{build_oracle, OracleKind, OracleSpec};
    use crate::rng::RngStream;
    use crate::space::encode;

    fn task(m: usize) -> MazeEnv {
        MazeEnv::with_mode(MazeSpec::line(2, m, m).unwrap(), PerceptMode::ArrowOnly).unwrap()
    }

    fn action_input(ext: &HermitianEnvExtension, amps: Vec<C64>) -> StateVector {
        let l = Layout::new(vec![Register::indexed("A", ext.rewarded.len())]).unwrap();
        StateVector::normalized(l, amps).unwrap()
    }

    #[test]
    fn classical_limit_matches_the_task() {
        let t = task(4);
        let ext = build_hermitian_extension(&t).unwrap();
        for code in 0..16 {
            let a = decode(code, 2, 4);
            let (slots, r) = ext.classical_replay(&a).unwrap();
            let want: Vec<usize> = t.percepts_of(&a).unwrap().iter().map(|p| p.index).collect();
            assert_eq!(slots, want);
            assert_eq!(r, t.reward_of(&a).unwrap());
        }
    }

    #[test]
    fn every_map_squares_to_identity() {
        let ext = build_hermitian_extension(&task(4)).unwrap();
        for u in ext.step_maps().iter().chain([ext.reward_map()]) {
            let sq = u * u - identity(u.nrows());
            assert!(sq.iter().all(|z| z.norm() <= 1e-10));
        }
    }

    #[test]
    fn reward_flip_negates_phi_minus() {
        let ext = build_hermitian_extension(&task(2)).unwrap();
        let w = encode(&MazeSpec::line_winner(2, 2), 2);
        let f = ext.reward_map();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut v = nalgebra::DVector::from_element(f.nrows(), c(0.0));
        v[2 * w] = c(h);
        v[2 * w + 1] = c(-h);
        let out = f * &v;
        assert!((out + v).norm() < 1e-12);
    }

    #[test]
    fn winning_basis_state_is_negated() {
        let ext = build_hermitian_extension(&task(3)).unwrap();
        let w = encode(&MazeSpec::line_winner(2, 3), 2);
        let mut amps = vec![c(0.0); 8];
        amps[w] = c(1.0);
        let input = action_input(&ext, amps);
        let (out, _) = hijack_scavenge_oracularize(&ext, &input).unwrap();
        let want = ext.embed(&input, phi(1.0)).unwrap();
        assert!((out.inner(&want) + c(1.0)).norm() < 1e-12);
    }

    #[test]
    fn uniform_input_matches_phaseflip_oracle() {
        let m = 3;
        let t = task(m);
        let ext = build_hermitian_extension(&t).unwrap();
        let input = action_input(&ext, vec![c(1.0); 8]);
        let (out, cost) = hijack_scavenge_oracularize(&ext, &input).unwrap();
        assert_eq!((cost.oracle_games, cost.interaction_steps), (2, 16));

        let oracle = build_oracle(&OracleSpec {
            kind: OracleKind::Phaseflip,
            table: t.reward_table().unwrap(),
        })
        .unwrap();
        let reference = oracle
            .apply_state(
                &StateVector::uniform(oracle.input_layout().clone()),
                &mut RngStream::new(0, 0),
            )
            .unwrap();
        let names: Vec<String> = (1..=m).map(action_reg).collect();
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let marginal = out.reduced(&names).unwrap();
        assert!(marginal.purity() >= 1.0 - 1e-10);
        let stride = ext.layout().total() / 8;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for code in 0..8 {
            let a = out.amps()[code * stride];
            assert!((a - reference.amps()[code] * h).norm() < 1e-12);
            assert!((a.re.abs() - h / 8f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn synthesized_oracle_is_exact_up_to_five_steps() {
        for m in 1..=5 {
            let ext = build_hermitian_extension(&task(m)).unwrap();
            assert!(
                synthesized_map_distance(&ext, HijackMutation::None).unwrap() <= 1e-9,
                "M={m}"
            );
        }
    }

    #[test]
    fn mutations_break_the_oracle() {
        let ext = build_hermitian_extension(&task(3)).unwrap();
        for mutation in [HijackMutation::KeepPhiMinus, HijackMutation::NoKickback] {
            assert!(synthesized_map_distance(&ext, mutation).unwrap() > 1.0);
        }
    }

    #[test]
    fn non_hermitian_map_is_rejected() {
        let ext = build_hermitian_extension(&task(2)).unwrap();
        let mut maps = ext.step_maps().to_vec();
        let d = maps[0].nrows();
        // A cyclic shift is unitary but not its own inverse.
        let mut shift = DMatrix::from_element(d, d, c(0.0));
        for i in 0..d {
            shift[((i + 1) % d, i)] = c(1.0);
        }
        maps[0] = shift;
        let percepts = task(2).spaces().percepts.clone();
        let r = HermitianEnvExtension::from_parts(&percepts, 2, maps, ext.reward_map().clone());
        assert!(matches!(r, Err(Error::ExtensionNotSelfInverse(_))));
    }

    #[test]
    fn cost_is_five_m_plus_one() {
        for m in 1..=4 {
            let ext = build_hermitian_extension(&task(m)).unwrap();
            let input = action_input(&ext, vec![c(1.0); 1 << m]);
            let (_, cost) = hijack_scavenge_oracularize(&ext, &input).unwrap();
            assert_eq!(cost.interaction_steps, 5 * m as u64 + 1);
            assert_eq!(
                cost.interaction_steps,
                cost.oracle_games * m as u64 + cost.hijack_ops + cost.scavenge_ops
            );
        }
    }
}
