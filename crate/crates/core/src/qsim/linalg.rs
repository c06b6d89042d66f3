use nalgebra::DMatrix;

use super::layout::Layout;
use super::{C64, ZERO};

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Frobenius norm of `a - b`, an upper bound on the spectral distance.
pub fn operator_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).norm()
}

/// Whether `U†U = 1` within `tol` entrywise.
pub fn is_unitary(u: &DMatrix<C64>, tol: f64) -> bool {
    if u.nrows() != u.ncols() {
        return false;
    }
    let p = u.adjoint() * u;
    p.iter().enumerate().all(|(k, z)| {
        let (i, j) = (k % p.nrows(), k / p.nrows());
        let want = if i == j { 1.0 } else { 0.0 };
        (z - C64::new(want, 0.0)).norm() <= tol
    })
}

/// Lifts an operator on `positions` (mixed-radix in that order) to the full
/// layout, acting as identity elsewhere.
pub fn embed_operator(layout: &Layout, positions: &[usize], local: &DMatrix<C64>) -> DMatrix<C64> {
    let total = layout.total();
    let sub = layout.sub_dim(positions);
    assert_eq!(local.nrows(), sub, "local operator dimension");
    let mut out = DMatrix::from_element(total, total, ZERO);
    for base in layout.bases_outside(positions) {
        for c in 0..sub {
            let col = layout.scatter(base, positions, c);
            for r in 0..sub {
                let v = local[(r, c)];
                if v != ZERO {
                    out[(layout.scatter(base, positions, r), col)] = v;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::layout::Register;

    #[test]
    fn embed_x_on_second_qubit() {
        let l = Layout::new(vec![Register::indexed("a", 2), Register::indexed("b", 2)]).unwrap();
        let x =
            DMatrix::from_row_slice(2, 2, &[ZERO, C64::new(1.0, 0.0), C64::new(1.0, 0.0), ZERO]);
        let full = embed_operator(&l, &[1], &x);
        // |00> -> |01>, |10> -> |11>
        assert_eq!(full[(1, 0)], C64::new(1.0, 0.0));
        assert_eq!(full[(3, 2)], C64::new(1.0, 0.0));
        assert!(is_unitary(&full, 1e-12));
    }

    #[test]
    fn eigenvalues_of_pauli_y() {
        let y =
            DMatrix::from_row_slice(2, 2, &[ZERO, C64::new(0.0, -1.0), C64::new(0.0, 1.0), ZERO]);
        let ev = hermitian_eigenvalues(&y);
        assert!((ev[0] + 1.0).abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);
    }
}
