//! Dense complex linear algebra at small fixed dimensions.
//!
//! Everything else in the crate — Hamiltonians, hierarchy generators,
//! entropy, concurrence — is built on the handful of primitives here:
//! Kronecker products, partial traces over one qubit, a cyclic-Jacobi
//! Hermitian eigensolver, and the positive-semidefinite matrix square root.
//! Matrices are dense row-major [`CMatrix`] values; dimensions stay small
//! (4×4 for two-qubit states, up to 4·N_ph ≤ 256 for the pseudomode joint
//! state), so no sparse machinery or external solver is warranted.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::{CMatrix, Error, Result};

/// Which qubit to keep when tracing out the other.
///
/// Qubit A is the left (slow) tensor factor, qubit B the right one, matching
/// the basis order `|11⟩, |10⟩, |01⟩, |00⟩ = |a b⟩` with a,b ∈ {1, 0}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Eigendecomposition of a Hermitian matrix.
///
/// `eigenvalues` are real and ascending; `eigenvectors` holds the matching
/// orthonormal eigenvectors as columns, so `U·diag(λ)·U†` reconstructs the
/// input.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

/// n×n identity.
pub fn identity(n: usize) -> CMatrix {
    Array2::eye(n)
}

/// Pauli x.
pub fn sigma_x() -> CMatrix {
    c_matrix(2, &[0.0, 1.0, 1.0, 0.0], &[0.0; 4])
}

/// Pauli y.
pub fn sigma_y() -> CMatrix {
    c_matrix(2, &[0.0; 4], &[0.0, -1.0, 1.0, 0.0])
}

/// Pauli z (basis order `|1⟩, |0⟩`, excited level first).
pub fn sigma_z() -> CMatrix {
    c_matrix(2, &[1.0, 0.0, 0.0, -1.0], &[0.0; 4])
}

/// Raising operator σ₊ = |1⟩⟨0|.
pub fn sigma_plus() -> CMatrix {
    c_matrix(2, &[0.0, 1.0, 0.0, 0.0], &[0.0; 4])
}

/// Lowering operator σ₋ = |0⟩⟨1|.
pub fn sigma_minus() -> CMatrix {
    c_matrix(2, &[0.0, 0.0, 1.0, 0.0], &[0.0; 4])
}

fn c_matrix(n: usize, re: &[f64], im: &[f64]) -> CMatrix {
    Array2::from_shape_fn((n, n), |(i, j)| C64::new(re[i * n + j], im[i * n + j]))
}

/// Kronecker product a ⊗ b.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = aij * b[[k, l]];
                }
            }
        }
    }
    out
}

/// Conjugate transpose.
pub fn dagger(a: &CMatrix) -> CMatrix {
    a.t().mapv(|z| z.conj())
}

/// Matrix trace.
pub fn trace(a: &CMatrix) -> C64 {
    a.diag().sum()
}

/// Commutator [a, b].
pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.dot(b) - b.dot(a)
}

/// Anticommutator {a, b}.
pub fn anti_commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.dot(b) + b.dot(a)
}

/// max |a_ij − conj(a_ji)|, the distance from being Hermitian.
pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    worst
}

/// Frobenius norm.
pub fn frobenius_norm(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Trace out one qubit of a 4×4 two-qubit state.
///
/// With the composite index `i = 2a + b` (a = qubit A level, b = qubit B
/// level), keeping A sums the B index pairwise and vice versa.
pub fn partial_trace(rho: &CMatrix, keep: Subsystem) -> Result<CMatrix> {
    if rho.dim() != (4, 4) {
        return Err(Error::InvalidInput(format!(
            "partial_trace expects a 4x4 matrix, got {}x{}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let mut out = Array2::zeros((2, 2));
    for i in 0..2 {
        for j in 0..2 {
            out[[i, j]] = match keep {
                Subsystem::A => rho[[2 * i, 2 * j]] + rho[[2 * i + 1, 2 * j + 1]],
                Subsystem::B => rho[[i, j]] + rho[[i + 2, j + 2]],
            };
        }
    }
    Ok(out)
}

/// Input-Hermiticity tolerance for the eigensolver.
const EIG_HERMITICITY_TOL: f64 = 1e-10;

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Each rotation is a unitary Givens transform G (identity except for
/// `G[p,p] = G[q,q] = c`, `G[p,q] = s`, `G[q,p] = −s̄`, with c real and
/// c² + |s|² = 1) chosen to annihilate the off-diagonal pair (p, q) of
/// A ← G†AG. Writing A[p,q] = |g|·e^{iφ} and τ = (A[q,q] − A[p,p])/(2|g|),
/// the classic real-Jacobi tangent t = sign(τ)/(|τ| + √(1 + τ²)) with
/// s = t·c·e^{iφ} does the job; the phase e^{iφ} is the only complex twist.
/// Sweeps repeat until the off-diagonal mass is at rounding level, which for
/// these dimensions (≤ 256) takes a handful of sweeps.
pub fn hermitian_eig(h: &CMatrix) -> Result<HermitianEigen> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(Error::InvalidInput(format!(
            "hermitian_eig expects a square matrix, got {}x{}",
            n,
            h.ncols()
        )));
    }
    let defect = hermiticity_defect(h);
    if defect > EIG_HERMITICITY_TOL {
        return Err(Error::InvalidInput(format!(
            "hermitian_eig: input is not Hermitian (defect {defect:.3e} > {EIG_HERMITICITY_TOL:.0e})"
        )));
    }

    // Work on the exactly-Hermitian part so rounding asymmetry cannot leak
    // into the rotations.
    let mut a: CMatrix = (h + &dagger(h)).mapv(|z| 0.5 * z);
    let mut v = identity(n);
    let scale = frobenius_norm(&a).max(1.0);
    let target = 1e-14 * scale;

    for _sweep in 0..64 {
        let mut off = 0.0_f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[[p, q]].norm_sqr();
            }
        }
        if (2.0 * off).sqrt() <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let g = a[[p, q]];
                let gn = g.norm();
                if gn <= f64::MIN_POSITIVE {
                    a[[p, q]] = C64::new(0.0, 0.0);
                    a[[q, p]] = C64::new(0.0, 0.0);
                    continue;
                }
                let phase = g / gn;
                let alpha = a[[p, p]].re;
                let beta = a[[q, q]].re;
                let tau = (beta - alpha) / (2.0 * gn);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = phase * (t * c);

                // Rotate rows/columns p and q of A (Hermitian update).
                for i in 0..n {
                    if i == p || i == q {
                        continue;
                    }
                    let aip = a[[i, p]];
                    let aiq = a[[i, q]];
                    a[[i, p]] = aip * c - aiq * s.conj();
                    a[[i, q]] = aip * s + aiq * c;
                    a[[p, i]] = a[[i, p]].conj();
                    a[[q, i]] = a[[i, q]].conj();
                }
                let cc = c * c;
                a[[p, p]] = C64::new((alpha + beta * t * t - 2.0 * gn * t) * cc, 0.0);
                a[[q, q]] = C64::new((alpha * t * t + beta + 2.0 * gn * t) * cc, 0.0);
                a[[p, q]] = C64::new(0.0, 0.0);
                a[[q, p]] = C64::new(0.0, 0.0);

                // Accumulate the eigenvector basis V ← V·G.
                for i in 0..n {
                    let vip = v[[i, p]];
                    let viq = v[[i, q]];
                    v[[i, p]] = vip * c - viq * s.conj();
                    v[[i, q]] = vip * s + viq * c;
                }
            }
        }
    }

    // Ascending eigenvalue order with the matching column permutation; the
    // stable sort keeps the ordering deterministic under ties.
    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[[i, i]].re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut eigenvectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            eigenvectors[[i, dst]] = v[[i, src]];
        }
    }
    Ok(HermitianEigen {
        eigenvalues,
        eigenvectors,
    })
}

/// Rebuild U·diag(f(λ))·U† from a decomposition: the matrix function f
/// applied to the original Hermitian operator. f may be complex-valued
/// (e.g. λ ↦ e^{iλ} for a unitary).
pub fn rebuild_with(eig: &HermitianEigen, f: impl Fn(f64) -> C64) -> CMatrix {
    let n = eig.eigenvalues.len();
    let u = &eig.eigenvectors;
    let mut out = Array2::zeros((n, n));
    for k in 0..n {
        let fv = f(eig.eigenvalues[k]);
        if fv.re == 0.0 && fv.im == 0.0 {
            continue;
        }
        for i in 0..n {
            let uik = fv * u[[i, k]];
            for j in 0..n {
                out[[i, j]] += uik * u[[j, k]].conj();
            }
        }
    }
    out
}

/// Hermitian PSD square root via the eigensolver.
///
/// Eigenvalues in (−`neg_floor`, 0) are treated as integration noise and
/// clamped to zero; anything at or below −`neg_floor` is a real negativity
/// and errors out.
pub(crate) fn psd_sqrt_clamped(m: &CMatrix, neg_floor: f64) -> Result<CMatrix> {
    let eig = hermitian_eig(m)?;
    if let Some(&lo) = eig
        .eigenvalues
        .iter()
        .find(|&&l| l <= -neg_floor)
    {
        return Err(Error::InvalidInput(format!(
            "psd_sqrt: materially negative eigenvalue {lo:.3e} (floor −{neg_floor:.0e})"
        )));
    }
    Ok(rebuild_with(&eig, |l| C64::new(l.max(0.0).sqrt(), 0.0)))
}

/// Hermitian PSD square root.
///
/// Small negative eigenvalues (integration noise) are clamped to zero;
/// eigenvalues ≤ −1e-8 are rejected as materially negative.
pub fn psd_sqrt(m: &CMatrix) -> Result<CMatrix> {
    psd_sqrt_clamped(m, 1e-8)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMatrix) -> Result<f64> {
    Ok(hermitian_eig(m)?.eigenvalues[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn kron_sigma_z_identity_is_diag() {
        let m = kron(&sigma_z(), &identity(2));
        let want = [1.0, 1.0, -1.0, -1.0];
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { want[i] } else { 0.0 };
                assert_abs_diff_eq!(m[[i, j]].re, expect, epsilon = 0.0);
                assert_abs_diff_eq!(m[[i, j]].im, 0.0, epsilon = 0.0);
            }
        }
    }

    #[test]
    fn kron_identities() {
        let m = kron(&identity(2), &identity(2));
        assert_eq!(m, identity(4));
    }

    #[test]
    fn kron_sigma_x_sigma_x_is_antidiagonal() {
        // σ_x⊗σ_x maps |11⟩↔|00⟩ and |10⟩↔|01⟩.
        let m = kron(&sigma_x(), &sigma_x());
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i + j == 3 { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(m[[i, j]].re, expect, epsilon = 0.0);
            }
        }
    }

    #[test]
    fn partial_trace_of_maximally_entangled_state_is_mixed() {
        // |Φ⟩ = (|10⟩ + |01⟩)/√2 lives on indices 1 and 2.
        let mut rho: CMatrix = Array2::zeros((4, 4));
        for i in [1, 2] {
            for j in [1, 2] {
                rho[[i, j]] = c(0.5, 0.0);
            }
        }
        for keep in [Subsystem::A, Subsystem::B] {
            let r = partial_trace(&rho, keep).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    let expect = if i == j { 0.5 } else { 0.0 };
                    assert_abs_diff_eq!(r[[i, j]].re, expect, epsilon = 1e-15);
                    assert_abs_diff_eq!(r[[i, j]].im, 0.0, epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn partial_trace_of_product_basis_state() {
        // |10⟩⟨10| is index 1; keeping A must give |1⟩⟨1|.
        let mut rho: CMatrix = Array2::zeros((4, 4));
        rho[[1, 1]] = c(1.0, 0.0);
        let ra = partial_trace(&rho, Subsystem::A).unwrap();
        assert_abs_diff_eq!(ra[[0, 0]].re, 1.0, epsilon = 0.0);
        assert_abs_diff_eq!(ra[[1, 1]].re, 0.0, epsilon = 0.0);
        let rb = partial_trace(&rho, Subsystem::B).unwrap();
        assert_abs_diff_eq!(rb[[1, 1]].re, 1.0, epsilon = 0.0);
    }

    #[test]
    fn partial_trace_of_asymptotic_state_is_maximally_mixed() {
        let rho = crate::model::asymptotic_common_state();
        // Block sums by hand: keeping B gives diag(1/3+1/6, 1/6+1/3) = I/2,
        // off-diagonal blocks are traceless here.
        let rb = partial_trace(&rho, Subsystem::B).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 0.5 } else { 0.0 };
                assert_abs_diff_eq!(rb[[i, j]].re, expect, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn eig_pauli_matrices() {
        for m in [sigma_x(), sigma_y(), sigma_z()] {
            let e = hermitian_eig(&m).unwrap();
            assert_abs_diff_eq!(e.eigenvalues[0], -1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(e.eigenvalues[1], 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn eig_asymptotic_state_spectrum() {
        // The single-excitation block (1/6 everywhere) has eigenvalues
        // (1/3, 0), so the characteristic polynomial factors as λ(λ−1/3)³.
        let e = hermitian_eig(&crate::model::asymptotic_common_state()).unwrap();
        let want = [0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
        for (got, want) in e.eigenvalues.iter().zip(want) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
        }
    }

    #[test]
    fn eig_reconstructs_and_is_orthonormal() {
        // A fixed non-trivial Hermitian 4×4.
        let mut h: CMatrix = Array2::zeros((4, 4));
        let entries = [
            (0, 0, 0.7, 0.0),
            (1, 1, -0.2, 0.0),
            (2, 2, 1.3, 0.0),
            (3, 3, 0.1, 0.0),
            (0, 1, 0.3, 0.4),
            (0, 3, -0.1, 0.25),
            (1, 2, 0.6, -0.2),
            (2, 3, 0.05, 0.7),
        ];
        for (i, j, re, im) in entries {
            h[[i, j]] = c(re, im);
            if i != j {
                h[[j, i]] = c(re, -im);
            }
        }
        let e = hermitian_eig(&h).unwrap();
        let u = &e.eigenvectors;
        let gram = dagger(u).dot(u);
        assert!(frobenius_norm(&(&gram - &identity(4))) < 1e-12);
        let rebuilt = rebuild_with(&e, |l| C64::new(l, 0.0));
        assert!(frobenius_norm(&(&rebuilt - &h)) < 1e-12);
        let tr: f64 = e.eigenvalues.iter().sum();
        assert_abs_diff_eq!(tr, trace(&h).re, epsilon = 1e-12);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let mut h: CMatrix = Array2::zeros((2, 2));
        h[[0, 1]] = c(1.0, 0.0);
        assert!(hermitian_eig(&h).is_err());
    }

    #[test]
    fn psd_sqrt_identity_and_diagonal() {
        assert!(frobenius_norm(&(&psd_sqrt(&identity(4)).unwrap() - &identity(4))) < 1e-13);
        let d = Array2::from_diag(&ndarray::arr1(&[
            c(4.0, 0.0),
            c(1.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
        ]));
        let s = psd_sqrt(&d).unwrap();
        assert_abs_diff_eq!(s[[0, 0]].re, 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(s[[1, 1]].re, 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(s[[2, 2]].re, 0.0, epsilon = 1e-13);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        // A Werner-type mixture: r·|Φ⟩⟨Φ| + (1−r)/4·I at r = 1/2.
        let mut rho = identity(4).mapv(|z| 0.125 * z);
        for i in [1, 2] {
            for j in [1, 2] {
                rho[[i, j]] += c(0.25, 0.0);
            }
        }
        let s = psd_sqrt(&rho).unwrap();
        assert!(hermiticity_defect(&s) < 1e-13);
        assert!(frobenius_norm(&(&s.dot(&s) - &rho)) < 1e-10);
    }

    #[test]
    fn psd_sqrt_rejects_material_negativity() {
        let d = Array2::from_diag(&ndarray::arr1(&[c(1.0, 0.0), c(-1e-6, 0.0)]));
        assert!(psd_sqrt(&d).is_err());
        // ...but clamps harmless noise.
        let d = Array2::from_diag(&ndarray::arr1(&[c(1.0, 0.0), c(-1e-12, 0.0)]));
        let s = psd_sqrt(&d).unwrap();
        assert_abs_diff_eq!(s[[1, 1]].re, 0.0, epsilon = 0.0);
    }
}
