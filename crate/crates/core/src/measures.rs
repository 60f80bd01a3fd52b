//! Quantum-correlation functionals on two-qubit states.
//!
//! Everything here is a pure function of a density matrix: von Neumann
//! entropy, mutual information, Wootters concurrence, and quantum discord,
//! the last defined as
//!
//! ```text
//!   D(ρ) = I(ρ) − J(ρ),     J(ρ) = max over projective measurements on B of
//!                           S(ρ_A) − Σ_k p_k S(ρ_k),
//! ```
//!
//! with the maximum taken over rank-1 orthogonal projector pairs on qubit B.
//! The optimizer is deliberately boring: a uniform 64×64 grid over the Bloch
//! angles (θ, φ) followed by Nelder–Mead refinement seeded with the three
//! best grid points. Closed-form X-state discord shortcuts are avoided on
//! purpose — they are known to fail on corner cases — and discord is cheap
//! enough here that correctness wins.
//!
//! Entropies are in nats (natural logarithm); [`nats_to_bits`] converts when
//! base-2 output is wanted.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::operators::{
    dagger, hermitian_eig, hermiticity_defect, kron, partial_trace, psd_sqrt_clamped, sigma_y,
    Subsystem,
};
use crate::{CMatrix, Error, Result};

/// Gross-defect guard for measure inputs. Trajectory states carry a little
/// integration noise (the solvers certify Hermiticity to 1e-8 and
/// eigenvalues to −1e-6), so measures accept that much and symmetrize before
/// diagonalizing; anything worse is a real invariant violation.
const INPUT_HERM_TOL: f64 = 1e-6;
/// Eigenvalues of states reaching the measures may dip this far below zero
/// before being treated as corrupt rather than noisy.
const INPUT_EIG_FLOOR: f64 = 1e-6;
/// Measurement branches with less probability than this are omitted.
const PROB_FLOOR: f64 = 1e-12;

/// Bloch angles (θ ∈ [0, π], φ ∈ [0, 2π)) of a projective measurement on
/// qubit B: |n⟩ = cos(θ/2)|1⟩ + e^{iφ}·sin(θ/2)|0⟩, projectors |n⟩⟨n| and
/// its orthogonal complement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementProjector {
    pub theta: f64,
    pub phi: f64,
}

impl MeasurementProjector {
    /// The measurement direction and its orthogonal complement as 2×2
    /// state vectors (|n⟩, |n⊥⟩).
    fn directions(&self) -> ([C64; 2], [C64; 2]) {
        let (s, c) = (0.5 * self.theta).sin_cos();
        let phase = C64::new(0.0, self.phi).exp();
        let n = [C64::new(c, 0.0), phase * s];
        let n_perp = [C64::new(s, 0.0), -phase * c];
        (n, n_perp)
    }

    /// Rank-1 projector pair (Π₊, Π₋) on qubit B.
    pub fn projectors(&self) -> (CMatrix, CMatrix) {
        let (n, n_perp) = self.directions();
        let outer = |v: [C64; 2]| {
            Array2::from_shape_fn((2, 2), |(i, j)| v[i] * v[j].conj())
        };
        (outer(n), outer(n_perp))
    }
}

/// Everything the discord optimization produces, in nats.
#[derive(Debug, Clone, Copy)]
pub struct DiscordResult {
    pub discord: f64,
    pub classical_correlation: f64,
    pub mutual_information: f64,
    /// (θ, φ) of the maximizing measurement on qubit B.
    pub optimal_angles: (f64, f64),
}

/// Convert an entropy-like quantity from nats to bits.
pub fn nats_to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

fn check_input(rho: &CMatrix) -> Result<CMatrix> {
    let defect = hermiticity_defect(rho);
    if defect > INPUT_HERM_TOL {
        return Err(Error::InvalidInput(format!(
            "state is not Hermitian (defect {defect:.3e})"
        )));
    }
    Ok((rho + &dagger(rho)).mapv(|z| 0.5 * z))
}

fn entropy_from_eigenvalues(eigs: impl IntoIterator<Item = f64>) -> Result<f64> {
    let mut s = 0.0;
    for l in eigs {
        if l < -INPUT_EIG_FLOOR {
            return Err(Error::InvalidInput(format!(
                "state has negative eigenvalue {l:.3e}"
            )));
        }
        if l > 0.0 {
            s -= l * l.ln();
        }
    }
    Ok(s)
}

/// Von Neumann entropy −Tr ρ ln ρ in nats, for a density matrix of any
/// dimension. Eigenvalues within the integration-noise floor of zero
/// contribute nothing (0·ln 0 = 0 by continuity).
pub fn entropy(rho: &CMatrix) -> Result<f64> {
    let rho = check_input(rho)?;
    entropy_from_eigenvalues(hermitian_eig(&rho)?.eigenvalues)
}

/// Closed-form entropy of a 2×2 Hermitian PSD matrix given as (trace-scaled)
/// entries; eigenvalues come from the trace and determinant.
fn entropy_2x2(m00: f64, m11: f64, m01: C64) -> Result<f64> {
    let tr = m00 + m11;
    let det = m00 * m11 - m01.norm_sqr();
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    entropy_from_eigenvalues([0.5 * (tr + disc), 0.5 * (tr - disc)])
}

/// Mutual information I(ρ) = S(ρ_A) + S(ρ_B) − S(ρ) in nats.
pub fn mutual_information(rho: &CMatrix) -> Result<f64> {
    let rho = check_input(rho)?;
    let sa = entropy(&partial_trace(&rho, Subsystem::A)?)?;
    let sb = entropy(&partial_trace(&rho, Subsystem::B)?)?;
    Ok(sa + sb - entropy(&rho)?)
}

/// Measure qubit B with the projector pair of `m` and return the surviving
/// branches as (probability, post-measurement 4×4 state); branches below the
/// probability floor are omitted.
pub fn conditional_ensemble(
    rho: &CMatrix,
    m: &MeasurementProjector,
) -> Result<Vec<(f64, CMatrix)>> {
    let rho = check_input(rho)?;
    if rho.dim() != (4, 4) {
        return Err(Error::InvalidInput(
            "conditional_ensemble expects a two-qubit state".into(),
        ));
    }
    let (pp, pm) = m.projectors();
    let mut out = Vec::with_capacity(2);
    for proj in [pp, pm] {
        let big = kron(&crate::operators::identity(2), &proj);
        let projected = big.dot(&rho).dot(&big);
        let p = crate::operators::trace(&projected).re;
        if p < PROB_FLOOR {
            continue;
        }
        out.push((p, projected.mapv(|z| z / p)));
    }
    Ok(out)
}

/// Conditional-entropy sum Σ_k p_k S(ρ_k) for the measurement direction `n`
/// (or its complement), evaluated without building 4×4 intermediates.
///
/// With the composite index (a, b), the unnormalized conditional state of A
/// is N[a,a'] = ⟨n| B_{a,a'} |n⟩ where B_{a,a'} is the 2×2 B-block of ρ, and
/// its branch probability is Tr N. The branch entropy only needs the 2×2
/// trace/determinant pair, so the whole evaluation is a handful of complex
/// multiplies — this is the discord optimizer's inner loop.
fn conditional_entropy_fast(rho: &CMatrix, n: &[C64; 2], n_perp: &[C64; 2]) -> Result<f64> {
    let mut total = 0.0;
    for v in [n, n_perp] {
        // N[a,a'] = Σ_{b,b'} conj(v_b) ρ[2a+b, 2a'+b'] v_{b'}
        let mut nmat = [[C64::new(0.0, 0.0); 2]; 2];
        for a in 0..2 {
            for a2 in 0..2 {
                let mut acc = C64::new(0.0, 0.0);
                for b in 0..2 {
                    for b2 in 0..2 {
                        acc += v[b].conj() * rho[[2 * a + b, 2 * a2 + b2]] * v[b2];
                    }
                }
                nmat[a][a2] = acc;
            }
        }
        let p = nmat[0][0].re + nmat[1][1].re;
        if p < PROB_FLOOR {
            continue;
        }
        let s = entropy_2x2(
            nmat[0][0].re / p,
            nmat[1][1].re / p,
            nmat[0][1] / p,
        )?;
        total += p * s;
    }
    Ok(total)
}

/// Classical correlation J(ρ) = max over B-measurements of
/// S(ρ_A) − Σ_k p_k S(ρ_k), together with the maximizing Bloch angles.
pub fn classical_correlation(rho: &CMatrix) -> Result<(f64, (f64, f64))> {
    let rho = check_input(rho)?;
    if rho.dim() != (4, 4) {
        return Err(Error::InvalidInput(
            "classical_correlation expects a two-qubit state".into(),
        ));
    }
    let sa = entropy(&partial_trace(&rho, Subsystem::A)?)?;
    let q = |theta: f64, phi: f64| -> Result<f64> {
        let (n, n_perp) = MeasurementProjector { theta, phi }.directions();
        Ok(sa - conditional_entropy_fast(&rho, &n, &n_perp)?)
    };

    // Stage 1: uniform 64×64 grid. θ uses midpoints so the poles (where φ is
    // degenerate) are not oversampled; φ is periodic so plain spacing works.
    const GRID: usize = 64;
    let mut best: Vec<(f64, [f64; 2])> = Vec::with_capacity(GRID * GRID);
    for i in 0..GRID {
        let theta = std::f64::consts::PI * (i as f64 + 0.5) / GRID as f64;
        for j in 0..GRID {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / GRID as f64;
            best.push((q(theta, phi)?, [theta, phi]));
        }
    }
    best.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    best.truncate(3);

    // Stage 2: Nelder–Mead from the three best grid points, maximizing Q
    // (Q is smooth and 2π-periodic, so the vertices roam freely).
    let simplex = [best[0].1, best[1].1, best[2].1];
    let (angles, refined) = nelder_mead_max(
        |x| q(x[0], x[1]),
        simplex,
        1e-9,
        400,
    )?;

    if refined >= best[0].0 {
        Ok((refined, (angles[0], angles[1])))
    } else {
        Ok((best[0].0, (best[0].1[0], best[0].1[1])))
    }
}

/// Nelder–Mead maximization on ℝ² with the standard reflection/expansion/
/// contraction/shrink coefficients (1, 2, ½, ½); stops when the spread of
/// the vertex values drops below `tol` or after `max_iter` steps. The best
/// vertex only ever improves, so the result is at least as good as the
/// starting simplex.
fn nelder_mead_max(
    f: impl Fn([f64; 2]) -> Result<f64>,
    simplex: [[f64; 2]; 3],
    tol: f64,
    max_iter: usize,
) -> Result<([f64; 2], f64)> {
    let mut pts: Vec<([f64; 2], f64)> = Vec::with_capacity(3);
    for x in simplex {
        pts.push((x, f(x)?));
    }
    for _ in 0..max_iter {
        // Descending by value: pts[0] is the best vertex, pts[2] the worst.
        pts.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        if pts[0].1 - pts[2].1 < tol {
            break;
        }
        let centroid = [
            0.5 * (pts[0].0[0] + pts[1].0[0]),
            0.5 * (pts[0].0[1] + pts[1].0[1]),
        ];
        let worst = pts[2];
        let at = |coef: f64| {
            [
                centroid[0] + coef * (centroid[0] - worst.0[0]),
                centroid[1] + coef * (centroid[1] - worst.0[1]),
            ]
        };
        let xr = at(1.0);
        let fr = f(xr)?;
        if fr > pts[0].1 {
            let xe = at(2.0);
            let fe = f(xe)?;
            pts[2] = if fe > fr { (xe, fe) } else { (xr, fr) };
        } else if fr > pts[1].1 {
            pts[2] = (xr, fr);
        } else {
            let xc = at(-0.5);
            let fc = f(xc)?;
            if fc > worst.1 {
                pts[2] = (xc, fc);
            } else {
                // Shrink toward the best vertex.
                for k in 1..3 {
                    let x = [
                        0.5 * (pts[0].0[0] + pts[k].0[0]),
                        0.5 * (pts[0].0[1] + pts[k].0[1]),
                    ];
                    pts[k] = (x, f(x)?);
                }
            }
        }
    }
    pts.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    Ok((pts[0].0, pts[0].1))
}

/// Quantum discord D(ρ) = I(ρ) − J(ρ), measurement on qubit B.
pub fn discord(rho: &CMatrix) -> Result<DiscordResult> {
    let mi = mutual_information(rho)?;
    let (j, angles) = classical_correlation(rho)?;
    Ok(DiscordResult {
        discord: mi - j,
        classical_correlation: j,
        mutual_information: mi,
        optimal_angles: angles,
    })
}

/// Wootters concurrence via the Hermitian formulation: the descending
/// eigenvalues μ_i of √ρ·ρ̃·√ρ with ρ̃ = (σ_y⊗σ_y)ρ*(σ_y⊗σ_y) give
/// C = max{0, √μ₁ − √μ₂ − √μ₃ − √μ₄}.
pub fn concurrence(rho: &CMatrix) -> Result<f64> {
    let rho = check_input(rho)?;
    if rho.dim() != (4, 4) {
        return Err(Error::InvalidInput(
            "concurrence expects a two-qubit state".into(),
        ));
    }
    let yy = kron(&sigma_y(), &sigma_y());
    let rho_tilde = yy.dot(&rho.mapv(|z| z.conj())).dot(&yy);
    let sqrt_rho = psd_sqrt_clamped(&rho, INPUT_EIG_FLOOR)?;
    let m = sqrt_rho.dot(&rho_tilde).dot(&sqrt_rho);
    let mut mu = hermitian_eig(&m)?.eigenvalues;
    mu.reverse();
    // μ values that are mathematically zero come out of the eigensolver as
    // O(ε) noise whose square root would be O(√ε); a floor relative to the
    // leading eigenvalue suppresses that without touching genuine spectrum.
    let floor = mu[0].max(0.0) * 1e-12;
    let root = |x: f64| if x > floor { x.sqrt() } else { 0.0 };
    Ok((root(mu[0]) - root(mu[1]) - root(mu[2]) - root(mu[3])).max(0.0))
}

/// Pattern tolerance for [`concurrence_x`] and the X-state propagator.
pub const X_FORM_TOL: f64 = 1e-10;

/// True when ρ is an X-matrix: nonzero entries only on the diagonal and
/// anti-diagonal (within `tol`).
pub fn is_x_form(rho: &CMatrix, tol: f64) -> bool {
    rho.indexed_iter()
        .all(|((i, j), z)| i == j || i + j == 3 || z.norm() <= tol)
}

/// X-state concurrence closed form
/// C = 2·max{0, |ρ₂₃| − √(ρ₁₁ρ₄₄), |ρ₁₄| − √(ρ₂₂ρ₃₃)}.
///
/// Errors when the state is not X-form; use [`concurrence`] for general
/// states.
pub fn concurrence_x(rho: &CMatrix) -> Result<f64> {
    let rho = check_input(rho)?;
    if rho.dim() != (4, 4) {
        return Err(Error::InvalidInput(
            "concurrence_x expects a two-qubit state".into(),
        ));
    }
    if !is_x_form(&rho, X_FORM_TOL) {
        return Err(Error::InvalidInput(
            "concurrence_x: state is not X-form".into(),
        ));
    }
    let pop = |i: usize| rho[[i, i]].re.max(0.0);
    let inner = rho[[1, 2]].norm() - (pop(0) * pop(3)).sqrt();
    let outer = rho[[0, 3]].norm() - (pop(1) * pop(2)).sqrt();
    Ok(2.0 * inner.max(outer).max(0.0))
}
