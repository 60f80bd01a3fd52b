//! Helpers shared by the integration tests: an independent dense
//! matrix-exponential oracle and seeded random-state generators.
//!
//! Each integration-test binary compiles this module separately and uses a
//! different subset, so unused-item lints are silenced here.
#![allow(dead_code)]

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qcorr_core::CMatrix;

/// Matrix 1-norm (max absolute column sum).
fn one_norm(a: &CMatrix) -> f64 {
    let (n, m) = a.dim();
    (0..m)
        .map(|j| (0..n).map(|i| a[[i, j]].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Dense matrix exponential by scaling and squaring with a Taylor series —
/// deliberately simple and structurally unrelated to the RK4 integrators it
/// cross-checks.
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.dim().0;
    assert_eq!(a.dim().0, a.dim().1);
    let norm = one_norm(a);
    let s = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as u32
    } else {
        0
    };
    let b = a.mapv(|z| z / 2f64.powi(s as i32));
    let mut result: CMatrix = Array2::eye(n);
    let mut term: CMatrix = Array2::eye(n);
    for k in 1..=60 {
        term = term.dot(&b).mapv(|z| z / k as f64);
        result = result + &term;
        let tn = one_norm(&term);
        if tn < 1e-20 * one_norm(&result).max(1.0) {
            break;
        }
    }
    for _ in 0..s {
        result = result.dot(&result);
    }
    result
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_complex_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    Array2::from_shape_fn((n, n), |_| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

/// Random full-rank density matrix ρ = GG†/tr(GG†).
pub fn random_density(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let g = random_complex_matrix(rng, n);
    let gg = g.dot(&qcorr_core::operators::dagger(&g));
    let tr: C64 = gg.diag().sum();
    gg.mapv(|z| z / tr.re)
}

/// Random pure-state projector |ψ⟩⟨ψ|.
pub fn random_pure(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let psi: Vec<C64> = (0..n)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Array2::from_shape_fn((n, n), |(i, j)| psi[i] * psi[j].conj() / (norm * norm))
}

/// Random two-qubit X-form density matrix: positive diagonal plus
/// anti-diagonal coherences scaled inside the positivity bounds.
pub fn random_x_state(rng: &mut ChaCha8Rng) -> CMatrix {
    let mut p = [0.0f64; 4];
    let mut tot = 0.0;
    for v in p.iter_mut() {
        *v = rng.gen_range(0.01..1.0);
        tot += *v;
    }
    for v in p.iter_mut() {
        *v /= tot;
    }
    // The X matrix splits into the {|11⟩,|00⟩} and {|10⟩,|01⟩} blocks;
    // each is PSD iff its coherence is bounded by the geometric mean of its
    // populations: |ρ₁₄| ≤ √(ρ₁₁ρ₄₄), |ρ₂₃| ≤ √(ρ₂₂ρ₃₃).
    let c14 = rng.gen_range(0.0..1.0) * (p[0] * p[3]).sqrt();
    let c23 = rng.gen_range(0.0..1.0) * (p[1] * p[2]).sqrt();
    let ph14 = rng.gen_range(0.0..std::f64::consts::TAU);
    let ph23 = rng.gen_range(0.0..std::f64::consts::TAU);
    let mut rho: CMatrix = Array2::zeros((4, 4));
    for (i, v) in p.iter().enumerate() {
        rho[[i, i]] = C64::new(*v, 0.0);
    }
    rho[[0, 3]] = C64::from_polar(c14, ph14);
    rho[[3, 0]] = rho[[0, 3]].conj();
    rho[[1, 2]] = C64::from_polar(c23, ph23);
    rho[[2, 1]] = rho[[1, 2]].conj();
    rho
}

/// Random 2×2 unitary e^{iH} from a random Hermitian H.
pub fn random_unitary_2(rng: &mut ChaCha8Rng) -> CMatrix {
    let a = rng.gen_range(-2.0..2.0);
    let d = rng.gen_range(-2.0..2.0);
    let off = C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
    let mut h: CMatrix = Array2::zeros((2, 2));
    h[[0, 0]] = C64::new(a, 0.0);
    h[[1, 1]] = C64::new(d, 0.0);
    h[[0, 1]] = off;
    h[[1, 0]] = off.conj();
    let eig = qcorr_core::operators::hermitian_eig(&h).unwrap();
    qcorr_core::operators::rebuild_with(&eig, |x| C64::new(0.0, x).exp())
}
