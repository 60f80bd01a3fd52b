//! Rotating-wave baselines: the closed-form single-excitation solution for
//! independent baths and the pseudomode master equation for a common bath.
//!
//! Within the rotating-wave approximation each qubit coupled to a resonant
//! Lorentzian bath has an excited-population envelope
//!
//! ```text
//!   P(t) = e^{−γt} [cos(Rt) + (γ/2R) sin(Rt)]²,   R = √(λγ/2 − γ²/4),
//! ```
//!
//! which is real for any sign of the radicand (R turns imaginary and the
//! trig functions turn hyperbolic). P drives a closed map on X-form states,
//! giving analytic concurrence curves for the Bell families. Beyond-RWA
//! dynamics from the hierarchy solver is compared against these baselines.
//!
//! The pseudomode route replaces the common Lorentzian bath by one damped
//! harmonic mode: on the coupled basis {|0⟩, |+⟩, |−⟩, |2⟩} ⊗ Fock(n_ph) the
//! joint state evolves under
//!
//! ```text
//!   dρ/dt = −i[H, ρ] − γ (a†a ρ + ρ a†a − 2 a ρ a†),
//!   H = diag(−ω̄, 0, 0, ω̄) ⊗ 1 + ω_c 1 ⊗ a†a + √(λγ) (S₊ a + S₋ a†),
//! ```
//!
//! with S₊ = |+⟩⟨0| + |2⟩⟨+| and ω̄ the common qubit splitting (shifted to a
//! frame where the |±⟩ pair sits at zero). Tracing out the mode recovers the
//! two-qubit state exactly for a Lorentzian spectral density, which makes
//! this an independent cross-check of the common-bath hierarchy.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::heom::grid_substep;
use crate::measures::{is_x_form, X_FORM_TOL};
use crate::model::{BathSpec, SystemSpec, Topology};
use crate::{CMatrix, Error, Result};

/// Parameters of the excited-state envelope P(t).
#[derive(Debug, Clone, Copy)]
pub struct PFunctionParams {
    pub lambda: f64,
    pub gamma: f64,
}

impl PFunctionParams {
    pub fn new(lambda: f64, gamma: f64) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "P function: lambda must be ≥ 0, got {lambda}"
            )));
        }
        if !(gamma > 0.0) {
            return Err(Error::InvalidInput(format!(
                "P function: gamma must be > 0, got {gamma}"
            )));
        }
        Ok(PFunctionParams { lambda, gamma })
    }

    pub fn from_bath(bath: &BathSpec) -> Result<Self> {
        Self::new(bath.lambda, bath.gamma)
    }

    /// R² = λγ/2 − γ²/4; positive in the oscillatory (non-Markovian) regime.
    pub fn r_squared(&self) -> f64 {
        0.5 * self.lambda * self.gamma - 0.25 * self.gamma * self.gamma
    }

    /// R as a complex number so the same expression covers both regimes.
    /// At the critically damped point R → 0 the envelope has a removable
    /// 0/0; a tiny positive R substitutes for the limit well inside the
    /// surrounding floating-point error.
    fn r_complex(&self) -> C64 {
        let r2 = self.r_squared();
        if r2.abs() < 1e-16 {
            C64::new(1e-8, 0.0)
        } else {
            C64::new(r2, 0.0).sqrt()
        }
    }
}

/// The envelope P(t) itself. Exactly 1 at t = 0, confined to [0, 1].
pub fn p_function(t: f64, params: &PFunctionParams) -> f64 {
    let r = params.r_complex();
    let z = r * t;
    // cos(Rt) + (γ/2R) sin(Rt) is real for real or purely imaginary R; the
    // imaginary part below is pure roundoff.
    let g = z.cos() + z.sin() * (0.5 * params.gamma / r);
    ((-params.gamma * t).exp() * g.re * g.re).clamp(0.0, 1.0)
}

/// The first `count` zeros of P(t), found by scanning g(t) = cos(Rt) +
/// (γ/2R) sin(Rt) for sign changes and bisecting each bracket. Empty in the
/// Markovian regime (R² ≤ 0), where P never vanishes.
pub fn p_zero_times(params: &PFunctionParams, count: usize) -> Vec<f64> {
    let r2 = params.r_squared();
    if r2 <= 0.0 || count == 0 {
        return Vec::new();
    }
    let r = r2.sqrt();
    let g = |t: f64| (r * t).cos() + 0.5 * params.gamma / r * (r * t).sin();
    // Zeros of g are π/R apart; a scan step of a small fraction of that
    // cannot skip over a bracket.
    let step = std::f64::consts::PI / (16.0 * r);
    let mut zeros = Vec::with_capacity(count);
    let mut t0 = 0.0;
    let mut g0 = g(t0);
    while zeros.len() < count {
        let t1 = t0 + step;
        let g1 = g(t1);
        if g0 == 0.0 {
            zeros.push(t0);
        } else if g0 * g1 < 0.0 {
            let (mut lo, mut hi) = (t0, t1);
            let mut glo = g0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let gm = g(mid);
                if glo * gm <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    glo = gm;
                }
                if hi - lo < 1e-14 * hi.max(1.0) {
                    break;
                }
            }
            zeros.push(0.5 * (lo + hi));
        }
        t0 = t1;
        g0 = g1;
    }
    zeros.truncate(count);
    zeros
}

/// Propagate an X-form two-qubit state for time `t` under independent
/// resonant baths in the rotating-wave approximation. The map acts on the
/// populations (in the |11⟩, |10⟩, |01⟩, |00⟩ basis) and the two X
/// coherences:
///
/// ```text
///   ρ₁₁ → ρ₁₁ P²            ρ₁₄ → ρ₁₄ P
///   ρ₂₂ → ρ₂₂ P + ρ₁₁ P(1−P)   ρ₂₃ → ρ₂₃ P
///   ρ₃₃ → ρ₃₃ P + ρ₁₁ P(1−P)
///   ρ₄₄ → 1 − ρ₁₁ − ρ₂₂ − ρ₃₃   (trace completion)
/// ```
///
/// Requires equal baths on both qubits (one `params`), which is the regime
/// where the closed form holds.
pub fn rwa_propagate_x(rho0: &CMatrix, t: f64, params: &PFunctionParams) -> Result<CMatrix> {
    crate::model::validate_density(rho0)?;
    if !is_x_form(rho0, X_FORM_TOL) {
        return Err(Error::InvalidInput(
            "RWA propagator requires an X-form state (nonzero entries only on the \
             diagonal and anti-diagonal)"
                .into(),
        ));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "propagation time must be ≥ 0, got {t}"
        )));
    }
    let p = p_function(t, params);
    let r11 = rho0[[0, 0]].re;
    let r22 = rho0[[1, 1]].re;
    let r33 = rho0[[2, 2]].re;
    let n11 = r11 * p * p;
    let n22 = r22 * p + r11 * p * (1.0 - p);
    let n33 = r33 * p + r11 * p * (1.0 - p);
    let n44 = 1.0 - n11 - n22 - n33;
    let mut out: CMatrix = Array2::zeros((4, 4));
    out[[0, 0]] = C64::new(n11, 0.0);
    out[[1, 1]] = C64::new(n22, 0.0);
    out[[2, 2]] = C64::new(n33, 0.0);
    out[[3, 3]] = C64::new(n44, 0.0);
    out[[0, 3]] = rho0[[0, 3]] * p;
    out[[3, 0]] = rho0[[3, 0]] * p;
    out[[1, 2]] = rho0[[1, 2]] * p;
    out[[2, 1]] = rho0[[2, 1]] * p;
    Ok(out)
}

/// Closed-form RWA concurrence of |Φ⟩ = α|10⟩ + √(1−α²)|01⟩ under
/// independent baths: C(t) = max{0, 2α√(1−α²) P(t)}.
pub fn rwa_concurrence_phi(alpha: f64, t: f64, params: &PFunctionParams) -> Result<f64> {
    check_alpha(alpha)?;
    let p = p_function(t, params);
    Ok((2.0 * alpha * (1.0 - alpha * alpha).sqrt() * p).max(0.0))
}

/// Closed-form RWA concurrence of |Ψ⟩ = α|00⟩ + √(1−α²)|11⟩ under
/// independent baths: C(t) = max{0, 2√(1−α²) P [α − √(1−α²)(1−P)]}. Unlike
/// the Φ family this can hit zero at finite time (sudden death).
pub fn rwa_concurrence_psi(alpha: f64, t: f64, params: &PFunctionParams) -> Result<f64> {
    check_alpha(alpha)?;
    let beta = (1.0 - alpha * alpha).sqrt();
    let p = p_function(t, params);
    Ok((2.0 * beta * p * (alpha - beta * (1.0 - p))).max(0.0))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidInput(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    Ok(())
}

/// Default and hard ceiling for the pseudomode Fock-space cutoff.
pub const PSEUDOMODE_DEFAULT_NPH: usize = 32;
const PSEUDOMODE_MAX_NPH: usize = 64;
/// Population allowed in the top Fock level before the cutoff is deemed
/// violated.
const FOCK_CUTOFF_TOL: f64 = 1e-6;
const PSEUDOMODE_TRACE_TOL: f64 = 1e-8;

/// Dense joint-space operator with most entries zero; products skip zero
/// rows/columns of the sparse factor so the cost stays at (nonzeros × dim).
struct JointOps {
    dim: usize,
    n_ph: usize,
    /// Hamiltonian (Hermitian, ≤ 3 nonzeros per row).
    h: Vec<C64>,
    /// Photon number of each joint index (dissipator diagonal).
    num: Vec<f64>,
}

/// Change of basis from the computational product basis to the coupled one:
/// columns are |0⟩ = |00⟩, |±⟩ = (|10⟩ ± |01⟩)/√2, |2⟩ = |11⟩.
fn coupled_basis() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut w: CMatrix = Array2::zeros((4, 4));
    w[[3, 0]] = C64::new(1.0, 0.0);
    w[[1, 1]] = C64::new(s, 0.0);
    w[[2, 1]] = C64::new(s, 0.0);
    w[[1, 2]] = C64::new(s, 0.0);
    w[[2, 2]] = C64::new(-s, 0.0);
    w[[0, 3]] = C64::new(1.0, 0.0);
    w
}

fn build_joint_ops(sys: &SystemSpec, bath: &BathSpec, n_ph: usize) -> Result<JointOps> {
    if (sys.omega_a - sys.omega_b).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!(
            "pseudomode solver requires equal qubit splittings (got {} and {})",
            sys.omega_a, sys.omega_b
        )));
    }
    if n_ph < 2 {
        return Err(Error::InvalidInput(format!(
            "pseudomode Fock cutoff must be ≥ 2, got {n_ph}"
        )));
    }
    let omega_bar = 0.5 * (sys.omega_a + sys.omega_b);
    let dim = 4 * n_ph;
    let g = (bath.lambda * bath.gamma).sqrt();
    let sys_diag = [-omega_bar, 0.0, 0.0, omega_bar];
    let mut h = vec![C64::new(0.0, 0.0); dim * dim];
    let mut num = vec![0.0; dim];
    let at = |s: usize, n: usize| s * n_ph + n;
    for s in 0..4 {
        for n in 0..n_ph {
            let i = at(s, n);
            num[i] = n as f64;
            h[i * dim + i] = C64::new(sys_diag[s] + bath.omega_c * n as f64, 0.0);
        }
    }
    // √(λγ)(S₊ a + S₋ a†) with S₊ = |+⟩⟨0| + |2⟩⟨+| in the coupled system
    // basis (indices 0 = |0⟩, 1 = |+⟩, 2 = |−⟩, 3 = |2⟩). |−⟩ never couples.
    for n in 0..n_ph - 1 {
        let amp = C64::new(g * ((n + 1) as f64).sqrt(), 0.0);
        for (upper, lsys) in [(1usize, 0usize), (3, 1)] {
            let i = at(upper, n);
            let j = at(lsys, n + 1);
            h[i * dim + j] += amp;
            h[j * dim + i] += amp.conj();
        }
    }
    Ok(JointOps { dim, n_ph, h, num })
}

impl JointOps {
    /// out = −i[H, ρ] − γ(a†a ρ + ρ a†a) + 2γ a ρ a†.
    fn rhs(&self, gamma: f64, rho: &[C64], out: &mut [C64]) {
        let d = self.dim;
        out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        let minus_i = C64::new(0.0, -1.0);
        // −i H ρ: skip zero rows of H.
        for i in 0..d {
            for k in 0..d {
                let hik = self.h[i * d + k];
                if hik.re == 0.0 && hik.im == 0.0 {
                    continue;
                }
                let c = minus_i * hik;
                let row_k = &rho[k * d..(k + 1) * d];
                let row_o = &mut out[i * d..(i + 1) * d];
                for j in 0..d {
                    row_o[j] += c * row_k[j];
                }
            }
        }
        // +i ρ H: skip zero entries of H, walking columns of ρ.
        let plus_i = C64::new(0.0, 1.0);
        for k in 0..d {
            for j in 0..d {
                let hkj = self.h[k * d + j];
                if hkj.re == 0.0 && hkj.im == 0.0 {
                    continue;
                }
                let c = plus_i * hkj;
                for i in 0..d {
                    out[i * d + j] += c * rho[i * d + k];
                }
            }
        }
        // Damping: −γ(n_i + n_j) ρ_ij plus the refill 2γ √((n_i+1)(n_j+1))
        // ρ_{i+1,j+1} (photon indices shifted inside each system block).
        for i in 0..d {
            let ni = self.num[i];
            for j in 0..d {
                out[i * d + j] -= C64::new(gamma * (ni + self.num[j]), 0.0) * rho[i * d + j];
            }
        }
        let n_ph = self.n_ph;
        for si in 0..4 {
            for ni in 0..n_ph - 1 {
                let i = si * n_ph + ni;
                for sj in 0..4 {
                    for nj in 0..n_ph - 1 {
                        let j = sj * n_ph + nj;
                        let w = 2.0 * gamma * (((ni + 1) * (nj + 1)) as f64).sqrt();
                        out[i * d + j] += C64::new(w, 0.0) * rho[(i + 1) * d + (j + 1)];
                    }
                }
            }
        }
    }

    /// Population of the top Fock level, summed over the system.
    fn top_level_population(&self, rho: &[C64]) -> f64 {
        let d = self.dim;
        (0..4)
            .map(|s| {
                let i = s * self.n_ph + (self.n_ph - 1);
                rho[i * d + i].re
            })
            .sum()
    }

    /// Reduced two-qubit state in the computational basis.
    fn reduce(&self, rho: &[C64]) -> CMatrix {
        let d = self.dim;
        let mut red: CMatrix = Array2::zeros((4, 4));
        for s in 0..4 {
            for sp in 0..4 {
                let mut z = C64::new(0.0, 0.0);
                for n in 0..self.n_ph {
                    z += rho[(s * self.n_ph + n) * d + (sp * self.n_ph + n)];
                }
                red[[s, sp]] = z;
            }
        }
        let w = coupled_basis();
        let wd = crate::operators::dagger(&w);
        w.dot(&red).dot(&wd)
    }
}

/// Evolve a two-qubit state coupled to one common Lorentzian bath by the
/// pseudomode master equation, sampling the reduced state on `t_grid`
/// (uniform, starting at 0) with RK4 substeps of at most `dt`.
///
/// Fails with a numerical error if the Fock ladder population reaches the
/// cutoff (top-level population above 1e-6) or the joint trace drifts by
/// more than 1e-8 — both signs the result would not be trustworthy.
pub fn pseudomode_evolve(
    rho0: &CMatrix,
    sys: &SystemSpec,
    bath: &BathSpec,
    n_ph: usize,
    t_grid: &[f64],
    dt: f64,
) -> Result<Vec<CMatrix>> {
    crate::model::validate_density(rho0)?;
    if bath.topology != Topology::Common {
        return Err(Error::InvalidInput(
            "pseudomode solver models a common bath; got an independent-bath spec".into(),
        ));
    }
    let (h, n_sub) = grid_substep(t_grid, dt)?;
    let ops = build_joint_ops(sys, bath, n_ph)?;
    let d = ops.dim;

    // ρ_joint(0) = (W† ρ W) ⊗ |0⟩⟨0|.
    let w = coupled_basis();
    let wd = crate::operators::dagger(&w);
    let rho_c = wd.dot(rho0).dot(&w);
    let mut x = vec![C64::new(0.0, 0.0); d * d];
    for s in 0..4 {
        for sp in 0..4 {
            x[(s * n_ph) * d + (sp * n_ph)] = rho_c[[s, sp]];
        }
    }

    let mut k1 = vec![C64::new(0.0, 0.0); d * d];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();

    let mut out = Vec::with_capacity(t_grid.len());
    for (si, &t) in t_grid.iter().enumerate() {
        if si > 0 {
            for _ in 0..n_sub {
                ops.rhs(bath.gamma, &x, &mut k1);
                for i in 0..d * d {
                    tmp[i] = x[i] + 0.5 * h * k1[i];
                }
                ops.rhs(bath.gamma, &tmp, &mut k2);
                for i in 0..d * d {
                    tmp[i] = x[i] + 0.5 * h * k2[i];
                }
                ops.rhs(bath.gamma, &tmp, &mut k3);
                for i in 0..d * d {
                    tmp[i] = x[i] + h * k3[i];
                }
                ops.rhs(bath.gamma, &tmp, &mut k4);
                let wgt = h / 6.0;
                for i in 0..d * d {
                    x[i] += wgt * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
        }
        let trace: C64 = (0..d).map(|i| x[i * d + i]).sum();
        let trace_err = (trace - C64::new(1.0, 0.0)).norm();
        if !(trace_err <= PSEUDOMODE_TRACE_TOL) {
            return Err(Error::Numerical(format!(
                "pseudomode joint trace drifted by {trace_err:.3e} at t = {t:.4} \
                 (tol {PSEUDOMODE_TRACE_TOL:.0e}); try a smaller dt"
            )));
        }
        let top = ops.top_level_population(&x);
        if !(top <= FOCK_CUTOFF_TOL) {
            return Err(Error::Numerical(format!(
                "pseudomode Fock cutoff violated at t = {t:.4}: top-level population \
                 {top:.3e} exceeds {FOCK_CUTOFF_TOL:.0e} with n_ph = {n_ph}; \
                 increase the photon cutoff"
            )));
        }
        out.push(ops.reduce(&x));
    }
    Ok(out)
}

/// [`pseudomode_evolve`] with automatic cutoff escalation: starts at `n_ph`
/// and doubles it (up to 64) when the run aborts on the Fock cutoff.
pub fn pseudomode_evolve_auto(
    rho0: &CMatrix,
    sys: &SystemSpec,
    bath: &BathSpec,
    n_ph: usize,
    t_grid: &[f64],
    dt: f64,
) -> Result<Vec<CMatrix>> {
    let mut cutoff = n_ph;
    loop {
        match pseudomode_evolve(rho0, sys, bath, cutoff, t_grid, dt) {
            Err(e) if e.is_numerical() && cutoff < PSEUDOMODE_MAX_NPH => {
                let msg = e.to_string();
                if msg.contains("Fock cutoff") {
                    cutoff = (2 * cutoff).min(PSEUDOMODE_MAX_NPH);
                    continue;
                }
                return Err(e);
            }
            other => return other,
        }
    }
}
