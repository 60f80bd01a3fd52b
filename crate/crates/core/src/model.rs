//! Physical problem description: system Hamiltonian, Lorentzian baths, bath
//! correlation function, and the initial two-qubit states under study.
//!
//! Two identical qubits (splitting ω₀ = 1 by default) couple through σ_x to
//! bosonic baths with the Lorentzian spectral density
//!
//! ```text
//!   J(ω) = (1/2π) · λγ² / ((ω − ω_c)² + γ²),
//! ```
//!
//! whose zero-temperature correlation function is the single complex
//! exponential C(t) = (λγ/2)·e^{−(γ + iω_c)t}. The width-to-coupling ratio
//! f = γ/λ classifies the dynamics: γ/2 > λ is the Markovian regime, γ/2 < λ
//! the non-Markovian one. The two bath topologies differ only in the
//! coupling operators: independent baths attach to σ_x⊗I and I⊗σ_x
//! separately, a common bath to their sum.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::operators::{hermiticity_defect, identity, kron, min_eigenvalue, sigma_x, sigma_z, trace};
use crate::{CMatrix, Error, Result};

/// Bath topology: one private bath per qubit, or a single shared one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Independent,
    Common,
}

/// Lorentzian bath parameters, all in units of ω₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathSpec {
    /// Coupling strength λ.
    pub lambda: f64,
    /// Spectral half-width γ.
    pub gamma: f64,
    /// Bath center frequency ω_c.
    pub omega_c: f64,
    /// Whether this bath is shared by both qubits.
    pub topology: Topology,
}

impl BathSpec {
    pub fn new(lambda: f64, gamma: f64, omega_c: f64, topology: Topology) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "bath: lambda must be ≥ 0, got {lambda}"
            )));
        }
        if !(gamma > 0.0) {
            return Err(Error::InvalidInput(format!(
                "bath: gamma must be > 0, got {gamma}"
            )));
        }
        if !(omega_c > 0.0) {
            return Err(Error::InvalidInput(format!(
                "bath: omega_c must be > 0, got {omega_c}"
            )));
        }
        Ok(BathSpec {
            lambda,
            gamma,
            omega_c,
            topology,
        })
    }

    /// Build from the width ratio f, with γ = f·λ.
    pub fn from_width_ratio(lambda: f64, f: f64, omega_c: f64, topology: Topology) -> Result<Self> {
        Self::new(lambda, f * lambda, omega_c, topology)
    }

    /// Width ratio f = γ/λ.
    pub fn width_ratio(&self) -> f64 {
        self.gamma / self.lambda
    }

    /// Markovian-regime test: γ/2 > λ (monotone decay of the RWA envelope).
    pub fn is_markovian(&self) -> bool {
        self.gamma / 2.0 > self.lambda
    }

    /// ν₊ = γ + iω_c, the decay rate of the forward bath exponential.
    pub fn nu_plus(&self) -> C64 {
        C64::new(self.gamma, self.omega_c)
    }

    /// ν₋ = γ − iω_c.
    pub fn nu_minus(&self) -> C64 {
        C64::new(self.gamma, -self.omega_c)
    }
}

/// Qubit splittings, in units of ω₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemSpec {
    pub omega_a: f64,
    pub omega_b: f64,
}

impl Default for SystemSpec {
    fn default() -> Self {
        SystemSpec {
            omega_a: 1.0,
            omega_b: 1.0,
        }
    }
}

impl SystemSpec {
    pub fn new(omega_a: f64, omega_b: f64) -> Result<Self> {
        if !(omega_a > 0.0) || !(omega_b > 0.0) {
            return Err(Error::InvalidInput(format!(
                "system: qubit frequencies must be positive, got ({omega_a}, {omega_b})"
            )));
        }
        Ok(SystemSpec { omega_a, omega_b })
    }
}

/// Initial two-qubit state.
///
/// `BellPhi(α)` is the anti-correlated superposition α|10⟩ + √(1−α²)|01⟩,
/// `BellPsi(α)` the correlated one α|00⟩ + √(1−α²)|11⟩, and the Werner
/// variants mix the corresponding Bell state with white noise:
/// r·|ξ⟩⟨ξ| + (1−r)/4·I.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialStateSpec {
    BellPhi { alpha: f64 },
    BellPsi { alpha: f64 },
    WernerPhi { r: f64, alpha: f64 },
    WernerPsi { r: f64, alpha: f64 },
    Custom(CMatrix),
}

/// Hermiticity / trace / positivity tolerances for a freshly built state.
const DM_HERM_TOL: f64 = 1e-10;
const DM_TRACE_TOL: f64 = 1e-10;
const DM_EIG_FLOOR: f64 = -1e-8;

/// Check the density matrix invariants (4×4, Hermitian, unit trace, PSD up
/// to the noise floor) and report the first violated one.
pub fn validate_density(rho: &CMatrix) -> Result<()> {
    if rho.dim() != (4, 4) {
        return Err(Error::InvalidInput(format!(
            "density matrix must be 4x4, got {}x{}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let herm = hermiticity_defect(rho);
    if herm > DM_HERM_TOL {
        return Err(Error::InvalidInput(format!(
            "density matrix is not Hermitian (defect {herm:.3e})"
        )));
    }
    let tr = trace(rho);
    if (tr.re - 1.0).abs() > DM_TRACE_TOL || tr.im.abs() > DM_TRACE_TOL {
        return Err(Error::InvalidInput(format!(
            "density matrix trace is {tr}, expected 1"
        )));
    }
    let lo = min_eigenvalue(rho)?;
    if lo < DM_EIG_FLOOR {
        return Err(Error::InvalidInput(format!(
            "density matrix has negative eigenvalue {lo:.3e}"
        )));
    }
    Ok(())
}

fn unit_range(name: &str, x: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(Error::InvalidInput(format!(
            "initial state: {name} must lie in [0, 1], got {x}"
        )))
    }
}

/// Projector |ψ⟩⟨ψ| onto the real-amplitude state Σ c_k |k⟩ given as sparse
/// (basis index, amplitude) pairs in the |11⟩, |10⟩, |01⟩, |00⟩ ordering.
/// Amplitudes are taken as given; callers wanting a density matrix should
/// pass a normalized set.
pub fn pure_state(amplitudes: &[(usize, f64)]) -> Result<CMatrix> {
    let mut psi = [C64::new(0.0, 0.0); 4];
    for &(idx, amp) in amplitudes {
        if idx > 3 {
            return Err(Error::InvalidInput(format!(
                "pure state: basis index must be 0..=3, got {idx}"
            )));
        }
        psi[idx] = C64::new(amp, 0.0);
    }
    Ok(Array2::from_shape_fn((4, 4), |(i, j)| psi[i] * psi[j].conj()))
}

fn werner(xi: CMatrix, r: f64) -> CMatrix {
    let noise = identity(4).mapv(|z| z * ((1.0 - r) / 4.0));
    xi.mapv(|z| z * r) + noise
}

/// Materialize an [`InitialStateSpec`] as a density matrix.
pub fn build_initial(spec: &InitialStateSpec) -> Result<CMatrix> {
    let rho = match spec {
        InitialStateSpec::BellPhi { alpha } => {
            let a = unit_range("alpha", *alpha)?;
            pure_state(&[(1, a), (2, (1.0 - a * a).sqrt())])?
        }
        InitialStateSpec::BellPsi { alpha } => {
            let a = unit_range("alpha", *alpha)?;
            pure_state(&[(3, a), (0, (1.0 - a * a).sqrt())])?
        }
        InitialStateSpec::WernerPhi { r, alpha } => {
            let a = unit_range("alpha", *alpha)?;
            let r = unit_range("r", *r)?;
            werner(pure_state(&[(1, a), (2, (1.0 - a * a).sqrt())])?, r)
        }
        InitialStateSpec::WernerPsi { r, alpha } => {
            let a = unit_range("alpha", *alpha)?;
            let r = unit_range("r", *r)?;
            werner(pure_state(&[(3, a), (0, (1.0 - a * a).sqrt())])?, r)
        }
        InitialStateSpec::Custom(rho) => rho.clone(),
    };
    validate_density(&rho)?;
    Ok(rho)
}

/// Lorentzian spectral density J(ω) = (1/2π)·λγ²/((ω − ω_c)² + γ²).
pub fn spectral_density(omega: f64, bath: &BathSpec) -> f64 {
    let d = omega - bath.omega_c;
    bath.lambda * bath.gamma * bath.gamma
        / (2.0 * std::f64::consts::PI * (d * d + bath.gamma * bath.gamma))
}

/// Zero-temperature bath correlation C(t) = (λγ/2)·e^{−(γ + iω_c)t}, t ≥ 0.
pub fn bath_correlation(t: f64, bath: &BathSpec) -> C64 {
    (-(bath.nu_plus()) * t).exp() * (bath.lambda * bath.gamma / 2.0)
}

/// Two-qubit free Hamiltonian H_s = (ω_A/2)σ_z⊗I + (ω_B/2)I⊗σ_z.
pub fn system_hamiltonian(sys: &SystemSpec) -> CMatrix {
    kron(&sigma_z(), &identity(2)).mapv(|z| z * (sys.omega_a / 2.0))
        + kron(&identity(2), &sigma_z()).mapv(|z| z * (sys.omega_b / 2.0))
}

/// Bath coupling operators for a topology: `[σ_x⊗I, I⊗σ_x]` for independent
/// baths, `[σ_x⊗I + I⊗σ_x]` for a common one.
pub fn coupling_operators(topology: Topology) -> Vec<CMatrix> {
    let qa = kron(&sigma_x(), &identity(2));
    let qb = kron(&identity(2), &sigma_x());
    match topology {
        Topology::Independent => vec![qa, qb],
        Topology::Common => vec![qa + qb],
    }
}

/// The stationary state the common bath drives the qubits into at strong
/// coupling: (1/3)(|00⟩⟨00| + |11⟩⟨11| + |+⟩⟨+|) with |+⟩ = (|10⟩+|01⟩)/√2.
pub fn asymptotic_common_state() -> CMatrix {
    let mut rho: CMatrix = Array2::zeros((4, 4));
    let third = C64::new(1.0 / 3.0, 0.0);
    let sixth = C64::new(1.0 / 6.0, 0.0);
    rho[[0, 0]] = third;
    rho[[3, 3]] = third;
    for i in [1, 2] {
        for j in [1, 2] {
            rho[[i, j]] = sixth;
        }
    }
    rho
}
