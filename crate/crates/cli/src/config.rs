//! Scenario configuration: a strict JSON schema (unknown keys are errors)
//! resolved into validated core types.

use std::path::{Path, PathBuf};

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::Deserialize;

use qcorr_core::heom::sample_grid;
use qcorr_core::measures::{is_x_form, X_FORM_TOL};
use qcorr_core::model::{build_initial, BathSpec, InitialStateSpec, SystemSpec, Topology};
use qcorr_core::{CMatrix, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Heom,
    Rwa,
    Pseudomode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum TopologyField {
    Independent,
    Common,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    /// Free-text note describing what the scenario demonstrates; ignored by
    /// the solvers.
    #[serde(default)]
    #[allow(dead_code)]
    comment: Option<String>,
    topology: TopologyField,
    solver: Solver,
    #[serde(default)]
    system: Option<SystemSection>,
    bath: BathSection,
    initial: InitialSection,
    time: TimeSection,
    #[serde(default)]
    truncation: Option<TruncationSection>,
    #[serde(default)]
    pseudomode: Option<PseudomodeSection>,
    #[serde(default)]
    output: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemSection {
    omega_a: f64,
    omega_b: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BathSection {
    lambda: f64,
    #[serde(default)]
    f: Option<f64>,
    #[serde(default)]
    gamma: Option<f64>,
    omega_c: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "kind")]
enum InitialSection {
    BellPhi { alpha: f64 },
    BellPsi { alpha: f64 },
    WernerPhi { r: f64, alpha: f64 },
    WernerPsi { r: f64, alpha: f64 },
    /// Explicit 4×4 density matrix as rows of [re, im] pairs.
    Custom { matrix: Vec<Vec<[f64; 2]>> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TimeSection {
    t_max: f64,
    #[serde(default = "default_n_samples")]
    n_samples: usize,
    #[serde(default = "default_dt")]
    dt: f64,
}

fn default_n_samples() -> usize {
    600
}

fn default_dt() -> f64 {
    0.01
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TruncationSection {
    #[serde(default)]
    depth: Option<usize>,
    #[serde(default)]
    auto: Option<AutoSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AutoSection {
    tolerance: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PseudomodeSection {
    n_ph: usize,
}

/// Hierarchy truncation policy for the HEOM solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    Depth(usize),
    Auto { tolerance: f64 },
}

/// A fully validated scenario, ready to run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub topology: Topology,
    pub solver: Solver,
    pub sys: SystemSpec,
    pub bath: BathSpec,
    /// Width ratio f when the config fixed γ through it; sweeps rescale
    /// γ = f·λ per grid point in that case (and keep γ fixed otherwise).
    pub f: Option<f64>,
    pub initial_spec: InitialStateSpec,
    pub initial: CMatrix,
    pub t_grid: Vec<f64>,
    pub dt: f64,
    pub truncation: Option<Truncation>,
    pub n_ph: usize,
    pub output: Option<PathBuf>,
}

pub const DEFAULT_N_PH: usize = qcorr_core::rwa::PSEUDOMODE_DEFAULT_NPH;

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::InvalidInput(format!("cannot read config {}: {e}", path.display()))
    })?;
    parse_scenario(&text).map_err(|e| match e {
        Error::InvalidInput(msg) => {
            Error::InvalidInput(format!("{}: {msg}", path.display()))
        }
        other => other,
    })
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let file: ConfigFile = serde_json::from_str(text)
        .map_err(|e| Error::InvalidInput(format!("config parse error: {e}")))?;
    resolve(file)
}

fn resolve(file: ConfigFile) -> Result<Scenario> {
    let topology = match file.topology {
        TopologyField::Independent => Topology::Independent,
        TopologyField::Common => Topology::Common,
    };

    let sys = match file.system {
        Some(s) => SystemSpec::new(s.omega_a, s.omega_b)?,
        None => SystemSpec::default(),
    };

    let (bath, f) = match (file.bath.f, file.bath.gamma) {
        (Some(f), None) => (
            BathSpec::from_width_ratio(file.bath.lambda, f, file.bath.omega_c, topology)?,
            Some(f),
        ),
        (None, Some(gamma)) => (
            BathSpec::new(file.bath.lambda, gamma, file.bath.omega_c, topology)?,
            None,
        ),
        (Some(_), Some(_)) => {
            return Err(Error::InvalidInput(
                "bath: give exactly one of `f` or `gamma`, not both".into(),
            ))
        }
        (None, None) => {
            return Err(Error::InvalidInput(
                "bath: give exactly one of `f` or `gamma`".into(),
            ))
        }
    };

    let initial_spec = match file.initial {
        InitialSection::BellPhi { alpha } => InitialStateSpec::BellPhi { alpha },
        InitialSection::BellPsi { alpha } => InitialStateSpec::BellPsi { alpha },
        InitialSection::WernerPhi { r, alpha } => InitialStateSpec::WernerPhi { r, alpha },
        InitialSection::WernerPsi { r, alpha } => InitialStateSpec::WernerPsi { r, alpha },
        InitialSection::Custom { matrix } => {
            InitialStateSpec::Custom(parse_custom_matrix(&matrix)?)
        }
    };
    let initial = build_initial(&initial_spec)?;

    if !(file.time.t_max > 0.0) {
        return Err(Error::InvalidInput(format!(
            "time: t_max must be positive, got {}",
            file.time.t_max
        )));
    }
    if file.time.n_samples < 2 {
        return Err(Error::InvalidInput(format!(
            "time: n_samples must be ≥ 2, got {}",
            file.time.n_samples
        )));
    }
    if !(file.time.dt > 0.0) {
        return Err(Error::InvalidInput(format!(
            "time: dt must be positive, got {}",
            file.time.dt
        )));
    }

    let truncation = match file.truncation {
        None => None,
        Some(TruncationSection {
            depth: Some(_),
            auto: Some(_),
        }) => {
            return Err(Error::InvalidInput(
                "truncation: give `depth` or `auto`, not both".into(),
            ))
        }
        Some(TruncationSection {
            depth: Some(n),
            auto: None,
        }) => {
            if n < 1 {
                return Err(Error::InvalidInput(
                    "truncation: depth must be ≥ 1".into(),
                ));
            }
            Some(Truncation::Depth(n))
        }
        Some(TruncationSection {
            depth: None,
            auto: Some(a),
        }) => {
            if !(a.tolerance > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "truncation.auto: tolerance must be positive, got {}",
                    a.tolerance
                )));
            }
            Some(Truncation::Auto {
                tolerance: a.tolerance,
            })
        }
        Some(TruncationSection {
            depth: None,
            auto: None,
        }) => {
            return Err(Error::InvalidInput(
                "truncation: give `depth` or `auto`".into(),
            ))
        }
    };

    // Solver/topology coherence rules.
    match file.solver {
        Solver::Heom => {
            if truncation.is_none() {
                return Err(Error::InvalidInput(
                    "the heom solver requires a `truncation` section".into(),
                ));
            }
            if file.pseudomode.is_some() {
                return Err(Error::InvalidInput(
                    "`pseudomode` section is only used by the pseudomode solver".into(),
                ));
            }
        }
        Solver::Rwa => {
            if topology != Topology::Independent {
                return Err(Error::InvalidInput(
                    "solver `rwa` models independent baths; set topology = \"independent\""
                        .into(),
                ));
            }
            if !is_x_form(&initial, X_FORM_TOL) {
                return Err(Error::InvalidInput(
                    "solver `rwa` requires an X-form initial state".into(),
                ));
            }
            if truncation.is_some() {
                return Err(Error::InvalidInput(
                    "`truncation` section is only used by the heom solver".into(),
                ));
            }
            if file.pseudomode.is_some() {
                return Err(Error::InvalidInput(
                    "`pseudomode` section is only used by the pseudomode solver".into(),
                ));
            }
        }
        Solver::Pseudomode => {
            if topology != Topology::Common {
                return Err(Error::InvalidInput(
                    "solver `pseudomode` models a common bath; set topology = \"common\"".into(),
                ));
            }
            if truncation.is_some() {
                return Err(Error::InvalidInput(
                    "`truncation` section is only used by the heom solver".into(),
                ));
            }
        }
    }
    let n_ph = match file.pseudomode {
        Some(p) => {
            if p.n_ph < 2 {
                return Err(Error::InvalidInput(format!(
                    "pseudomode: n_ph must be ≥ 2, got {}",
                    p.n_ph
                )));
            }
            p.n_ph
        }
        None => DEFAULT_N_PH,
    };

    Ok(Scenario {
        topology,
        solver: file.solver,
        sys,
        bath,
        f,
        initial_spec,
        initial,
        t_grid: sample_grid(file.time.t_max, file.time.n_samples),
        dt: file.time.dt,
        truncation,
        n_ph,
        output: file.output,
    })
}

fn parse_custom_matrix(rows: &[Vec<[f64; 2]>]) -> Result<CMatrix> {
    if rows.len() != 4 || rows.iter().any(|r| r.len() != 4) {
        return Err(Error::InvalidInput(
            "initial.matrix must be 4 rows of 4 [re, im] pairs".into(),
        ));
    }
    Ok(Array2::from_shape_fn((4, 4), |(i, j)| {
        C64::new(rows[i][j][0], rows[i][j][1])
    }))
}

impl Scenario {
    /// The scenario re-pointed at a different coupling strength; γ follows
    /// the width ratio when the config specified one.
    pub fn with_lambda(&self, lambda: f64) -> Result<Scenario> {
        let bath = match self.f {
            Some(f) => BathSpec::from_width_ratio(lambda, f, self.bath.omega_c, self.topology)?,
            None => BathSpec::new(lambda, self.bath.gamma, self.bath.omega_c, self.topology)?,
        };
        let mut out = self.clone();
        out.bath = bath;
        Ok(out)
    }
}
