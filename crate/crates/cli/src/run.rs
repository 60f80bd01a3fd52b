//! Orchestration: turn a validated [`Scenario`] into measured time series.

use rayon::prelude::*;

use qcorr_core::heom::{self, converge, integrate, BathSetup, HeomScenario, Trajectory};
use qcorr_core::measures::{concurrence, discord};
use qcorr_core::model::validate_density;
use qcorr_core::operators::{dagger, hermitian_eig, trace};
use qcorr_core::rwa::{pseudomode_evolve_auto, rwa_propagate_x, PFunctionParams};
use qcorr_core::{CMatrix, Error, Result, C64};

use crate::config::{Scenario, Solver, Truncation};

/// One output row: time, the four correlation measures, and the numerical
/// health diagnostics of the sampled state.
#[derive(Debug, Clone, Copy)]
pub struct TimeSeriesRow {
    pub t: f64,
    pub concurrence: f64,
    pub discord: f64,
    pub mutual_information: f64,
    pub classical_correlation: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone, Default)]
pub struct TimeSeries {
    pub rows: Vec<TimeSeriesRow>,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    /// (λ, series) in the order requested.
    pub points: Vec<(f64, TimeSeries)>,
    /// (λ, error message) for grid points that failed.
    pub failures: Vec<(f64, String)>,
}

#[derive(Debug)]
pub struct ConvergeOutput {
    pub report: heom::ConvergeReport,
}

/// Sampled states plus per-sample diagnostics, before measures.
struct SampledStates {
    states: Vec<CMatrix>,
    trace_errors: Vec<f64>,
    min_eigenvalues: Vec<f64>,
}

fn from_trajectory(traj: Trajectory) -> SampledStates {
    SampledStates {
        states: traj.states,
        trace_errors: traj.trace_errors,
        min_eigenvalues: traj.min_eigenvalues,
    }
}

fn diagnostics_of(states: Vec<CMatrix>) -> Result<SampledStates> {
    let mut trace_errors = Vec::with_capacity(states.len());
    let mut min_eigenvalues = Vec::with_capacity(states.len());
    for rho in &states {
        trace_errors.push((trace(rho) - C64::new(1.0, 0.0)).norm());
        let sym = (rho + &dagger(rho)).mapv(|z| 0.5 * z);
        min_eigenvalues.push(hermitian_eig(&sym)?.eigenvalues[0]);
    }
    Ok(SampledStates {
        states,
        trace_errors,
        min_eigenvalues,
    })
}

/// Resolve the hierarchy depth and step for a HEOM run, consulting
/// [`converge`] in auto mode.
fn heom_plan(sc: &Scenario) -> Result<(usize, f64)> {
    match sc.truncation {
        Some(Truncation::Depth(n)) => Ok((n, sc.dt)),
        Some(Truncation::Auto { tolerance }) => {
            let report = converge(&heom_scenario(sc), tolerance)?;
            Ok((report.depth, report.dt))
        }
        None => Err(Error::InvalidInput(
            "heom run without a truncation policy".into(),
        )),
    }
}

fn heom_scenario(sc: &Scenario) -> HeomScenario {
    let baths = match sc.topology {
        qcorr_core::Topology::Independent => BathSetup::Independent(sc.bath, sc.bath),
        qcorr_core::Topology::Common => BathSetup::Common(sc.bath),
    };
    HeomScenario {
        sys: sc.sys,
        baths,
        initial: sc.initial.clone(),
        t_grid: sc.t_grid.clone(),
    }
}

fn sample_states(sc: &Scenario) -> Result<SampledStates> {
    match sc.solver {
        Solver::Heom => {
            let (depth, dt) = heom_plan(sc)?;
            let gen = heom_scenario(sc).generator(depth)?;
            Ok(from_trajectory(integrate(&gen, &sc.initial, &sc.t_grid, dt)?))
        }
        Solver::Rwa => {
            let params = PFunctionParams::from_bath(&sc.bath)?;
            let states: Vec<CMatrix> = sc
                .t_grid
                .iter()
                .map(|&t| rwa_propagate_x(&sc.initial, t, &params))
                .collect::<Result<_>>()?;
            diagnostics_of(states)
        }
        Solver::Pseudomode => {
            let states =
                pseudomode_evolve_auto(&sc.initial, &sc.sys, &sc.bath, sc.n_ph, &sc.t_grid, sc.dt)?;
            diagnostics_of(states)
        }
    }
}

/// Run one scenario end to end: propagate, then evaluate every measure at
/// every sample.
pub fn run_scenario(sc: &Scenario) -> Result<TimeSeries> {
    validate_density(&sc.initial)?;
    let sampled = sample_states(sc)?;
    let mut rows = Vec::with_capacity(sampled.states.len());
    for (k, rho) in sampled.states.iter().enumerate() {
        let d = discord(rho)?;
        rows.push(TimeSeriesRow {
            t: sc.t_grid[k],
            concurrence: concurrence(rho)?,
            discord: d.discord,
            mutual_information: d.mutual_information,
            classical_correlation: d.classical_correlation,
            trace_error: sampled.trace_errors[k],
            min_eigenvalue: sampled.min_eigenvalues[k],
        });
    }
    Ok(TimeSeries { rows })
}

/// Run the scenario across a λ grid. Failed points are reported in the
/// output rather than aborting the sweep; the per-point ordering follows the
/// request regardless of execution order.
pub fn run_sweep(sc: &Scenario, lambdas: &[f64]) -> Result<SweepOutput> {
    if lambdas.is_empty() {
        return Err(Error::InvalidInput("sweep: empty lambda grid".into()));
    }
    let results: Vec<(f64, Result<TimeSeries>)> = lambdas
        .par_iter()
        .map(|&lambda| {
            let series = sc.with_lambda(lambda).and_then(|point| run_scenario(&point));
            (lambda, series)
        })
        .collect();
    let mut out = SweepOutput {
        points: Vec::new(),
        failures: Vec::new(),
    };
    for (lambda, r) in results {
        match r {
            Ok(series) => out.points.push((lambda, series)),
            Err(e) => out.failures.push((lambda, e.to_string())),
        }
    }
    Ok(out)
}

/// Run the convergence search for a HEOM scenario.
pub fn run_converge(sc: &Scenario, tol: f64) -> Result<ConvergeOutput> {
    if sc.solver != Solver::Heom {
        return Err(Error::InvalidInput(
            "converge applies to the heom solver only".into(),
        ));
    }
    let report = converge(&heom_scenario(sc), tol)?;
    Ok(ConvergeOutput { report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_scenario;
    use approx::assert_abs_diff_eq;

    fn heom_config(lambda: f64, f: f64, t_max: f64, depth: usize, n: usize) -> Scenario {
        parse_scenario(&format!(
            r#"{{
              "topology": "independent",
              "solver": "heom",
              "bath": {{"lambda": {lambda}, "f": {f}, "omega_c": 1.0}},
              "initial": {{"kind": "bell_phi", "alpha": 0.7071067811865476}},
              "truncation": {{"depth": {depth}}},
              "time": {{"t_max": {t_max}, "n_samples": {n}}}
            }}"#
        ))
        .unwrap()
    }

    #[test]
    fn decoupled_scenario_gives_constant_measures() {
        // λ = 0 with explicit γ: free evolution; concurrence 1, discord ln 2.
        let sc = parse_scenario(
            r#"{
              "topology": "independent",
              "solver": "heom",
              "bath": {"lambda": 0.0, "gamma": 1.0, "omega_c": 1.0},
              "initial": {"kind": "bell_phi", "alpha": 0.7071067811865476},
              "truncation": {"depth": 1},
              "time": {"t_max": 5.0, "n_samples": 26}
            }"#,
        )
        .unwrap();
        let series = run_scenario(&sc).unwrap();
        let ln2 = std::f64::consts::LN_2;
        for r in &series.rows {
            assert_abs_diff_eq!(r.concurrence, 1.0, epsilon = 1e-8);
            assert_abs_diff_eq!(r.discord, ln2, epsilon = 1e-7);
            assert!(r.trace_error < 1e-12);
        }
    }

    #[test]
    fn first_row_reproduces_initial_measures() {
        let sc = heom_config(0.5, 0.1, 2.0, 4, 11);
        let series = run_scenario(&sc).unwrap();
        let d0 = discord(&sc.initial).unwrap();
        let row = &series.rows[0];
        assert_abs_diff_eq!(row.t, 0.0, epsilon = 0.0);
        assert_abs_diff_eq!(
            row.concurrence,
            concurrence(&sc.initial).unwrap(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(row.discord, d0.discord, epsilon = 1e-12);
        assert_abs_diff_eq!(
            row.mutual_information,
            d0.mutual_information,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            row.classical_correlation,
            d0.classical_correlation,
            epsilon = 1e-12
        );
    }

    #[test]
    fn sweep_single_point_matches_scenario() {
        let sc = heom_config(0.5, 0.1, 2.0, 4, 11);
        let sweep = run_sweep(&sc, &[0.5]).unwrap();
        assert!(sweep.failures.is_empty());
        let direct = run_scenario(&sc).unwrap();
        for (a, b) in sweep.points[0].1.rows.iter().zip(&direct.rows) {
            assert_abs_diff_eq!(a.concurrence, b.concurrence, epsilon = 0.0);
            assert_abs_diff_eq!(a.discord, b.discord, epsilon = 0.0);
        }
    }

    #[test]
    fn sweep_reports_bad_points_and_continues() {
        // λ = 0 with a width ratio gives γ = 0, an invalid bath: that point
        // fails, the other succeeds.
        let sc = heom_config(0.5, 0.1, 1.0, 3, 6);
        let sweep = run_sweep(&sc, &[0.0, 0.5]).unwrap();
        assert_eq!(sweep.points.len(), 1);
        assert_eq!(sweep.failures.len(), 1);
        assert_abs_diff_eq!(sweep.failures[0].0, 0.0, epsilon = 0.0);
    }

    #[test]
    fn rwa_scenario_runs() {
        let sc = parse_scenario(
            r#"{
              "topology": "independent",
              "solver": "rwa",
              "bath": {"lambda": 2.0, "f": 0.1, "omega_c": 1.0},
              "initial": {"kind": "bell_phi", "alpha": 0.7071067811865476},
              "time": {"t_max": 10.0, "n_samples": 51}
            }"#,
        )
        .unwrap();
        let series = run_scenario(&sc).unwrap();
        assert_eq!(series.rows.len(), 51);
        assert_abs_diff_eq!(series.rows[0].concurrence, 1.0, epsilon = 1e-12);
        for r in &series.rows {
            assert!(r.trace_error < 1e-12);
            assert!(r.min_eigenvalue > -1e-12);
        }
    }

    #[test]
    fn converge_rejects_non_heom() {
        let sc = parse_scenario(
            r#"{
              "topology": "independent",
              "solver": "rwa",
              "bath": {"lambda": 0.5, "f": 0.1, "omega_c": 1.0},
              "initial": {"kind": "bell_phi", "alpha": 0.7071067811865476},
              "time": {"t_max": 1.0, "n_samples": 3}
            }"#,
        )
        .unwrap();
        assert!(run_converge(&sc, 1e-3).is_err());
    }
}
