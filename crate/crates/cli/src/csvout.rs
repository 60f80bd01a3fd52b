//! CSV formatting and atomic file output.
//!
//! Numbers are printed as `%.12e` with a C-style two-digit signed exponent
//! so identical runs produce byte-identical files.

use std::path::Path;

use qcorr_core::{Error, Result};

use crate::run::{ConvergeOutput, SweepOutput, TimeSeries};

/// `%.12e`: 12 fractional digits, `e`, sign, and a two-digit (or longer)
/// exponent. Rust's `{:e}` prints `1e0`; this pads to `1.000000000000e+00`.
pub fn fmt_e(x: f64) -> String {
    let raw = format!("{:.12e}", x);
    match raw.split_once('e') {
        Some((mantissa, exp)) => {
            let e: i32 = exp.parse().unwrap_or(0);
            let sign = if e < 0 { '-' } else { '+' };
            format!("{mantissa}e{sign}{:02}", e.abs())
        }
        None => raw, // NaN or infinite; never produced by a successful run
    }
}

/// Write the whole file atomically: temp file in the target directory, then
/// rename over the destination. A failed run never leaves a partial file.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io_err = |e: std::io::Error| {
        Error::InvalidInput(format!("cannot write {}: {e}", path.display()))
    };
    let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(io_err)?;
    std::io::Write::write_all(&mut tmp, content.as_bytes()).map_err(io_err)?;
    tmp.persist(path)
        .map_err(|e| Error::InvalidInput(format!("cannot write {}: {}", path.display(), e.error)))?;
    Ok(())
}

pub fn time_series_csv(series: &TimeSeries) -> String {
    let mut out = String::with_capacity(series.rows.len() * 160 + 128);
    out.push_str(
        "t,concurrence,discord,mutual_information,classical_correlation,trace_error,min_eigenvalue\n",
    );
    for r in &series.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_e(r.t),
            fmt_e(r.concurrence),
            fmt_e(r.discord),
            fmt_e(r.mutual_information),
            fmt_e(r.classical_correlation),
            fmt_e(r.trace_error),
            fmt_e(r.min_eigenvalue),
        ));
    }
    out
}

pub fn sweep_csv(sweep: &SweepOutput) -> String {
    let mut out = String::from("lambda,t,concurrence,discord\n");
    for (lambda, series) in &sweep.points {
        for r in &series.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                fmt_e(*lambda),
                fmt_e(r.t),
                fmt_e(r.concurrence),
                fmt_e(r.discord),
            ));
        }
    }
    out
}

pub fn converge_csv(report: &ConvergeOutput) -> String {
    let mut out = String::from(
        "N,dt,max_delta_concurrence,max_delta_discord,ado_count,wall_time\n",
    );
    for s in &report.report.steps {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.depth,
            fmt_e(s.dt),
            fmt_e(s.delta_concurrence),
            fmt_e(s.delta_discord),
            s.ado_count,
            fmt_e(s.wall_seconds),
        ));
    }
    out
}
