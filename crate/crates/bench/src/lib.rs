//! Shared scenario builders for the benchmark targets.

use qcorr_core::heom::{HeomGenerator, sample_grid};
use qcorr_core::model::{build_initial, BathSpec, InitialStateSpec, SystemSpec, Topology};
use qcorr_core::CMatrix;

/// Strong-coupling Bell state used across the benchmarks.
pub fn bell_phi() -> CMatrix {
    build_initial(&InitialStateSpec::BellPhi {
        alpha: 1.0 / 2.0_f64.sqrt(),
    })
    .unwrap()
}

/// Independent-bath generator at the strong-coupling point λ = 2, f = 0.1.
pub fn independent_generator(depth: usize) -> HeomGenerator {
    let bath = BathSpec::from_width_ratio(2.0, 0.1, 1.0, Topology::Independent).unwrap();
    HeomGenerator::independent(&SystemSpec::default(), &bath, &bath, depth).unwrap()
}

/// Common-bath generator at the same coupling point.
pub fn common_generator(depth: usize) -> HeomGenerator {
    let bath = BathSpec::from_width_ratio(2.0, 0.1, 1.0, Topology::Common).unwrap();
    HeomGenerator::common(&SystemSpec::default(), &bath, depth).unwrap()
}

/// Short sample grid for end-to-end integration benchmarks.
pub fn short_grid() -> Vec<f64> {
    sample_grid(1.0, 21)
}
