//! Fixtures shared by the benchmarks in `benches/`.

use plate_spectra::{parse_profile, sample_field, DampedPlateOperator, GridSpec, ModeIndex, PlateState, Region};

/// Unit-square plate on an `n x n` interior grid damped by `profile` on `region`.
pub fn plate(n: usize, profile: &str, region: [f64; 4]) -> DampedPlateOperator {
    let g = GridSpec::new(1.0, 1.0, n, n).expect("grid");
    let p = parse_profile(profile).expect("profile");
    let r = Region::new(region[0], region[1], region[2], region[3]).expect("region");
    let field = sample_field(&p, &r, &g).expect("field");
    DampedPlateOperator::new(&g, &field).expect("operator")
}

pub const FULL: [f64; 4] = [0.0, 1.0, 0.0, 1.0];
pub const QUARTER: [f64; 4] = [0.0, 0.5, 0.0, 0.5];

pub fn mode_state(op: &DampedPlateOperator, n: usize, m: usize) -> PlateState {
    plate_spectra::modal_initial_state(op.grid(), ModeIndex::new(n, m).expect("mode"), 1.0).expect("state")
}
