//! Spectra, energy decay and damping placement for the hinged plate
//! `u_tt + Δ²u + a(x) χ_ω(x) u_t = 0` on a rectangle, discretized with the
//! five-point Laplacian.

pub mod analysis;
pub mod damping;
pub mod dynamics;
pub mod eigensolve;
pub mod error;
pub mod grid_operators;
pub mod linalg;
pub mod placement;

pub use analysis::{compare_rates, fit_decay_rate, DecayFit, DecayReport, RateRelation};
pub use damping::{parse_profile, sample_field, DampingField, DampingProfile, Region};
pub use eigensolve::{
    abscissa_state, compute_spectrum, dense_spectrum, rightmost_eigenvalues, shift_invert_spectrum, spectral_abscissa, sweep_spectrum,
    AbscissaResult, ArnoldiOptions, EigenMethod, SolveMethod, Spectrum, SweepOptions, SweepPlan,
};
pub use dynamics::{
    default_dt, default_t_final, resolving_dt, discrete_energy, modal_initial_state, mode_shape, simulate, step_crank_nicolson,
    CrankNicolson, EnergyTrace, ModeIndex,
};
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use grid_operators::{
    assemble_bilaplacian, assemble_laplacian, ConfigTag, DampedPlateOperator, GridSpec, PlateState, SparseOperator,
};
pub use placement::{
    enumerate_regions, rank_report, sweep_placements, CandidateStatus, PlacementSweep, RankTable, TraceParams,
};
