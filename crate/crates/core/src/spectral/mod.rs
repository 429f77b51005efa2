//! Krylov and dense spectral tools for `S` and its core block.

pub mod arnoldi;
pub mod gap;
pub mod spectrum;

pub use arnoldi::{arnoldi, leading_ritz_pair, ritz_pairs, ritz_values, KrylovFactorization, RitzPair, RitzValue};
pub use gap::{
    arnoldi_core_vector, gap_via_arnoldi, gap_via_projected_power, gap_via_projected_power_observed, GapConfig,
    GapMethod, GapResult, ProjectedStep,
};
pub use spectrum::{
    core_spectrum, count_unit, spectrum_fraction_curve, spectrum_report, subspace_spectrum, unit_eigenvalue_count,
    EigenSource, SpectrumReport, SubspaceEigenvalues, DEFAULT_DENSE_LIMIT, UNIT_TOLERANCE,
};
