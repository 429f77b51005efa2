//! Google matrix analysis of directed networks: invariant subspace
//! decomposition, spectra of the link matrix and its core block, core-space
//! gaps, and PageRank across the whole damping range.

pub mod decompose;
pub mod dense;
pub mod error;
pub mod graph;
pub mod operator;
pub mod pagerank;
pub mod spectral;
pub mod stats;
pub mod synth;

pub use decompose::{
    decompose, reachable_closure, verify_decomposition, zero_node_orders, Closure, DecomposeConfig, Decomposition,
    NodeClass, Subspace, VerificationReport,
};
pub use error::{Error, Result};
pub use graph::DirectedGraph;
pub use operator::{Parallelism, RankVector, StochasticOperator};
pub use pagerank::{
    core_residual_weight, fidelity, power_iterate, rank_order, rank_positions, refined_arnoldi_step,
    solve_pagerank_dense, solve_pagerank_hybrid, PageRankResult, SolverConfig,
};
pub use spectral::{gap_via_arnoldi, gap_via_projected_power, GapConfig, GapMethod, GapResult};
pub use stats::{alpha_scan, fit_rank_exponent, fit_subspace_ccdf, rescaled_rank_curve, subspace_ccdf};
pub use synth::{generate_synthetic, Ensemble};
