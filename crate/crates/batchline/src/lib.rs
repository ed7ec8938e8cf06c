//! Batched codes on line networks.
//!
//! A line network chains `L` discrete memoryless channels; a batched code
//! sends batches of `M` symbols through it, re-encoded at every node by a
//! buffer-constrained recoder over `N` channel uses per link. This crate
//! builds the exact end-to-end batch channel for such schemes, computes its
//! capacity by Blahut–Arimoto, evaluates closed-form converse upper bounds
//! on the per-use rate (erasure, canonical and general regimes) together
//! with the constructive collapse witnesses behind them, and runs seeded
//! Monte-Carlo simulations at lengths where exact composition is infeasible.
//!
//! All information quantities are in nats. All matrices are indexed by the
//! fixed symbol order of their alphabets, lexicographically for words.

pub mod alphabet;
pub mod bounds;
pub mod channel;
pub mod composition;
pub mod config;
pub mod error;
pub mod infotheory;
mod matrix;
pub mod montecarlo;
pub mod recoding;

pub use alphabet::{word_from_index, word_index, words, Alphabet, Word};
pub use bounds::{
    canonical_bound, collapse_chain, erasure_bound, general_bound, halving_witness,
    verify_collapse, BoundParams, BoundRegime, BoundValue, CollapseWitness, HalvingWitness,
};
pub use channel::{
    apply_noise, canonical_witness, kron_power, kron_power_with, make_bec, make_bsc, make_custom,
    make_erasure, noise_probability, pairwise_overlap, sample_noise, CanonicalWitness, Dmc,
    NoiseRealization, SizeBudget,
};
pub use composition::{
    bottleneck_decompose, end_to_end, end_to_end_with, group_hops, prefix_matrix,
    run_deterministic, BatchNetwork, Decomposition, HopGrouping,
};
pub use error::{Error, ErrorCategory, Result};
pub use infotheory::{
    batch_rate, blahut_arimoto, mutual_information, CapacityResult, InputDistribution,
};
pub use montecarlo::{simulate, sweep, sweep_csv, InputLaw, SimReport, SweepRow};
pub use recoding::{
    buffer_bits, builtin_scheme, derive_phi, derive_phi_with, BuiltinScheme, NodeMatrix,
    NodeRecoder, NodeStage, RecodingScheme, SchemeParams, SourceRecoder, StepOutcome,
};

/// Nine significant digits in scientific notation; the fixed numeric format
/// for text and CSV output.
pub fn format_sig(value: f64) -> String {
    format!("{value:.8e}")
}
