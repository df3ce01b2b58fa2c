//! Geoeconomic complexity of emerging technologies from venture-capital deals.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`ingest`] parses deals and domain classifications, applies the
//!    sampling filters and aggregates investment per country, domain and year.
//! 2. [`specialization`] turns one year of investment into Revealed Venture
//!    Advantage ratios and a binary specialization matrix.
//! 3. [`complexity`] derives diversity, ubiquity, the domain index (ETGCI)
//!    from the second eigenvector of the domain co-occurrence matrix, and the
//!    country index (GCI).
//! 4. [`strategy`] ranks candidate domains by relatedness, simulates single
//!    additions and evaluates bloc-level specialization rules.
//!
//! ```
//! use geoecon::{analyze, SpecializationMatrix};
//!
//! let m = SpecializationMatrix::from_cells(vec![
//!     vec![1, 1, 1],
//!     vec![1, 1, 0],
//!     vec![1, 0, 0],
//! ])?;
//! let report = analyze(&m)?;
//! assert_eq!(report.etgci[2], Some(1.0));
//! assert_eq!(report.ranked_countries()[0], "c0");
//! # Ok::<(), geoecon::Error>(())
//! ```

pub mod cli;
pub mod complexity;
pub mod error;
pub mod ingest;
pub mod numeric;
pub mod specialization;
pub mod strategy;
pub mod synth;

pub use complexity::{
    analyze, compute_etgci, compute_gci, cooccurrence, diversity, rank_scores, top_eigenpairs,
    ubiquity, ComplexityReport, EigenResult, MatrixKind,
};
pub use error::{Error, Result};
pub use ingest::{
    aggregate, build_tensor, parse_classifications, parse_deals, select_firms,
    threshold_classifications, Attribution, ClassificationAssignment, DealRecord, Domain,
    FilterParams, InvestmentSlice, InvestmentTensor, Taxonomy,
};
pub use specialization::{
    binarize, compute_rva, compute_rva_slice, round_up_slice, round_up_variant, specialize,
    windowed_variant, RvaMatrix, SpecializationMatrix, Variant, VariantSpec,
};
pub use strategy::{
    bloc_experiment, bloc_experiment_with_flows, bloc_matrix, find_ssset, find_ssset_with,
    relatedness, relatedness_with, simulate_addition, BlocOutcome, BlocRule, RelatednessOptions,
    RelatednessTable, SimulationOutcome, Simulator, SssetReport, SssetRow,
};
