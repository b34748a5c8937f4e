//! Maximal-determinant ±1 matrices: exact arithmetic, Gram classification,
//! Hadamard-equivalence canonical forms, switching, and constructions.

pub mod canonical;
pub mod constructions;
pub mod decomposition;
pub mod det;
pub mod error;
pub mod fixtures;
pub mod forms;
pub mod gram;
pub mod matrix;
pub mod qclass;
pub mod search;
pub mod switching;

pub use canonical::{
    are_equivalent, automorphism_count, canonical_form, canonical_key, canonical_key_and_form,
    duality_status, CanonicalForm, CanonicalKey, DesignGraph, DualityStatus,
};
pub use decomposition::{decompose_gram, decompose_gram_with, DecomposeMode, DecomposeOptions};
pub use det::{abs_determinant, determinant, factor_power_of_two, ExactInteger};
pub use error::{Error, Result};
pub use forms::{classify_gram, verify_design, DesignReport, GramForm};
pub use gram::{block_profile, even_block_profile, gram, BlockProfile, GramMatrix, Side};
pub use matrix::{
    apply_equivalence_op, excess, row_sum_triples, EquivalenceOp, RowSumTriple, SignMatrix,
};
pub use switching::{
    apply_switch, column_types, find_quadruples, switch_neighbors, Axis, ColumnTypePartition,
    SwitchQuadruple,
};
pub use qclass::{
    classify_duality, merge_registries, q_closure, q_closure_into, ClassRecord, Limits,
    QClassReport, Registry,
};
pub use search::{augment_seed, exhaustive_max_det, hill_climb, ClimbConfig, ClimbResult, SeedStrategy};
