//! Inputs shared by the benchmarks.

use maxdet::constructions::{circulant_search, paley_hadamard};
use maxdet::SignMatrix;

/// A (5,5) circulant design of order 26 with many switching neighbours.
pub fn order26() -> SignMatrix {
    circulant_search(26)
        .expect("order 26 is searchable")
        .into_iter()
        .max_by_key(|d| maxdet::switch_neighbors(&d.matrix).len())
        .expect("order 26 has designs")
        .matrix
}

pub fn paley(q: u64) -> SignMatrix {
    paley_hadamard(q).expect("prime power q = 3 mod 4")
}
