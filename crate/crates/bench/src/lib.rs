//! Shared fixtures for the criterion benchmarks under `benches/`.

use hmg_core::devices::BidVector;
use hmg_core::model::{reference, validate_case, CoalitionStructure, ValidatedCase};

/// The shipped three-H-MG reference case, validated.
pub fn reference_case() -> ValidatedCase {
    validate_case(reference::table1_case()).expect("reference case validates")
}

/// Grand coalition and mid-grid bids for `case`.
pub fn grand_coalition(case: &ValidatedCase) -> (CoalitionStructure, BidVector) {
    let s = CoalitionStructure::new(case, (0..case.hmgs.len()).collect(), vec![]);
    (s, BidVector::uniform(case, 0.5, 0.5))
}
