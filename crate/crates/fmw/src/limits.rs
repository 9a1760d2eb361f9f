//! Resource caps for the exhaustive operations.

use crate::error::{Error, Result};

/// Caps on the brute-force work a single operation may perform. All checks
/// are exact; exceeding a cap is a hard error, never a silent truncation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Maximum number of assignments enumerated by a satisfaction check.
    pub max_assignments: u64,
    /// Maximum number of tuples in a direct or reduced product carrier.
    pub max_product_tuples: u64,
    /// Maximum number of nodes explored by a morphism search, and of
    /// candidate maps tried by the witness engines.
    pub max_search_nodes: u64,
    /// Maximum number of clauses produced by the bounded enumerator.
    pub max_formulas: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_assignments: 1_000_000,
            max_product_tuples: 4096,
            max_search_nodes: 1_000_000,
            max_formulas: 200_000,
        }
    }
}

impl Limits {
    pub fn check(&self, what: &'static str, needed: u128, cap: u64) -> Result<()> {
        if needed > cap as u128 {
            Err(Error::Resource {
                what,
                needed,
                cap: cap as u128,
            })
        } else {
            Ok(())
        }
    }
}
