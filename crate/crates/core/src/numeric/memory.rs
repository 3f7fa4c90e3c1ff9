use serde::{Deserialize, Serialize};

use super::{BlrFactors, SupernodeFactor};
use crate::symbolic::{Permutation, SupernodePartition};

/// Index overhead charged per low-rank tile (rank and shape).
pub const LOW_RANK_HEADER_BYTES: usize = 16;

/// Byte counts of a factorisation. `factor_bytes` counts stored values only.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryLedger {
    pub factor_bytes: usize,
    pub index_bytes: usize,
    pub peak_bytes: usize,
}

impl MemoryLedger {
    pub(crate) fn from_factors(
        part: &SupernodePartition,
        perm: &Permutation,
        supernodes: &[SupernodeFactor],
        peak_bytes: usize,
    ) -> Self {
        let word = std::mem::size_of::<usize>();
        let mut values = 0usize;
        let mut index = 2 * perm.len() * word + part.boundaries().len() * word;
        for (s, f) in supernodes.iter().enumerate() {
            values += f.diag.len();
            index += (part.rows(s).len() + f.pivots.len()) * word;
            for t in f.lower.iter().chain(&f.upper) {
                values += t.block.stored_entries();
                if t.block.is_low_rank() {
                    index += LOW_RANK_HEADER_BYTES;
                }
            }
        }
        let factor_bytes = 8 * values;
        Self {
            factor_bytes,
            index_bytes: index,
            peak_bytes: peak_bytes.max(factor_bytes),
        }
    }

    pub fn total_bytes(&self) -> usize {
        self.factor_bytes + self.index_bytes
    }

    /// Componentwise sum, used for block-diagonal preconditioners.
    pub fn add(&self, other: &MemoryLedger) -> MemoryLedger {
        MemoryLedger {
            factor_bytes: self.factor_bytes + other.factor_bytes,
            index_bytes: self.index_bytes + other.index_bytes,
            peak_bytes: self.peak_bytes + other.peak_bytes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryReport {
    pub ledger: MemoryLedger,
    /// `factor_bytes / baseline.factor_bytes` when a baseline is given.
    pub ratio: Option<f64>,
}

pub fn memory_report(factors: &BlrFactors, baseline: Option<&MemoryLedger>) -> MemoryReport {
    let ledger = *factors.ledger();
    let ratio = baseline
        .filter(|b| b.factor_bytes > 0)
        .map(|b| ledger.factor_bytes as f64 / b.factor_bytes as f64);
    MemoryReport { ledger, ratio }
}
