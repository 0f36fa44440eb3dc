//! Mergeable distinct-count sketch for approximate per-edge user counts.
//!
//! A plain HyperLogLog with 2^12 registers (~1.6% relative error). Used
//! only when the graph builder runs in `sketch` support mode; results are
//! flagged approximate and excluded from exactness checks.

use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

const PRECISION: u32 = 12;
const N_REGISTERS: usize = 1 << PRECISION;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistinctSketch {
    registers: Vec<u8>,
}

impl Default for DistinctSketch {
    fn default() -> Self {
        Self::new()
    }
}

impl DistinctSketch {
    pub fn new() -> Self {
        DistinctSketch {
            registers: vec![0; N_REGISTERS],
        }
    }

    pub fn insert(&mut self, item: &str) {
        let mut hasher = std::collections::hash_map::DefaultHasher::new();
        item.hash(&mut hasher);
        let h = hasher.finish();
        let idx = (h >> (64 - PRECISION)) as usize;
        let rest = h << PRECISION;
        // Rank of the first set bit in the remaining 64-P bits.
        let rank = (rest.leading_zeros() + 1).min(64 - PRECISION + 1) as u8;
        if rank > self.registers[idx] {
            self.registers[idx] = rank;
        }
    }

    pub fn merge(&mut self, other: &DistinctSketch) {
        for (a, b) in self.registers.iter_mut().zip(&other.registers) {
            *a = (*a).max(*b);
        }
    }

    pub fn estimate(&self) -> f64 {
        let m = N_REGISTERS as f64;
        let sum: f64 = self
            .registers
            .iter()
            .map(|&r| 2f64.powi(-(r as i32)))
            .sum();
        let alpha = 0.7213 / (1.0 + 1.079 / m);
        let raw = alpha * m * m / sum;
        if raw <= 2.5 * m {
            let zeros = self.registers.iter().filter(|&&r| r == 0).count();
            if zeros != 0 {
                // Linear counting regime.
                return m * (m / zeros as f64).ln();
            }
        }
        raw
    }
}
