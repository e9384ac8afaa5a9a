//! Min-entropy of a probed wire.
//!
//! Probabilities stay exact (`max_count / q`); only the logarithms are
//! floating point. Compare entropies with [`ENTROPY_TOLERANCE`].

use num_rational::Ratio;
use serde::Serialize;

use crate::gadgets::BarrettParams;
use crate::preimage::MultiplicityProfile;

pub const ENTROPY_TOLERANCE: f64 = 1e-9;

/// `max_v Pr[wire = v | x] = max_count / q`, reduced.
pub fn max_output_probability(profile: &MultiplicityProfile) -> Ratio<u64> {
    Ratio::new(profile.max_count, profile.q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyBound {
    pub q: u64,
    pub max_prob_num: u64,
    pub max_prob_den: u64,
    pub exact_min_entropy_bits: f64,
    /// `log2 q - 1`, the floor implied by `max_count <= 2`.
    pub barrier_floor_bits: f64,
    pub slack_bits: f64,
}

impl EntropyBound {
    pub fn max_prob(&self) -> Ratio<u64> {
        Ratio::new(self.max_prob_num, self.max_prob_den)
    }
}

pub fn min_entropy(profile: &MultiplicityProfile) -> EntropyBound {
    let p = max_output_probability(profile);
    let log2_q = (profile.q as f64).log2();
    let exact = log2_q - (profile.max_count as f64).log2();
    let floor = log2_q - 1.0;
    EntropyBound {
        q: profile.q,
        max_prob_num: *p.numer(),
        max_prob_den: *p.denom(),
        exact_min_entropy_bits: exact,
        barrier_floor_bits: floor,
        slack_bits: exact - floor,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BarrierRow {
    pub q: u64,
    pub s: u32,
    pub log2_q: f64,
    pub floor_bits: f64,
    pub leakage_bound_bits: f64,
}

/// One 1-bit-barrier row per parameter set.
pub fn barrier_table(params: &[BarrettParams]) -> Vec<BarrierRow> {
    params
        .iter()
        .map(|p| {
            let log2_q = p.modulus().log2();
            BarrierRow { q: p.modulus().get(), s: p.shift(), log2_q, floor_bits: log2_q - 1.0, leakage_bound_bits: 1.0 }
        })
        .collect()
}
