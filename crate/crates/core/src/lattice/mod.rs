//! Disorder fields and everything computed on them: log-domain
//! transfer-matrix partition functions, strip measures, polymer-path
//! sampling, replica identities, free-energy ensembles and the weight-swap
//! experiment.

pub mod dp;
pub mod ensemble;
pub mod replica;
pub mod strip;

pub use dp::PartitionTables;
pub use ensemble::{
    free_energy_ensemble, lindeberg_sweep, midpoint_spread, FreeEnergySample, LindebergConfig,
    SwapArm, SwapDiff, SwapReport, TestFn,
};
pub use replica::{replica_moment_identity, replica_triple_overlap, ReplicaIdentity};
pub use strip::{MuEndpoints, StripSpec};

use crate::rng::{mix2, mix3, SplitMix64};
use crate::weights::{draw_weight, PolymerParams, WeightFamily};
use std::sync::atomic::{AtomicU64, Ordering};

#[derive(Debug, thiserror::Error)]
pub enum LatticeError {
    #[error("site ({0}, {1}) is not reachable")]
    UnreachableSite(u64, i64),
    #[error("enumeration guard: 2n = {0} exceeds 20")]
    TooLarge(u64),
    #[error("invalid strip: {0}")]
    InvalidStrip(String),
    #[error("weights error: {0}")]
    Weights(#[from] crate::weights::WeightsError),
    #[error("{0}")]
    Invalid(String),
}

/// Which family a site draws from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaskSpec {
    /// every site uses family A
    ConstantA,
    /// i.i.d. per-site mask: family B with this probability, frozen per seed
    Iid { fraction: f64 },
    /// the first `swapped` strips of `strip_len` columns use family B
    Strips { strip_len: u64, swapped: u64 },
}

const TAG_A: u64 = 0xA11C_E0DE;
const TAG_B: u64 = 0xB0B5_EED5;
const TAG_MASK: u64 = 0x3A5C_0FFE;

/// An immutable lattice of per-site weights, materialized lazily: the weight
/// at (i, j) is a pure function of (seed, i, j, mask(i, j)), so re-evaluation
/// yields the identical value and no per-site storage is needed.
#[derive(Debug)]
pub struct DisorderField {
    n: u64,
    beta: f64,
    family_a: WeightFamily,
    family_b: Option<WeightFamily>,
    mask: MaskSpec,
    seed: u64,
    linear_rejections: AtomicU64,
}

impl DisorderField {
    pub fn new(params: &PolymerParams, family: WeightFamily, seed: u64) -> DisorderField {
        DisorderField {
            n: params.n,
            beta: params.beta,
            family_a: family,
            family_b: None,
            mask: MaskSpec::ConstantA,
            seed,
            linear_rejections: AtomicU64::new(0),
        }
    }

    /// Field with an explicit inverse temperature (test and degenerate
    /// configurations; `beta = 0` with the standard family gives unit weights).
    pub fn with_beta(n: u64, beta: f64, family: WeightFamily, seed: u64) -> DisorderField {
        DisorderField {
            n,
            beta,
            family_a: family,
            family_b: None,
            mask: MaskSpec::ConstantA,
            seed,
            linear_rejections: AtomicU64::new(0),
        }
    }

    /// Two-family field mixed by the mask.
    pub fn hybrid(
        params: &PolymerParams,
        family_a: WeightFamily,
        family_b: WeightFamily,
        mask: MaskSpec,
        seed: u64,
    ) -> DisorderField {
        DisorderField {
            n: params.n,
            beta: params.beta,
            family_a,
            family_b: Some(family_b),
            mask,
            seed,
            linear_rejections: AtomicU64::new(0),
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn family_a(&self) -> &WeightFamily {
        &self.family_a
    }

    pub fn mask(&self) -> MaskSpec {
        self.mask
    }

    /// Rejected linear-family draws re-sampled so far.
    pub fn linear_rejections(&self) -> u64 {
        self.linear_rejections.load(Ordering::Relaxed)
    }

    /// Heights reachable in column i: max(0, i - n) ..= min(i, n).
    pub fn height_range(&self, i: u64) -> (i64, i64) {
        let n = self.n as i64;
        let i = i as i64;
        (0.max(i - n), i.min(n))
    }

    pub fn site_reachable(&self, i: u64, j: i64) -> bool {
        if i > 2 * self.n {
            return false;
        }
        let (lo, hi) = self.height_range(i);
        (lo..=hi).contains(&j)
    }

    /// True when the site draws from family B.
    pub fn site_is_b(&self, i: u64, j: i64) -> bool {
        match self.mask {
            MaskSpec::ConstantA => false,
            MaskSpec::Iid { fraction } => {
                if self.family_b.is_none() {
                    return false;
                }
                let mut rng = SplitMix64::new(mix3(self.seed ^ TAG_MASK, i, j as u64));
                rng.next_f64() < fraction
            }
            MaskSpec::Strips { strip_len, swapped } => {
                self.family_b.is_some() && strip_len > 0 && i / strip_len < swapped
            }
        }
    }

    /// The weight at site (i, j).
    pub fn weight_at(&self, i: u64, j: i64) -> f64 {
        debug_assert!(self.site_reachable(i, j), "site ({i}, {j}) unreachable");
        let (family, tag) = if self.site_is_b(i, j) {
            (
                self.family_b
                    .as_ref()
                    .expect("mask selects B only with family_b"),
                TAG_B,
            )
        } else {
            (&self.family_a, TAG_A)
        };
        let mut rng = SplitMix64::new(mix3(self.seed ^ tag, i, j as u64));
        let (w, rejections) = draw_weight(family, self.beta, &mut rng);
        if rejections > 0 {
            self.linear_rejections
                .fetch_add(rejections, Ordering::Relaxed);
        }
        w
    }

    /// Derives the per-sample field seed from a master seed and sample index.
    pub fn sample_seed(master_seed: u64, index: u64) -> u64 {
        mix2(master_seed, index)
    }
}
