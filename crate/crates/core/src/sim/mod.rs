//! Deterministic synthetic enrichment functions and parameter learning.

mod learn;
mod normal;

pub use learn::{
    auc, learn_decision_table, learn_decision_table_from, seed_function, seed_index, LearnedParams, ValidationSet,
};
pub use normal::inv_norm_cdf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::model::{EnrichmentFunctionSpec, Object};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a over a sequence of byte fields, each followed by a separator.
pub fn stream_seed(fields: &[&[u8]]) -> u64 {
    let mut h = FNV_OFFSET;
    for f in fields {
        for b in f.iter().chain(std::iter::once(&0xffu8)) {
            h ^= u64::from(*b);
            h = h.wrapping_mul(FNV_PRIME);
        }
    }
    h
}

/// Binormal score model calibrated so that the ROC area equals the quality.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoreModel {
    /// Mean score gap between positives and negatives.
    pub separation: f64,
}

impl ScoreModel {
    pub fn from_quality(q: f64) -> Self {
        ScoreModel { separation: std::f64::consts::SQRT_2 * inv_norm_cdf(q) }
    }

    /// Posterior probability of the tag given a score when the tag's base
    /// rate is `prior`.
    pub fn posterior(&self, score: f64, prior: f64) -> f64 {
        let d = self.separation;
        1.0 / (1.0 + (1.0 - prior) / prior * (d * d / 2.0 - d * score).exp())
    }

    /// Output for a standard normal draw `z`.
    pub fn output(&self, positive: bool, z: f64, prior: f64) -> f64 {
        let d = self.separation;
        if d.is_infinite() {
            let sure = (d > 0.0) == positive;
            return if sure { 1.0 } else { 0.0 };
        }
        let score = if positive { d + z } else { z };
        self.posterior(score, prior)
    }
}

/// Result of running one function on one (object, tag).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub prob: f64,
    pub cost: f64,
}

/// Source of function outputs and charged costs, pure in (seed, function, object, tag).
#[derive(Clone, Debug)]
pub struct Simulator {
    seed: u64,
}

impl Simulator {
    pub fn new(seed: u64) -> Self {
        Simulator { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn rng(&self, function: &str, object: &str, tag: &str, salt: &str) -> ChaCha8Rng {
        let s = self.seed.to_le_bytes();
        ChaCha8Rng::seed_from_u64(stream_seed(&[&s, function.as_bytes(), object.as_bytes(), tag.as_bytes(), salt.as_bytes()]))
    }

    /// Cost charged for the call; `cost·(1 + jitter·u)` with u uniform on [-1, 1].
    pub fn charge(&self, function: &EnrichmentFunctionSpec, object: &Object, tag: &str) -> f64 {
        if function.cost_jitter == 0.0 {
            return function.cost;
        }
        let u: f64 = self.rng(&function.id, &object.id, tag, "cost").random_range(-1.0..=1.0);
        function.cost * (1.0 + function.cost_jitter * u)
    }

    /// Probability that `object` carries `tag` according to `function`,
    /// calibrated to the tag's base rate `prior`.
    pub fn probability(&self, function: &EnrichmentFunctionSpec, object: &Object, tag: &str, prior: f64) -> f64 {
        let positive = object.truth.get(&function.tag_type).is_some_and(|t| t == tag);
        let z: f64 = self.rng(&function.id, &object.id, tag, "score").sample(StandardNormal);
        ScoreModel::from_quality(function.quality).output(positive, z, prior)
    }

    pub fn evaluate(&self, function: &EnrichmentFunctionSpec, object: &Object, tag: &str, prior: f64) -> Evaluation {
        Evaluation { prob: self.probability(function, object, tag, prior), cost: self.charge(function, object, tag) }
    }
}
