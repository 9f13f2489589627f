//! Shared inputs for the benchmarks.

use fase_core::{
    build_gram_tables, build_weight_field, generate_dictionary, Complex64, Dictionary,
    ExtrapConfig, Field2D, GramTable, LossMask, Result, TransformKind, WeightField,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A square area with a central lost block and a random signal.
pub struct Fixture {
    pub signal: Field2D,
    pub mask: LossMask,
    pub weight: WeightField,
    pub dict: Dictionary,
}

impl Fixture {
    /// `side x side` area losing the central `side / 4` square.
    pub fn new(kind: TransformKind, side: usize, seed: u64) -> Result<Self> {
        let mask = LossMask::central_block(side, side, (side / 4).max(1), (side / 4).max(1))?;
        let weight = build_weight_field(&mask, ExtrapConfig::default().rho_hat)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let signal = Field2D::from_fn(side, side, |_, _| {
            Complex64::new(rng.gen_range(0.0..255.0), 0.0)
        })?;
        let dict = generate_dictionary(kind, side, side)?;
        Ok(Self {
            signal,
            mask,
            weight,
            dict,
        })
    }

    pub fn config(&self, iterations: usize) -> ExtrapConfig {
        ExtrapConfig {
            iterations,
            ..ExtrapConfig::default()
        }
    }

    pub fn tables(&self) -> Result<GramTable> {
        build_gram_tables(&self.dict, &self.weight)
    }
}
