//! Seeded fixtures shared by the benchmarks.

use lcp_core::{AttributeSchema, BinaryMatrix, ScoreMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` rows of uniform scores in `[0, 1)` over the schema's attributes.
pub fn random_scores(schema: &AttributeSchema, n: usize, seed: u64) -> ScoreMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = schema.n_attributes();
    let values = (0..n * k).map(|_| rng.random::<f64>()).collect();
    ScoreMatrix::new((0..n).map(|i| format!("r{i}")).collect(), schema.attributes().to_vec(), values)
        .expect("shape is consistent")
}

/// Predictions with each entry positive with probability `p`.
pub fn random_predictions(schema: &AttributeSchema, n: usize, p: f64, seed: u64) -> BinaryMatrix {
    random_scores(schema, n, seed).map(|v| u8::from(v < p))
}
