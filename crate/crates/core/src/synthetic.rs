//! Seeded synthetic binary datasets with a planted rule list, for examples,
//! tests and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::Bits;
use crate::dataset::{BinaryDataset, SensitiveVector};

#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    pub n_examples: usize,
    pub n_features: usize,
    /// Probability that a feature cell is 1.
    pub density: f64,
    /// Probability that a label is flipped after the planted rules decide it.
    pub noise: f64,
    /// Probability that the sensitive attribute copies feature 0; otherwise
    /// it is an independent coin flip.
    pub sensitive_correlation: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_examples: 200,
            n_features: 6,
            density: 0.4,
            noise: 0.1,
            sensitive_correlation: 0.5,
            seed: 0,
        }
    }
}

/// Labels follow `if f0 & f1 then 1 else if f2 then 0 else if f3 then 1
/// else 0` (skipping features that do not exist), then noise is applied.
pub fn planted(config: &SyntheticConfig) -> (BinaryDataset, SensitiveVector) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (n, j) = (config.n_examples, config.n_features);
    let rows: Vec<Vec<bool>> = (0..n)
        .map(|_| (0..j).map(|_| rng.gen_bool(config.density)).collect())
        .collect();
    let f = |row: &[bool], i: usize| row.get(i).copied().unwrap_or(false);
    let labels: Vec<bool> = rows
        .iter()
        .map(|r| {
            let y = if f(r, 0) && f(r, 1) {
                true
            } else if f(r, 2) {
                false
            } else {
                f(r, 3)
            };
            y ^ rng.gen_bool(config.noise)
        })
        .collect();
    let z: Vec<bool> = rows
        .iter()
        .map(|r| {
            if rng.gen_bool(config.sensitive_correlation) {
                f(r, 0)
            } else {
                rng.gen_bool(0.5)
            }
        })
        .collect();
    let names = (0..j).map(|i| format!("f{i}")).collect();
    let features = (0..j)
        .map(|c| rows.iter().map(|r| r[c]).collect())
        .collect();
    let dataset = BinaryDataset::new(names, features, Bits::from_bools(labels))
        .expect("generated columns are consistent")
        .with_label_name("y");
    (dataset, SensitiveVector::new("z", Bits::from_bools(z)))
}
