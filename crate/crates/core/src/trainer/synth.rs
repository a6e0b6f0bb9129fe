//! Seeded synthetic multi-label data whose labels are always consistent.
//!
//! Labels are drawn group by group: each exhaustive group not already
//! covered (through a shared attribute) gets one member chosen uniformly from
//! those that do not clash with positives already placed. Attributes outside
//! every exhaustive group are switched on with probability 1/2 when they do
//! not clash. Draws that dead-end or break a dependency rule are rejected.
//!
//! Features: the first K columns are the label bits plus Gaussian noise; the
//! next `feature_dim - K` columns are a fixed random linear mix of the labels
//! plus noise; `distractor_dims` unit-variance noise columns follow.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::audit::is_consistent;
use crate::error::{Error, Result};
use crate::matrix::{BinaryMatrix, ScoreMatrix};
use crate::schema::AttributeSchema;

/// Rejected draws allowed per accepted row before giving up.
pub const MAX_DRAWS_PER_ROW: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyntheticDatasetSpec {
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub feature_dim: usize,
    pub noise_sigma: f64,
    pub distractor_dims: usize,
    pub seed: u64,
}

impl Default for SyntheticDatasetSpec {
    fn default() -> Self {
        SyntheticDatasetSpec {
            n_train: 5_000,
            n_val: 1_000,
            n_test: 1_000,
            feature_dim: 32,
            noise_sigma: 0.8,
            distractor_dims: 8,
            seed: 2023,
        }
    }
}

impl SyntheticDatasetSpec {
    pub fn validate(&self, schema: &AttributeSchema) -> Result<()> {
        if self.n_train == 0 || self.n_val == 0 || self.n_test == 0 {
            return Err(Error::Input("dataset split sizes must be positive".into()));
        }
        if self.feature_dim < schema.n_attributes() {
            return Err(Error::Input(format!(
                "feature_dim {} is smaller than the {} schema attributes",
                self.feature_dim,
                schema.n_attributes()
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Input(format!("noise_sigma {} must be finite and >= 0", self.noise_sigma)));
        }
        Ok(())
    }

    pub fn total_features(&self) -> usize {
        self.feature_dim + self.distractor_dims
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub features: ScoreMatrix,
    pub labels: BinaryMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub train: Split,
    pub val: Split,
    pub test: Split,
    /// Draws thrown away by the label sampler across all splits.
    pub rejected_draws: u64,
}

/// Draws one consistent label row; returns it with the number of rejected draws.
pub fn sample_consistent_row(schema: &AttributeSchema, rng: &mut impl Rng) -> Result<(Vec<u8>, usize)> {
    let k = schema.n_attributes();
    let mut in_group = vec![false; k];
    for g in schema.exhaustive_groups() {
        for &m in &g.members {
            in_group[m] = true;
        }
    }
    let clashes = |row: &[u8], a: usize| (0..k).any(|p| row[p] != 0 && schema.are_exclusive(p, a));

    'draw: for attempt in 0..MAX_DRAWS_PER_ROW {
        let mut row = vec![0u8; k];
        for g in schema.exhaustive_groups() {
            if g.members.iter().any(|&m| row[m] != 0) {
                continue;
            }
            let candidates: Vec<usize> = g.members.iter().copied().filter(|&m| !clashes(&row, m)).collect();
            match candidates.choose(rng) {
                Some(&m) => row[m] = 1,
                None => continue 'draw,
            }
        }
        for a in (0..k).filter(|&a| !in_group[a]) {
            if rng.random_bool(0.5) && !clashes(&row, a) {
                row[a] = 1;
            }
        }
        if is_consistent(schema, &row) {
            return Ok((row, attempt));
        }
    }
    Err(Error::SamplingBudget { attempts: MAX_DRAWS_PER_ROW })
}

struct FeatureMap {
    k: usize,
    mix: Vec<f64>,
    mixed_dims: usize,
}

impl FeatureMap {
    fn new(k: usize, spec: &SyntheticDatasetSpec, rng: &mut impl Rng) -> Self {
        let mixed_dims = spec.feature_dim - k;
        let scale = 1.0 / (k.max(1) as f64).sqrt();
        let mix = (0..mixed_dims * k)
            .map(|_| rng.sample::<f64, _>(StandardNormal) * scale)
            .collect();
        FeatureMap { k, mix, mixed_dims }
    }

    fn embed(&self, labels: &[u8], sigma: f64, distractors: usize, rng: &mut impl Rng, out: &mut Vec<f64>) {
        for &y in labels {
            out.push(f64::from(y) + sigma * rng.sample::<f64, _>(StandardNormal));
        }
        for j in 0..self.mixed_dims {
            let w = &self.mix[j * self.k..(j + 1) * self.k];
            let clean: f64 = w.iter().zip(labels).map(|(w, &y)| w * f64::from(y)).sum();
            out.push(clean + sigma * rng.sample::<f64, _>(StandardNormal));
        }
        for _ in 0..distractors {
            out.push(rng.sample::<f64, _>(StandardNormal));
        }
    }
}

pub fn generate_synthetic(schema: &AttributeSchema, spec: &SyntheticDatasetSpec) -> Result<SyntheticData> {
    spec.validate(schema)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let k = schema.n_attributes();
    let map = FeatureMap::new(k, spec, &mut rng);
    let feature_names: Vec<String> = (0..spec.total_features()).map(|i| format!("f{i}")).collect();
    let mut rejected = 0u64;

    let mut split = |prefix: &str, n: usize| -> Result<Split> {
        let mut labels = Vec::with_capacity(n * k);
        let mut features = Vec::with_capacity(n * spec.total_features());
        for _ in 0..n {
            let (row, rejects) = sample_consistent_row(schema, &mut rng)?;
            rejected += rejects as u64;
            map.embed(&row, spec.noise_sigma, spec.distractor_dims, &mut rng, &mut features);
            labels.extend_from_slice(&row);
        }
        let ids: Vec<String> = (0..n).map(|i| format!("{prefix}-{i}")).collect();
        Ok(Split {
            features: ScoreMatrix::new(ids.clone(), feature_names.clone(), features)?,
            labels: BinaryMatrix::new(ids, schema.attributes().to_vec(), labels)?,
        })
    };
    let train = split("train", spec.n_train)?;
    let val = split("val", spec.n_val)?;
    let test = split("test", spec.n_test)?;
    if rejected > 0 {
        log::debug!("label sampler rejected {rejected} draws");
    }
    Ok(SyntheticData { train, val, test, rejected_draws: rejected })
}
