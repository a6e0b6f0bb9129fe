//! Binary cross-entropy, consistency statistics, and the LCP penalty.
//!
//! The consistency statistics work on thresholded predictions. For every
//! exclusion rule `(a, L)` the conditional frequency is
//! `#{rows: a = 1 and some l in L is 1} / #{rows: a = 1}`, and `p_ex` is the
//! mean over rules whose subject fired at least once. `p_d` is the same mean
//! over dependency rules. The penalty is `(alpha * p_ex + beta * (1 - p_d))^2`.
//!
//! Thresholded values have zero gradient almost everywhere, so
//! [`soft_lcp_surrogate`] relaxes the indicators: `[a = 1]` becomes `p(a)` and
//! `[some l = 1]` becomes `1 - prod(1 - p(l))`. At binary inputs the surrogate
//! equals the hard value exactly.
//!
//! All reductions run left to right over rows, then rules, so results are
//! bitwise reproducible.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{BinaryMatrix, ScoreMatrix};
use crate::schema::{AttributeSchema, Rule};

/// Probabilities are clamped to `[PROB_EPS, 1 - PROB_EPS]` before logarithms.
pub const PROB_EPS: f64 = 1e-7;

/// Soft rules whose summed subject probability falls below this are skipped.
pub const SOFT_DENOMINATOR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossConfig {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub threshold: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig { alpha: 1.0, beta: 24.0, lambda: 0.5, threshold: 0.5 }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha >= 0.0
            && self.beta >= 0.0
            && (0.0..=1.0).contains(&self.lambda)
            && self.alpha.is_finite()
            && self.beta.is_finite()
            && self.threshold.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Input(format!(
                "loss config needs alpha >= 0, beta >= 0, 0 <= lambda <= 1 and a finite threshold, got {self:?}"
            )))
        }
    }
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// Mean binary cross-entropy over all entries of two equally long slices.
pub fn bce_mean(probs: &[f64], labels: &[u8]) -> Result<f64> {
    if probs.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} probabilities vs {} labels",
            probs.len(),
            labels.len()
        )));
    }
    if probs.is_empty() {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for (&p, &y) in probs.iter().zip(labels) {
        let p = clamp_prob(p);
        sum -= if y != 0 { p.ln() } else { (1.0 - p).ln() };
    }
    Ok(sum / probs.len() as f64)
}

pub fn bce_loss(probs: &ScoreMatrix, labels: &BinaryMatrix) -> Result<f64> {
    if probs.n_rows() != labels.n_rows() || probs.n_cols() != labels.n_cols() {
        return Err(Error::Dimension(format!(
            "probabilities {}x{} vs labels {}x{}",
            probs.n_rows(),
            probs.n_cols(),
            labels.n_rows(),
            labels.n_cols()
        )));
    }
    bce_mean(probs.values(), labels.values())
}

/// Gradient of [`bce_mean`] with respect to the logits behind `probs`.
/// Clamped entries contribute zero.
pub fn bce_logit_grad(probs: &[f64], labels: &[u8]) -> Vec<f64> {
    let scale = 1.0 / probs.len().max(1) as f64;
    probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            if !(PROB_EPS..=1.0 - PROB_EPS).contains(&p) {
                0.0
            } else {
                (p - f64::from(y)) * scale
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleFrequency {
    pub subject: usize,
    /// Rows (or summed subject probability) where the subject is positive.
    pub fired: f64,
    /// Of those, rows where some target is positive.
    pub hits: f64,
    /// `hits / fired`, absent when the rule never fired.
    pub frequency: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyStats {
    pub p_ex: f64,
    pub p_d: f64,
    pub exclusion: Vec<RuleFrequency>,
    pub dependency: Vec<RuleFrequency>,
}

fn mean_frequency(rules: &[RuleFrequency], fallback: f64) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for f in rules.iter().filter_map(|r| r.frequency) {
        sum += f;
        n += 1;
    }
    if n == 0 {
        fallback
    } else {
        sum / n as f64
    }
}

/// Integer hit counts for every rule, accumulated over any number of rows.
#[derive(Debug, Clone)]
pub struct ConsistencyTally {
    exclusion: Vec<(u64, u64)>,
    dependency: Vec<(u64, u64)>,
}

impl ConsistencyTally {
    pub fn new(schema: &AttributeSchema) -> Self {
        ConsistencyTally {
            exclusion: vec![(0, 0); schema.exclusion_rules().len()],
            dependency: vec![(0, 0); schema.dependency_rules().len()],
        }
    }

    pub fn add_row(&mut self, schema: &AttributeSchema, row: &[u8]) {
        fn count(rules: &[Rule], slots: &mut [(u64, u64)], row: &[u8]) {
            for (rule, slot) in rules.iter().zip(slots) {
                if row[rule.subject] != 0 {
                    slot.0 += 1;
                    if rule.targets.iter().any(|&t| row[t] != 0) {
                        slot.1 += 1;
                    }
                }
            }
        }
        count(schema.exclusion_rules(), &mut self.exclusion, row);
        count(schema.dependency_rules(), &mut self.dependency, row);
    }

    pub fn stats(&self, schema: &AttributeSchema) -> ConsistencyStats {
        let freq = |rules: &[Rule], slots: &[(u64, u64)]| -> Vec<RuleFrequency> {
            rules
                .iter()
                .zip(slots)
                .map(|(r, &(fired, hits))| RuleFrequency {
                    subject: r.subject,
                    fired: fired as f64,
                    hits: hits as f64,
                    frequency: (fired > 0).then(|| hits as f64 / fired as f64),
                })
                .collect()
        };
        let exclusion = freq(schema.exclusion_rules(), &self.exclusion);
        let dependency = freq(schema.dependency_rules(), &self.dependency);
        ConsistencyStats {
            p_ex: mean_frequency(&exclusion, 0.0),
            p_d: mean_frequency(&dependency, 1.0),
            exclusion,
            dependency,
        }
    }
}

/// Hard `p_ex` / `p_d` over thresholded predictions.
///
/// When no rule of a kind fires, `p_ex` falls back to 0 and `p_d` to 1, the
/// values of a batch with no evidence of inconsistency.
pub fn hard_consistency_stats(schema: &AttributeSchema, preds: &BinaryMatrix) -> Result<ConsistencyStats> {
    hard_stats_rows(schema, preds.values(), preds.n_cols())
}

pub fn hard_stats_rows(schema: &AttributeSchema, values: &[u8], width: usize) -> Result<ConsistencyStats> {
    if width != schema.n_attributes() {
        return Err(Error::Dimension(format!(
            "predictions have {width} columns, schema has {}",
            schema.n_attributes()
        )));
    }
    let mut tally = ConsistencyTally::new(schema);
    if width > 0 {
        for row in values.chunks_exact(width) {
            tally.add_row(schema, row);
        }
    }
    Ok(tally.stats(schema))
}

pub fn lcp_value(p_ex: f64, p_d: f64, config: &LossConfig) -> f64 {
    let inner = config.alpha * p_ex + config.beta * (1.0 - p_d);
    inner * inner
}

pub fn lcp_loss(stats: &ConsistencyStats, config: &LossConfig) -> f64 {
    lcp_value(stats.p_ex, stats.p_d, config)
}

/// `(1 - lambda) * bce + lambda * lcp`.
pub fn total_loss(bce: f64, lcp: f64, config: &LossConfig) -> f64 {
    (1.0 - config.lambda) * bce + config.lambda * lcp
}

/// Surrogate value with its gradient with respect to every input probability.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLcp {
    pub value: f64,
    pub stats: ConsistencyStats,
    /// Row-major, same shape as the input.
    pub grad: Vec<f64>,
}

/// Relaxed conditional frequency of one rule.
fn soft_rule(rule: &Rule, probs: &[f64], k: usize, n: usize) -> RuleFrequency {
    let mut fired = 0.0;
    let mut hits = 0.0;
    for row in 0..n {
        let p = &probs[row * k..(row + 1) * k];
        let miss: f64 = rule.targets.iter().map(|&t| 1.0 - p[t]).product();
        fired += p[rule.subject];
        hits += p[rule.subject] * (1.0 - miss);
    }
    RuleFrequency {
        subject: rule.subject,
        fired,
        hits,
        frequency: (fired >= SOFT_DENOMINATOR_FLOOR).then(|| hits / fired),
    }
}

fn add_soft_rule_grad(rule: &Rule, freq: &RuleFrequency, probs: &[f64], k: usize, weight: f64, grad: &mut [f64]) {
    let Some(r) = freq.frequency else { return };
    let s = freq.fired;
    for row in 0..probs.len() / k {
        let p = &probs[row * k..(row + 1) * k];
        let g = &mut grad[row * k..(row + 1) * k];
        let miss: f64 = rule.targets.iter().map(|&t| 1.0 - p[t]).product();
        g[rule.subject] += weight * ((1.0 - miss) - r) / s;
        for &l in &rule.targets {
            let others: f64 = rule.targets.iter().filter(|&&m| m != l).map(|&m| 1.0 - p[m]).product();
            g[l] += weight * p[rule.subject] * others / s;
        }
    }
}

/// Differentiable relaxation of [`hard_consistency_stats`] followed by
/// [`lcp_loss`]. `probs` is row-major with the schema's width.
pub fn soft_lcp_surrogate(schema: &AttributeSchema, probs: &[f64], config: &LossConfig) -> Result<SoftLcp> {
    let k = schema.n_attributes();
    if k == 0 || !probs.len().is_multiple_of(k) {
        return Err(Error::Dimension(format!(
            "{} probabilities is not a whole number of rows of width {k}",
            probs.len()
        )));
    }
    let n = probs.len() / k;
    let exclusion: Vec<RuleFrequency> =
        schema.exclusion_rules().iter().map(|r| soft_rule(r, probs, k, n)).collect();
    let dependency: Vec<RuleFrequency> =
        schema.dependency_rules().iter().map(|r| soft_rule(r, probs, k, n)).collect();
    let p_ex = mean_frequency(&exclusion, 0.0);
    let p_d = mean_frequency(&dependency, 1.0);
    let inner = config.alpha * p_ex + config.beta * (1.0 - p_d);
    let value = inner * inner;

    let mut grad = vec![0.0; probs.len()];
    let active = |fs: &[RuleFrequency]| fs.iter().filter(|f| f.frequency.is_some()).count();
    let (n_ex, n_d) = (active(&exclusion), active(&dependency));
    if n_ex > 0 {
        let w = 2.0 * inner * config.alpha / n_ex as f64;
        for (rule, f) in schema.exclusion_rules().iter().zip(&exclusion) {
            add_soft_rule_grad(rule, f, probs, k, w, &mut grad);
        }
    }
    if n_d > 0 {
        let w = -2.0 * inner * config.beta / n_d as f64;
        for (rule, f) in schema.dependency_rules().iter().zip(&dependency) {
            add_soft_rule_grad(rule, f, probs, k, w, &mut grad);
        }
    }
    Ok(SoftLcp { value, stats: ConsistencyStats { p_ex, p_d, exclusion, dependency }, grad })
}

/// Matrix form of [`soft_lcp_surrogate`].
pub fn soft_lcp_matrix(schema: &AttributeSchema, probs: &ScoreMatrix, config: &LossConfig) -> Result<SoftLcp> {
    if probs.n_cols() != schema.n_attributes() {
        return Err(Error::Dimension(format!(
            "probabilities have {} columns, schema has {}",
            probs.n_cols(),
            schema.n_attributes()
        )));
    }
    soft_lcp_surrogate(schema, probs.values(), config)
}
