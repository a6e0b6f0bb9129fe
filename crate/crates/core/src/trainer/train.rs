//! Mini-batch gradient descent with momentum on BCE or BCE + LCP.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::model::ClassifierModel;
use super::synth::Split;
use crate::audit::{audit_binary, binarize};
use crate::compensate::compensate_in_place;
use crate::error::{Error, Result};
use crate::loss::{
    bce_logit_grad, bce_mean, lcp_loss, soft_lcp_surrogate, total_loss, ConsistencyTally, LossConfig,
};
use crate::matrix::{BinaryMatrix, ScoreMatrix};
use crate::metrics::attribute_accuracy;
use crate::schema::AttributeSchema;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    Bce,
    BceLcp,
}

/// How the LCP term reaches the parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LcpGradient {
    /// Product relaxation evaluated at the predicted probabilities.
    Soft,
    /// Relaxation evaluated at the thresholded (and, when enabled,
    /// compensated) predictions; its gradient is passed straight through
    /// the threshold.
    StraightThrough,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainConfig {
    pub mode: LossMode,
    pub compensation_in_training: bool,
    pub lcp_gradient: LcpGradient,
    pub loss: LossConfig,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub seed: u64,
    pub hidden: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: LossMode::BceLcp,
            compensation_in_training: false,
            lcp_gradient: LcpGradient::Soft,
            loss: LossConfig::default(),
            epochs: 30,
            batch_size: 256,
            learning_rate: 0.001,
            momentum: 0.9,
            seed: 1,
            hidden: vec![64, 64],
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.loss.validate()?;
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Input("epochs and batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Input(format!("learning_rate {} must be positive", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Input(format!("momentum {} must be in [0, 1)", self.momentum)));
        }
        if self.hidden.contains(&0) {
            return Err(Error::Input("hidden layer widths must be positive".into()));
        }
        Ok(())
    }
}

/// Batch objective and its gradient with respect to the output logits.
#[derive(Debug, Clone)]
pub struct Objective {
    pub total: f64,
    pub bce: f64,
    /// LCP term that entered the objective; zero in BCE mode or when lambda is 0.
    pub lcp: f64,
    pub dlogits: Vec<f64>,
}

/// Thresholds `probs` and, when asked, compensates each row with the probabilities as scores.
fn discretize(schema: &AttributeSchema, probs: &[f64], threshold: f64, compensate: bool) -> Vec<u8> {
    let k = schema.n_attributes();
    let mut bits: Vec<u8> = probs.iter().map(|&p| u8::from(p > threshold)).collect();
    if compensate {
        for (row, scores) in bits.chunks_exact_mut(k).zip(probs.chunks_exact(k)) {
            compensate_in_place(schema, scores, row);
        }
    }
    bits
}

pub fn objective(schema: &AttributeSchema, config: &TrainConfig, probs: &[f64], labels: &[u8]) -> Result<Objective> {
    let bce = bce_mean(probs, labels)?;
    let mut dlogits = bce_logit_grad(probs, labels);
    let lambda = config.loss.lambda;
    if config.mode == LossMode::Bce || lambda == 0.0 {
        return Ok(Objective { total: bce, bce, lcp: 0.0, dlogits });
    }
    let soft = match config.lcp_gradient {
        LcpGradient::Soft => soft_lcp_surrogate(schema, probs, &config.loss)?,
        LcpGradient::StraightThrough => {
            let bits = discretize(schema, probs, config.loss.threshold, config.compensation_in_training);
            let hard: Vec<f64> = bits.iter().map(|&b| f64::from(b)).collect();
            soft_lcp_surrogate(schema, &hard, &config.loss)?
        }
    };
    for ((d, g), &p) in dlogits.iter_mut().zip(&soft.grad).zip(probs) {
        *d = (1.0 - lambda) * *d + lambda * g * p * (1.0 - p);
    }
    Ok(Objective { total: total_loss(bce, soft.value, &config.loss), bce, lcp: soft.value, dlogits })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Row-weighted mean of the batch objectives.
    pub loss: f64,
    pub bce: f64,
    /// LCP penalty of the epoch's hard statistics.
    pub lcp: f64,
    pub p_ex: f64,
    pub p_d: f64,
    pub val_acc_avg: Option<f64>,
    pub val_failure_ratio: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ClassifierModel,
    pub log: Vec<EpochLog>,
}

fn check_split(schema: &AttributeSchema, split: &Split) -> Result<()> {
    if split.labels.n_cols() != schema.n_attributes() {
        return Err(Error::Dimension(format!(
            "labels have {} columns, schema has {}",
            split.labels.n_cols(),
            schema.n_attributes()
        )));
    }
    if split.labels.n_rows() != split.features.n_rows() {
        return Err(Error::Dimension(format!(
            "{} feature rows vs {} label rows",
            split.features.n_rows(),
            split.labels.n_rows()
        )));
    }
    split.features.check_finite()
}

/// Trains a fresh model. Deterministic for a fixed config and data.
pub fn train(schema: &AttributeSchema, config: &TrainConfig, data: &Split, val: Option<&Split>) -> Result<TrainOutcome> {
    config.validate()?;
    check_split(schema, data)?;
    if let Some(v) = val {
        check_split(schema, v)?;
        if v.features.n_cols() != data.features.n_cols() {
            return Err(Error::Dimension("validation features differ in width from training".into()));
        }
    }
    let n = data.features.n_rows();
    if n == 0 {
        return Err(Error::Input("empty training set".into()));
    }
    let d = data.features.n_cols();
    let k = schema.n_attributes();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut dims = vec![d];
    dims.extend_from_slice(&config.hidden);
    dims.push(k);
    let mut model = ClassifierModel::random(&dims, &mut rng)?;
    let mut velocity = vec![0.0; model.params().len()];
    let mut order: Vec<usize> = (0..n).collect();
    let mut log = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut tally = ConsistencyTally::new(schema);
        let (mut loss_sum, mut bce_sum) = (0.0, 0.0);
        for batch in order.chunks(config.batch_size) {
            let nb = batch.len();
            let mut x = Vec::with_capacity(nb * d);
            let mut y = Vec::with_capacity(nb * k);
            for &i in batch {
                x.extend_from_slice(data.features.row(i));
                y.extend_from_slice(data.labels.row(i));
            }
            let pass = model.forward(&x, nb)?;
            let obj = objective(schema, config, &pass.probs, &y)?;
            if !obj.total.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            let grad = model.backward(&x, nb, &pass, &obj.dlogits);
            for ((p, v), g) in model.params_mut().iter_mut().zip(&mut velocity).zip(&grad) {
                *v = config.momentum * *v - config.learning_rate * g;
                *p += *v;
            }
            if model.params().iter().any(|p| !p.is_finite()) {
                return Err(Error::Divergence { epoch });
            }
            let bits = discretize(schema, &pass.probs, config.loss.threshold, config.compensation_in_training);
            for row in bits.chunks_exact(k) {
                tally.add_row(schema, row);
            }
            loss_sum += obj.total * nb as f64;
            bce_sum += obj.bce * nb as f64;
        }
        let stats = tally.stats(schema);
        let (val_acc_avg, val_failure_ratio) = match val {
            Some(v) => {
                let (_, preds) = evaluate(&model, &v.features, schema, config.loss.threshold)?;
                let acc = attribute_accuracy(&preds, &v.labels)?.acc_avg;
                let failed = audit_binary(schema, &preds)?.failure_ratio;
                (Some(acc), Some(failed))
            }
            None => (None, None),
        };
        let entry = EpochLog {
            epoch,
            loss: loss_sum / n as f64,
            bce: bce_sum / n as f64,
            lcp: lcp_loss(&stats, &config.loss),
            p_ex: stats.p_ex,
            p_d: stats.p_d,
            val_acc_avg,
            val_failure_ratio,
        };
        log::debug!("epoch {epoch}: loss {:.5} p_ex {:.4} p_d {:.4}", entry.loss, entry.p_ex, entry.p_d);
        log.push(entry);
    }
    Ok(TrainOutcome { model, log })
}

/// Logistic scores for every row plus their binarization at `threshold`.
pub fn evaluate(
    model: &ClassifierModel,
    features: &ScoreMatrix,
    schema: &AttributeSchema,
    threshold: f64,
) -> Result<(ScoreMatrix, BinaryMatrix)> {
    if features.n_cols() != model.input_dim() {
        return Err(Error::Dimension(format!(
            "features have {} columns, model expects {}",
            features.n_cols(),
            model.input_dim()
        )));
    }
    if model.output_dim() != schema.n_attributes() {
        return Err(Error::Dimension(format!(
            "model has {} outputs, schema has {} attributes",
            model.output_dim(),
            schema.n_attributes()
        )));
    }
    features.check_finite()?;
    let probs = model.predict_proba(features.values(), features.n_rows())?;
    let scores = ScoreMatrix::new(features.row_ids().to_vec(), schema.attributes().to_vec(), probs)?;
    let preds = binarize(&scores, threshold)?;
    Ok((scores, preds))
}
