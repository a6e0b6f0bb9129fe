//! Side-by-side training runs audited on a shared test split.
//!
//! Each variant is trained on the same data, its raw test predictions are
//! audited, and the same predictions are audited again after test-time
//! compensation.

use std::fmt::Write as _;

use serde::Serialize;

use super::synth::SyntheticData;
use super::config::RunConfig;
use super::synth::SyntheticDatasetSpec;
use super::train::{evaluate, train, EpochLog, LossMode, TrainConfig};
use crate::audit::{audit_binary, AuditReport};
use crate::compensate::compensate_binary;
use crate::error::Result;
use crate::metrics::{attribute_accuracy, consistency_enforced_accuracy, MetricsReport};
use crate::schema::AttributeSchema;

#[derive(Debug, Clone)]
pub struct Variant {
    pub label: String,
    pub config: TrainConfig,
}

/// BCE, BCE + LCP, and BCE + LCP with compensation during training.
///
/// All LCP variants use the gradient path set in `base`. With the soft path,
/// training-time compensation only changes the logged batch statistics.
pub fn standard_variants(base: &TrainConfig) -> Vec<Variant> {
    vec![
        Variant { label: "BCE".into(), config: TrainConfig { mode: LossMode::Bce, ..base.clone() } },
        Variant {
            label: "BCE + LCP".into(),
            config: TrainConfig {
                mode: LossMode::BceLcp,
                compensation_in_training: false,
                ..base.clone()
            },
        },
        Variant {
            label: "BCE + LCP + LC(train)".into(),
            config: TrainConfig {
                mode: LossMode::BceLcp,
                compensation_in_training: true,
                ..base.clone()
            },
        },
    ]
}

/// Configuration of the desk-scale trend run: default data spec and loss
/// coefficients, with a step size large enough to fit in 60 epochs.
pub fn standard_config() -> RunConfig {
    RunConfig {
        schema: crate::schema::BUILTIN_FH37K.to_string(),
        train: TrainConfig { learning_rate: 0.2, epochs: 60, ..TrainConfig::default() },
        data: SyntheticDatasetSpec::default(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VariantResult {
    pub label: String,
    pub raw_audit: AuditReport,
    pub compensated_audit: AuditReport,
    pub plain: MetricsReport,
    pub enforced: MetricsReport,
    pub compensated_plain: MetricsReport,
    pub compensated_enforced: MetricsReport,
    pub last_epoch: Option<EpochLog>,
}

pub fn run_variant(schema: &AttributeSchema, data: &SyntheticData, variant: &Variant) -> Result<VariantResult> {
    let outcome = train(schema, &variant.config, &data.train, Some(&data.val))?;
    let threshold = variant.config.loss.threshold;
    let (scores, preds) = evaluate(&outcome.model, &data.test.features, schema, threshold)?;
    let compensated = compensate_binary(schema, &scores, &preds)?;
    let labels = &data.test.labels;
    Ok(VariantResult {
        label: variant.label.clone(),
        raw_audit: audit_binary(schema, &preds)?,
        compensated_audit: audit_binary(schema, &compensated)?,
        plain: attribute_accuracy(&preds, labels)?,
        enforced: consistency_enforced_accuracy(schema, &preds, labels)?,
        compensated_plain: attribute_accuracy(&compensated, labels)?,
        compensated_enforced: consistency_enforced_accuracy(schema, &compensated, labels)?,
        last_epoch: outcome.log.last().cloned(),
    })
}

pub fn run_experiment(schema: &AttributeSchema, data: &SyntheticData, variants: &[Variant]) -> Result<Vec<VariantResult>> {
    variants.iter().map(|v| run_variant(schema, data, v)).collect()
}

/// Incomplete / impossible / failure-ratio table, raw and with test-time
/// compensation.
pub fn render_failure_table(results: &[VariantResult]) -> String {
    let width = results.iter().map(|r| r.label.len() + 5).max().unwrap_or(0).max(14);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$} | {:>8} | {:>8} | {:>8} | {:>8}", "model", "N_inp", "N_imp", "R_failed", "ACC_avg");
    let _ = writeln!(out, "{}", "-".repeat(width + 44));
    let mut line = |label: String, a: &AuditReport, m: &MetricsReport| {
        let _ = writeln!(
            out,
            "{:<width$} | {:>8} | {:>8} | {:>8.2} | {:>8.2}",
            label,
            a.n_incomplete,
            a.n_impossible,
            100.0 * a.failure_ratio,
            100.0 * m.acc_avg
        );
    };
    for r in results {
        line(r.label.clone(), &r.raw_audit, &r.plain);
    }
    for r in results {
        line(format!("{} + LC", r.label), &r.compensated_audit, &r.compensated_plain);
    }
    out
}
