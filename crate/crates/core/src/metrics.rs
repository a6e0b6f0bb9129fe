//! Per-attribute accuracies and their attribute-averaged aggregates.
//!
//! In consistency-enforced mode a row whose prediction is not consistent
//! under the schema counts as wrong on every attribute. This whole-row
//! reading is one interpretation; invalidating only the offending groups
//! would be the other.

use std::fmt::Write as _;

use serde::Serialize;

use crate::audit::is_consistent;
use crate::error::{Error, Result};
use crate::matrix::BinaryMatrix;
use crate::schema::AttributeSchema;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    Plain,
    ConsistencyEnforced,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttributeAccuracy {
    pub name: String,
    pub accuracy: f64,
    /// Accuracy on rows labelled 1; absent when there are none.
    pub positive: Option<f64>,
    /// Accuracy on rows labelled 0; absent when there are none.
    pub negative: Option<f64>,
    pub n_positive: u64,
    pub n_negative: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub mode: EvalMode,
    pub n_rows: u64,
    pub per_attribute: Vec<AttributeAccuracy>,
    pub acc_avg: f64,
    pub acc_avg_p: Option<f64>,
    pub acc_avg_n: Option<f64>,
}

fn mean_present(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = values.flatten().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn check_shapes(preds: &BinaryMatrix, labels: &BinaryMatrix) -> Result<()> {
    if preds.n_rows() != labels.n_rows() || preds.n_cols() != labels.n_cols() {
        return Err(Error::Dimension(format!(
            "predictions {}x{} vs labels {}x{}",
            preds.n_rows(),
            preds.n_cols(),
            labels.n_rows(),
            labels.n_cols()
        )));
    }
    if preds.n_rows() == 0 {
        return Err(Error::Input("cannot score an empty prediction set".into()));
    }
    Ok(())
}

fn score(preds: &BinaryMatrix, labels: &BinaryMatrix, valid_row: &[bool], mode: EvalMode) -> MetricsReport {
    let k = preds.n_cols();
    let mut correct = vec![0u64; k];
    let mut pos = vec![(0u64, 0u64); k];
    let mut neg = vec![(0u64, 0u64); k];
    for ((p, y), &valid) in preds.rows().zip(labels.rows()).zip(valid_row) {
        for c in 0..k {
            let hit = valid && (p[c] != 0) == (y[c] != 0);
            let slot = if y[c] != 0 { &mut pos[c] } else { &mut neg[c] };
            slot.0 += 1;
            if hit {
                correct[c] += 1;
                slot.1 += 1;
            }
        }
    }
    let n = preds.n_rows() as u64;
    let ratio = |(total, hits): (u64, u64)| (total > 0).then(|| hits as f64 / total as f64);
    let per_attribute: Vec<AttributeAccuracy> = (0..k)
        .map(|c| AttributeAccuracy {
            name: preds.columns()[c].clone(),
            accuracy: correct[c] as f64 / n as f64,
            positive: ratio(pos[c]),
            negative: ratio(neg[c]),
            n_positive: pos[c].0,
            n_negative: neg[c].0,
        })
        .collect();
    MetricsReport {
        mode,
        n_rows: n,
        acc_avg: mean_present(per_attribute.iter().map(|a| Some(a.accuracy))).unwrap_or(0.0),
        acc_avg_p: mean_present(per_attribute.iter().map(|a| a.positive)),
        acc_avg_n: mean_present(per_attribute.iter().map(|a| a.negative)),
        per_attribute,
    }
}

pub fn attribute_accuracy(preds: &BinaryMatrix, labels: &BinaryMatrix) -> Result<MetricsReport> {
    check_shapes(preds, labels)?;
    Ok(score(preds, labels, &vec![true; preds.n_rows()], EvalMode::Plain))
}

pub fn consistency_enforced_accuracy(
    schema: &AttributeSchema,
    preds: &BinaryMatrix,
    labels: &BinaryMatrix,
) -> Result<MetricsReport> {
    check_shapes(preds, labels)?;
    if preds.n_cols() != schema.n_attributes() {
        return Err(Error::Dimension(format!(
            "predictions have {} columns, schema has {}",
            preds.n_cols(),
            schema.n_attributes()
        )));
    }
    let valid: Vec<bool> = preds.rows().map(|row| is_consistent(schema, row)).collect();
    Ok(score(preds, labels, &valid, EvalMode::ConsistencyEnforced))
}

/// Aligned text table with one line per labelled report, in percent.
pub fn render_table(rows: &[(String, MetricsReport)]) -> String {
    let pct = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{:.2}", 100.0 * x));
    let width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max("model".len());
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$} | {:>8} | {:>8} | {:>8}", "model", "ACC_avg", "ACC_n", "ACC_p");
    let _ = writeln!(out, "{}", "-".repeat(width + 33));
    for (label, r) in rows {
        let _ = writeln!(
            out,
            "{:<width$} | {:>8} | {:>8} | {:>8}",
            label,
            pct(Some(r.acc_avg)),
            pct(r.acc_avg_n),
            pct(r.acc_avg_p)
        );
    }
    out
}
