//! Label compensation: every exhaustive group left without a positive member
//! gets its highest-scoring member switched on.
//!
//! Groups are visited in declaration order and emptiness is re-checked per
//! group, so an attribute shared by two groups (FH37K's `clean_shaven`) that
//! is filled for the first group also completes the second. The argmax uses
//! raw scores; ties go to the lowest attribute index.

use rayon::prelude::*;

use crate::audit::binarize;
use crate::error::{Error, Result};
use crate::matrix::{BinaryMatrix, ScoreMatrix};
use crate::schema::AttributeSchema;

/// Fills empty groups in place. Returns the number of bits switched on.
pub fn compensate_in_place(schema: &AttributeSchema, scores: &[f64], row: &mut [u8]) -> usize {
    let mut added = 0;
    for group in schema.exhaustive_groups() {
        if group.members.iter().any(|&m| row[m] != 0) {
            continue;
        }
        let mut best = group.members[0];
        for &m in &group.members[1..] {
            if scores[m] > scores[best] || (scores[m] == scores[best] && m < best) {
                best = m;
            }
        }
        row[best] = 1;
        added += 1;
    }
    added
}

pub fn compensate_vector(schema: &AttributeSchema, scores: &[f64], row: &[u8]) -> Result<Vec<u8>> {
    let k = schema.n_attributes();
    if scores.len() != k || row.len() != k {
        return Err(Error::Dimension(format!(
            "scores ({}) and row ({}) must both have {k} entries",
            scores.len(),
            row.len()
        )));
    }
    let mut out = row.to_vec();
    compensate_in_place(schema, scores, &mut out);
    Ok(out)
}

/// Compensates existing binary predictions using the matching raw scores.
pub fn compensate_binary(schema: &AttributeSchema, scores: &ScoreMatrix, preds: &BinaryMatrix) -> Result<BinaryMatrix> {
    let k = schema.n_attributes();
    if scores.n_cols() != k || preds.n_cols() != k || scores.n_rows() != preds.n_rows() {
        return Err(Error::Dimension(format!(
            "scores {}x{} and predictions {}x{} must match schema width {k}",
            scores.n_rows(),
            scores.n_cols(),
            preds.n_rows(),
            preds.n_cols()
        )));
    }
    let mut out = preds.clone();
    if k == 0 {
        return Ok(out);
    }
    out.values_mut()
        .par_chunks_mut(k)
        .zip(scores.values().par_chunks(k))
        .for_each(|(row, s)| {
            compensate_in_place(schema, s, row);
        });
    Ok(out)
}

/// Binarizes at `threshold`, then compensates every row.
pub fn compensate_dataset(schema: &AttributeSchema, scores: &ScoreMatrix, threshold: f64) -> Result<BinaryMatrix> {
    if scores.n_cols() != schema.n_attributes() {
        return Err(Error::Dimension(format!(
            "matrix has {} columns, schema has {} attributes",
            scores.n_cols(),
            schema.n_attributes()
        )));
    }
    let preds = binarize(scores, threshold)?;
    compensate_binary(schema, scores, &preds)
}
