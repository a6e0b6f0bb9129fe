//! Thresholding and per-row consistency verdicts.
//!
//! A row is *impossible* when it violates an exclusion or dependency rule,
//! *incomplete* when it violates neither but leaves some exhaustive group with
//! no positive member, and *consistent* otherwise. Impossible takes precedence,
//! so the two failure counts are disjoint.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{BinaryMatrix, ScoreMatrix};
use crate::schema::AttributeSchema;

/// Default decision threshold for scores.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Consistent,
    Incomplete,
    Impossible,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsistencyVerdict {
    pub status: Status,
    /// Co-occurring exclusive pairs `(a, b)`, `a < b`, once per unordered pair.
    pub violated_exclusions: Vec<(usize, usize)>,
    /// Subjects that are positive while every target of one of their
    /// dependency rules is zero. Sorted, without repeats.
    pub violated_dependencies: Vec<usize>,
    /// Indices into [`AttributeSchema::exhaustive_groups`].
    pub empty_groups: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub threshold: Option<f64>,
    pub n_total: u64,
    pub n_consistent: u64,
    pub n_incomplete: u64,
    pub n_impossible: u64,
    pub failure_ratio: f64,
    pub per_rule_counts: BTreeMap<String, u64>,
}

/// `(n_incomplete + n_impossible) / n_total`, zero for an empty dataset.
pub fn failure_ratio(n_incomplete: u64, n_impossible: u64, n_total: u64) -> f64 {
    if n_total == 0 {
        0.0
    } else {
        (n_incomplete + n_impossible) as f64 / n_total as f64
    }
}

/// Entry is 1 iff the score is strictly greater than `threshold`.
pub fn binarize(scores: &ScoreMatrix, threshold: f64) -> Result<BinaryMatrix> {
    if !threshold.is_finite() {
        return Err(Error::Input(format!("threshold {threshold} is not finite")));
    }
    scores.check_finite()?;
    Ok(scores.map(|v| u8::from(v > threshold)))
}

fn ensure_width(schema: &AttributeSchema, width: usize) -> Result<()> {
    if width != schema.n_attributes() {
        return Err(Error::Dimension(format!(
            "row has {width} entries, schema `{}` has {} attributes",
            schema.name(),
            schema.n_attributes()
        )));
    }
    Ok(())
}

/// Verdict plus the indices of violated dependency rules.
fn inspect(schema: &AttributeSchema, row: &[u8]) -> (ConsistencyVerdict, Vec<usize>) {
    let on = |i: usize| row[i] != 0;

    let violated_exclusions: Vec<(usize, usize)> =
        schema.exclusion_pairs().iter().copied().filter(|&(a, b)| on(a) && on(b)).collect();

    let failed_rules: Vec<usize> = schema
        .dependency_rules()
        .iter()
        .enumerate()
        .filter(|(_, r)| on(r.subject) && !r.targets.iter().any(|&t| on(t)))
        .map(|(i, _)| i)
        .collect();
    let mut violated_dependencies: Vec<usize> =
        failed_rules.iter().map(|&i| schema.dependency_rules()[i].subject).collect();
    violated_dependencies.sort_unstable();
    violated_dependencies.dedup();

    let empty_groups: Vec<usize> = schema
        .exhaustive_groups()
        .iter()
        .enumerate()
        .filter(|(_, g)| !g.members.iter().any(|&m| on(m)))
        .map(|(i, _)| i)
        .collect();

    let status = if !violated_exclusions.is_empty() || !violated_dependencies.is_empty() {
        Status::Impossible
    } else if !empty_groups.is_empty() {
        Status::Incomplete
    } else {
        Status::Consistent
    };
    (ConsistencyVerdict { status, violated_exclusions, violated_dependencies, empty_groups }, failed_rules)
}

pub fn check_vector(schema: &AttributeSchema, row: &[u8]) -> Result<ConsistencyVerdict> {
    ensure_width(schema, row.len())?;
    Ok(inspect(schema, row).0)
}

/// Shorthand for `check_vector(..).status == Consistent` on a row of known width.
pub(crate) fn is_consistent(schema: &AttributeSchema, row: &[u8]) -> bool {
    inspect(schema, row).0.status == Status::Consistent
}

/// Stable labels for every rule, in the order counts are tallied.
struct RuleLabels {
    exclusions: Vec<String>,
    dependencies: Vec<String>,
    groups: Vec<String>,
}

impl RuleLabels {
    fn new(schema: &AttributeSchema) -> Self {
        let name = |i: usize| schema.attribute(i);
        RuleLabels {
            exclusions: schema
                .exclusion_pairs()
                .iter()
                .map(|&(a, b)| format!("exclude:{}|{}", name(a), name(b)))
                .collect(),
            dependencies: schema
                .dependency_rules()
                .iter()
                .map(|r| {
                    let targets: Vec<&str> = r.targets.iter().map(|&t| name(t)).collect();
                    format!("require:{}:{}", name(r.subject), targets.join("|"))
                })
                .collect(),
            groups: schema.exhaustive_groups().iter().map(|g| format!("exhaustive:{}", g.name)).collect(),
        }
    }
}

#[derive(Debug, Clone, Default)]
struct Tally {
    n_total: u64,
    n_consistent: u64,
    n_incomplete: u64,
    n_impossible: u64,
    exclusions: Vec<u64>,
    dependencies: Vec<u64>,
    groups: Vec<u64>,
}

impl Tally {
    fn empty(schema: &AttributeSchema) -> Self {
        Tally {
            exclusions: vec![0; schema.exclusion_pairs().len()],
            dependencies: vec![0; schema.dependency_rules().len()],
            groups: vec![0; schema.exhaustive_groups().len()],
            ..Default::default()
        }
    }

    fn add_row(&mut self, schema: &AttributeSchema, row: &[u8]) {
        let (verdict, failed_rules) = inspect(schema, row);
        self.n_total += 1;
        match verdict.status {
            Status::Consistent => self.n_consistent += 1,
            Status::Incomplete => self.n_incomplete += 1,
            Status::Impossible => self.n_impossible += 1,
        }
        for pair in &verdict.violated_exclusions {
            let i = schema.exclusion_pairs().binary_search(pair).expect("pair from schema");
            self.exclusions[i] += 1;
        }
        for i in failed_rules {
            self.dependencies[i] += 1;
        }
        for g in verdict.empty_groups {
            self.groups[g] += 1;
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.n_total += other.n_total;
        self.n_consistent += other.n_consistent;
        self.n_incomplete += other.n_incomplete;
        self.n_impossible += other.n_impossible;
        for (a, b) in self.exclusions.iter_mut().zip(other.exclusions) {
            *a += b;
        }
        for (a, b) in self.dependencies.iter_mut().zip(other.dependencies) {
            *a += b;
        }
        for (a, b) in self.groups.iter_mut().zip(other.groups) {
            *a += b;
        }
        self
    }

    fn into_report(self, schema: &AttributeSchema, threshold: Option<f64>) -> AuditReport {
        let labels = RuleLabels::new(schema);
        let per_rule_counts = labels
            .exclusions
            .into_iter()
            .zip(self.exclusions)
            .chain(labels.dependencies.into_iter().zip(self.dependencies))
            .chain(labels.groups.into_iter().zip(self.groups))
            .collect();
        AuditReport {
            threshold,
            n_total: self.n_total,
            n_consistent: self.n_consistent,
            n_incomplete: self.n_incomplete,
            n_impossible: self.n_impossible,
            failure_ratio: failure_ratio(self.n_incomplete, self.n_impossible, self.n_total),
            per_rule_counts,
        }
    }
}

/// Audits already-binary predictions. Rows are checked in parallel; all
/// counts are integer sums, so the report does not depend on row order.
pub fn audit_binary(schema: &AttributeSchema, preds: &BinaryMatrix) -> Result<AuditReport> {
    ensure_width(schema, preds.n_cols())?;
    let k = preds.n_cols().max(1);
    let tally = preds
        .values()
        .par_chunks(k)
        .fold(|| Tally::empty(schema), |mut t, row| {
            t.add_row(schema, row);
            t
        })
        .reduce(|| Tally::empty(schema), Tally::merge);
    Ok(tally.into_report(schema, None))
}

pub fn audit_dataset(schema: &AttributeSchema, scores: &ScoreMatrix, threshold: f64) -> Result<AuditReport> {
    ensure_width(schema, scores.n_cols())?;
    let preds = binarize(scores, threshold)?;
    let mut report = audit_binary(schema, &preds)?;
    report.threshold = Some(threshold);
    Ok(report)
}
