//! Independent reference implementations and random instances shared by the
//! integration tests. The oracles work from the name-based declaration, not
//! from the compiled rule tables.

#![allow(dead_code)]

use std::collections::BTreeSet;

use lcp_core::schema::{GroupDecl, RuleDecl, SchemaDecl};
use lcp_core::{AttributeSchema, Status};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn names(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("a{i}")).collect()
}

fn subset(rng: &mut impl Rng, pool: &[usize], min: usize) -> Vec<usize> {
    let mut v = pool.to_vec();
    v.shuffle(rng);
    let n = rng.random_range(min..=pool.len());
    v.truncate(n);
    v
}

/// A valid random declaration over 2 to `max_k` attributes.
pub fn random_decl(rng: &mut impl Rng, max_k: usize) -> SchemaDecl {
    let k = rng.random_range(2..=max_k);
    let attrs = names(k);
    let all: Vec<usize> = (0..k).collect();
    let mut groups = Vec::new();
    for g in 0..rng.random_range(0..=3) {
        let members = subset(rng, &all, 2);
        let exclusive = rng.random_bool(0.7);
        let exhaustive = !exclusive || rng.random_bool(0.6);
        groups.push(GroupDecl {
            name: format!("g{g}"),
            members: members.iter().map(|&i| attrs[i].clone()).collect(),
            exclusive,
            exhaustive,
        });
    }
    let (n_ex, n_dep) = (rng.random_range(0..=2), rng.random_range(0..=3));
    let exclusions = random_rules(rng, &attrs, n_ex);
    let dependencies = random_rules(rng, &attrs, n_dep);
    SchemaDecl { name: "rand".into(), attributes: attrs, groups, exclusions, dependencies }
}

fn random_rules(rng: &mut impl Rng, attrs: &[String], count: usize) -> Vec<RuleDecl> {
    let k = attrs.len();
    (0..count)
        .map(|_| {
            let s = rng.random_range(0..k);
            let others: Vec<usize> = (0..k).filter(|&i| i != s).collect();
            let targets = subset(rng, &others, 1);
            RuleDecl { subject: attrs[s].clone(), targets: targets.iter().map(|&i| attrs[i].clone()).collect() }
        })
        .collect()
}

pub fn random_schema(rng: &mut impl Rng, max_k: usize) -> AttributeSchema {
    random_decl(rng, max_k).compile().expect("generator yields valid declarations")
}

pub fn random_bits(rng: &mut impl Rng, len: usize, p: f64) -> Vec<u8> {
    (0..len).map(|_| u8::from(rng.random_bool(p))).collect()
}

fn pos(decl: &SchemaDecl, name: &str) -> usize {
    decl.attributes.iter().position(|a| a == name).unwrap()
}

#[derive(Debug, PartialEq)]
pub struct OracleVerdict {
    pub status: Status,
    pub exclusions: Vec<(usize, usize)>,
    pub dependencies: Vec<usize>,
    pub empty_groups: Vec<usize>,
}

/// Brute force: test every unordered attribute pair against every
/// exclusion source, every dependency statement, every exhaustive group.
pub fn oracle_verdict(decl: &SchemaDecl, row: &[u8]) -> OracleVerdict {
    let k = decl.attributes.len();
    let forbidden = |a: usize, b: usize| -> bool {
        let (na, nb) = (&decl.attributes[a], &decl.attributes[b]);
        decl.groups.iter().any(|g| g.exclusive && g.members.contains(na) && g.members.contains(nb))
            || decl.exclusions.iter().any(|r| {
                (&r.subject == na && r.targets.contains(nb)) || (&r.subject == nb && r.targets.contains(na))
            })
    };
    let mut exclusions = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            if row[a] == 1 && row[b] == 1 && forbidden(a, b) {
                exclusions.push((a, b));
            }
        }
    }
    let mut deps = BTreeSet::new();
    for r in &decl.dependencies {
        let s = pos(decl, &r.subject);
        if row[s] == 1 && r.targets.iter().all(|t| row[pos(decl, t)] == 0) {
            deps.insert(s);
        }
    }
    let empty_groups: Vec<usize> = decl
        .groups
        .iter()
        .filter(|g| g.exhaustive)
        .enumerate()
        .filter(|(_, g)| g.members.iter().all(|m| row[pos(decl, m)] == 0))
        .map(|(i, _)| i)
        .collect();
    let status = if !exclusions.is_empty() || !deps.is_empty() {
        Status::Impossible
    } else if !empty_groups.is_empty() {
        Status::Incomplete
    } else {
        Status::Consistent
    };
    OracleVerdict { status, exclusions, dependencies: deps.into_iter().collect(), empty_groups }
}

/// Per-subject exclusion lists rebuilt from the declaration.
fn exclusion_lists(decl: &SchemaDecl) -> Vec<(usize, Vec<usize>)> {
    let k = decl.attributes.len();
    let mut out = Vec::new();
    for s in 0..k {
        let name = &decl.attributes[s];
        let mut targets = BTreeSet::new();
        for g in decl.groups.iter().filter(|g| g.exclusive && g.members.contains(name)) {
            for m in &g.members {
                if m != name {
                    targets.insert(pos(decl, m));
                }
            }
        }
        for r in decl.exclusions.iter().filter(|r| &r.subject == name) {
            for t in &r.targets {
                targets.insert(pos(decl, t));
            }
        }
        if !targets.is_empty() {
            out.push((s, targets.into_iter().collect()));
        }
    }
    out
}

fn conditional_mean(rules: &[(usize, Vec<usize>)], rows: &[Vec<u8>], empty: f64) -> f64 {
    let mut freqs = Vec::new();
    for (s, targets) in rules {
        let mut fired = 0u32;
        let mut hit = 0u32;
        for row in rows {
            if row[*s] == 1 {
                fired += 1;
                if targets.iter().any(|&t| row[t] == 1) {
                    hit += 1;
                }
            }
        }
        if fired > 0 {
            freqs.push(f64::from(hit) / f64::from(fired));
        }
    }
    if freqs.is_empty() {
        empty
    } else {
        freqs.iter().sum::<f64>() / freqs.len() as f64
    }
}

/// `(p_ex, p_d)` by direct counting.
pub fn oracle_stats(decl: &SchemaDecl, rows: &[Vec<u8>]) -> (f64, f64) {
    let deps: Vec<(usize, Vec<usize>)> = decl
        .dependencies
        .iter()
        .map(|r| (pos(decl, &r.subject), r.targets.iter().map(|t| pos(decl, t)).collect()))
        .collect();
    (conditional_mean(&exclusion_lists(decl), rows, 0.0), conditional_mean(&deps, rows, 1.0))
}

pub fn oracle_bce(probs: &[Vec<f64>], labels: &[Vec<u8>]) -> f64 {
    let mut total = 0.0;
    let mut count = 0.0;
    for (prow, lrow) in probs.iter().zip(labels) {
        for (&p, &y) in prow.iter().zip(lrow) {
            let p = p.clamp(1e-7, 1.0 - 1e-7);
            total += if y == 1 { -p.ln() } else { -(1.0 - p).ln() };
            count += 1.0;
        }
    }
    total / count
}

/// `(accuracy, positive accuracy, negative accuracy)` per column, from a
/// 2x2 confusion count.
pub fn oracle_accuracy(preds: &[Vec<u8>], labels: &[Vec<u8>], col: usize) -> (f64, Option<f64>, Option<f64>) {
    let (mut tp, mut tn, mut fp, mut fn_) = (0.0, 0.0, 0.0, 0.0);
    for (p, l) in preds.iter().zip(labels) {
        match (p[col], l[col]) {
            (1, 1) => tp += 1.0,
            (0, 0) => tn += 1.0,
            (1, 0) => fp += 1.0,
            _ => fn_ += 1.0,
        }
    }
    let pos = (tp + fn_ > 0.0).then(|| tp / (tp + fn_));
    let neg = (tn + fp > 0.0).then(|| tn / (tn + fp));
    ((tp + tn) / (tp + tn + fp + fn_), pos, neg)
}
