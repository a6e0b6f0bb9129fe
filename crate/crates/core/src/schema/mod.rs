//! Attribute universe and logical constraints.
//!
//! A schema is written as a [`SchemaDecl`] (names only, as it appears in a
//! constraint document) and compiled into an [`AttributeSchema`], which holds
//! index-based rule tables used by the audit, compensation, and loss code.
//!
//! Three relationships are expressible:
//! - mutual exclusion: two attributes may not both be positive in one row;
//! - dependency: when the subject is positive, at least one target must be;
//! - collective exhaustiveness: at least one group member must be positive.
//!
//! A group flagged `exclusive` expands into per-subject exclusion rules, so
//! group-derived and explicitly written exclusions are evaluated the same way.

mod dsl;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::Serialize;

pub use dsl::{parse_schema, serialize_schema};

/// Schema source that selects the built-in FH37K schema on the command line.
pub const BUILTIN_FH37K: &str = "builtin:fh37k";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroupDecl {
    pub name: String,
    pub members: Vec<String>,
    pub exclusive: bool,
    pub exhaustive: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RuleDecl {
    pub subject: String,
    pub targets: Vec<String>,
}

/// Name-based schema declaration, in document order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct SchemaDecl {
    pub name: String,
    pub attributes: Vec<String>,
    pub groups: Vec<GroupDecl>,
    /// Explicit `exclude` statements; group-derived exclusions are not listed here.
    pub exclusions: Vec<RuleDecl>,
    pub dependencies: Vec<RuleDecl>,
}

/// A subject attribute and the attributes a rule relates it to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rule {
    pub subject: usize,
    pub targets: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Group {
    pub name: String,
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Violation {
    EmptyName { index: usize },
    DuplicateAttribute(String),
    DuplicateGroup(String),
    DuplicateMember { context: String, name: String },
    UndeclaredReference { context: String, name: String },
    SelfReference { context: String, name: String },
    EmptyRule { context: String },
    GroupTooSmall { group: String, size: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyName { index } => write!(f, "attribute #{index} has an empty name"),
            Violation::DuplicateAttribute(n) => write!(f, "attribute `{n}` declared twice"),
            Violation::DuplicateGroup(n) => write!(f, "group `{n}` declared twice"),
            Violation::DuplicateMember { context, name } => {
                write!(f, "{context}: `{name}` listed twice")
            }
            Violation::UndeclaredReference { context, name } => {
                write!(f, "{context}: undeclared attribute `{name}`")
            }
            Violation::SelfReference { context, name } => {
                write!(f, "{context}: `{name}` refers to itself")
            }
            Violation::EmptyRule { context } => write!(f, "{context}: no target attributes"),
            Violation::GroupTooSmall { group, size } => {
                write!(f, "group `{group}` has {size} member(s), at least 2 required")
            }
        }
    }
}

/// Violations found by [`validate_schema`]; empty means valid.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return writeln!(f, "ok");
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

impl SchemaDecl {
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let mut seen = HashSet::new();
        for (i, a) in self.attributes.iter().enumerate() {
            if a.is_empty() {
                violations.push(Violation::EmptyName { index: i });
            } else if !seen.insert(a.as_str()) {
                violations.push(Violation::DuplicateAttribute(a.clone()));
            }
        }

        let check_ref = |context: &str, name: &str, out: &mut Vec<Violation>| {
            if !seen.contains(name) {
                out.push(Violation::UndeclaredReference {
                    context: context.to_string(),
                    name: name.to_string(),
                });
            }
        };

        let mut group_names = HashSet::new();
        for g in &self.groups {
            let context = format!("group `{}`", g.name);
            if !group_names.insert(g.name.as_str()) {
                violations.push(Violation::DuplicateGroup(g.name.clone()));
            }
            let mut members = HashSet::new();
            for m in &g.members {
                check_ref(&context, m, &mut violations);
                if !members.insert(m.as_str()) {
                    violations.push(Violation::DuplicateMember {
                        context: context.clone(),
                        name: m.clone(),
                    });
                }
            }
            if g.members.len() < 2 {
                violations.push(Violation::GroupTooSmall {
                    group: g.name.clone(),
                    size: g.members.len(),
                });
            }
        }

        let rules = self
            .exclusions
            .iter()
            .map(|r| ("exclude", r))
            .chain(self.dependencies.iter().map(|r| ("require", r)));
        for (kind, rule) in rules {
            let context = format!("{kind} `{}`", rule.subject);
            check_ref(&context, &rule.subject, &mut violations);
            if rule.targets.is_empty() {
                violations.push(Violation::EmptyRule { context: context.clone() });
            }
            let mut targets = HashSet::new();
            for t in &rule.targets {
                check_ref(&context, t, &mut violations);
                if t == &rule.subject {
                    violations.push(Violation::SelfReference {
                        context: context.clone(),
                        name: t.clone(),
                    });
                }
                if !targets.insert(t.as_str()) {
                    violations.push(Violation::DuplicateMember {
                        context: context.clone(),
                        name: t.clone(),
                    });
                }
            }
        }
        ValidationReport { violations }
    }

    /// Validates and builds the index-based rule tables.
    pub fn compile(self) -> Result<AttributeSchema, ValidationReport> {
        let report = self.validate();
        if !report.is_empty() {
            return Err(report);
        }
        Ok(AttributeSchema::build(self))
    }
}

/// A validated schema. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeSchema {
    decl: SchemaDecl,
    index: HashMap<String, usize>,
    exclusion_rules: Vec<Rule>,
    dependency_rules: Vec<Rule>,
    exhaustive_groups: Vec<Group>,
    exclusion_pairs: Vec<(usize, usize)>,
    exclusive: Vec<bool>,
}

impl AttributeSchema {
    fn build(decl: SchemaDecl) -> Self {
        let k = decl.attributes.len();
        let index: HashMap<String, usize> =
            decl.attributes.iter().enumerate().map(|(i, a)| (a.clone(), i)).collect();
        let idx = |name: &str| index[name];

        let mut excl: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); k];
        for g in decl.groups.iter().filter(|g| g.exclusive) {
            let members: Vec<usize> = g.members.iter().map(|m| idx(m)).collect();
            for &a in &members {
                excl[a].extend(members.iter().copied().filter(|&b| b != a));
            }
        }
        for r in &decl.exclusions {
            excl[idx(&r.subject)].extend(r.targets.iter().map(|t| idx(t)));
        }
        let exclusion_rules: Vec<Rule> = excl
            .iter()
            .enumerate()
            .filter(|(_, t)| !t.is_empty())
            .map(|(subject, t)| Rule { subject, targets: t.iter().copied().collect() })
            .collect();

        let mut pairs = BTreeSet::new();
        let mut exclusive = vec![false; k * k];
        for r in &exclusion_rules {
            for &t in &r.targets {
                pairs.insert((r.subject.min(t), r.subject.max(t)));
                exclusive[r.subject * k + t] = true;
                exclusive[t * k + r.subject] = true;
            }
        }

        let dependency_rules = decl
            .dependencies
            .iter()
            .map(|r| Rule { subject: idx(&r.subject), targets: r.targets.iter().map(|t| idx(t)).collect() })
            .collect();

        let exhaustive_groups = decl
            .groups
            .iter()
            .filter(|g| g.exhaustive)
            .map(|g| Group { name: g.name.clone(), members: g.members.iter().map(|m| idx(m)).collect() })
            .collect();

        AttributeSchema {
            index,
            exclusion_rules,
            dependency_rules,
            exhaustive_groups,
            exclusion_pairs: pairs.into_iter().collect(),
            exclusive,
            decl,
        }
    }

    pub fn name(&self) -> &str {
        &self.decl.name
    }

    pub fn attributes(&self) -> &[String] {
        &self.decl.attributes
    }

    pub fn n_attributes(&self) -> usize {
        self.decl.attributes.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn attribute(&self, index: usize) -> &str {
        &self.decl.attributes[index]
    }

    pub fn decl(&self) -> &SchemaDecl {
        &self.decl
    }

    /// Per-subject exclusion lists, merged from groups and explicit rules,
    /// ordered by subject index.
    pub fn exclusion_rules(&self) -> &[Rule] {
        &self.exclusion_rules
    }

    pub fn dependency_rules(&self) -> &[Rule] {
        &self.dependency_rules
    }

    pub fn exhaustive_groups(&self) -> &[Group] {
        &self.exhaustive_groups
    }

    /// Unordered exclusion pairs `(a, b)` with `a < b`, sorted.
    pub fn exclusion_pairs(&self) -> &[(usize, usize)] {
        &self.exclusion_pairs
    }

    /// True if either attribute lists the other as exclusive.
    pub fn are_exclusive(&self, a: usize, b: usize) -> bool {
        self.exclusive[a * self.n_attributes() + b]
    }

    pub fn to_dsl(&self) -> String {
        serialize_schema(self)
    }
}

/// Reports every invariant violation of a declaration.
pub fn validate_schema(schema: &SchemaDecl) -> ValidationReport {
    schema.validate()
}

/// Resolves `builtin:fh37k` or parses the given DSL text.
pub fn load_schema_source(source: &str, read: impl FnOnce(&str) -> std::io::Result<String>) -> crate::Result<AttributeSchema> {
    if source == BUILTIN_FH37K {
        return Ok(fh37k_default());
    }
    let text = read(source)?;
    Ok(parse_schema(&text)?)
}

/// The built-in 22-attribute FH37K facial hair schema.
///
/// The five groups are each exclusive and exhaustive; `clean_shaven` belongs
/// to both the beard-area and beard-length groups. The dependency rules are a
/// reconstruction from the attribute definitions (a connected mustache or
/// sideburn presupposes a beard, and a non-clean-shaven beard length
/// presupposes a beard area), not a published rule list.
pub fn fh37k_default() -> AttributeSchema {
    fn names(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }
    fn group(name: &str, members: &[&str]) -> GroupDecl {
        GroupDecl { name: name.into(), members: names(members), exclusive: true, exhaustive: true }
    }
    fn require(subject: &str, targets: &[&str]) -> RuleDecl {
        RuleDecl { subject: subject.into(), targets: names(targets) }
    }

    let beard_area = ["clean_shaven", "chin_area", "side_to_side", "beard_area_nv"];
    let beard_length = [
        "clean_shaven",
        "five_oclock_shadow",
        "short",
        "medium",
        "long",
        "beard_length_nv",
    ];
    let mustache = ["mustache_none", "mustache_isolated", "mustache_connected", "mustache_nv"];
    let sideburns = ["sideburns_none", "sideburns_present", "sideburns_connected", "sideburns_nv"];
    let bald = ["bald_false", "bald_top_only", "bald_sides_only", "bald_top_and_sides", "bald_nv"];

    let mut attributes: Vec<String> = Vec::new();
    for a in beard_area.iter().chain(&beard_length).chain(&mustache).chain(&sideburns).chain(&bald) {
        if !attributes.iter().any(|x| x == a) {
            attributes.push(a.to_string());
        }
    }

    let beard = ["chin_area", "side_to_side"];
    let decl = SchemaDecl {
        name: "fh37k".into(),
        attributes,
        groups: vec![
            group("beard_area", &beard_area),
            group("beard_length", &beard_length),
            group("mustache", &mustache),
            group("sideburns", &sideburns),
            group("bald", &bald),
        ],
        exclusions: Vec::new(),
        dependencies: vec![
            require("mustache_connected", &beard),
            require("sideburns_connected", &["side_to_side"]),
            require("five_oclock_shadow", &beard),
            require("short", &beard),
            require("medium", &beard),
            require("long", &beard),
        ],
    };
    decl.compile().expect("built-in schema is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(list: &[&str]) -> Vec<String> {
        list.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn fh37k_shape() {
        let schema = fh37k_default();
        assert_eq!(schema.n_attributes(), 22);
        let bald = schema.exhaustive_groups().iter().find(|g| g.name == "bald").unwrap();
        assert_eq!(schema.n_attributes() - bald.members.len(), 17);
        assert_eq!(schema.exhaustive_groups().len(), 5);
        let cs = schema.index_of("clean_shaven").unwrap();
        let groups_with_cs =
            schema.exhaustive_groups().iter().filter(|g| g.members.contains(&cs)).count();
        assert_eq!(groups_with_cs, 2);
        assert!(validate_schema(schema.decl()).is_empty());
    }

    #[test]
    fn exclusive_groups_derive_symmetric_rules() {
        let schema = fh37k_default();
        for rule in schema.exclusion_rules() {
            for &t in &rule.targets {
                let back = schema.exclusion_rules().iter().find(|r| r.subject == t).unwrap();
                assert!(back.targets.contains(&rule.subject));
            }
        }
        let cs = schema.index_of("clean_shaven").unwrap();
        let cs_rule = schema.exclusion_rules().iter().find(|r| r.subject == cs).unwrap();
        // 3 beard-area partners + 5 beard-length partners
        assert_eq!(cs_rule.targets.len(), 8);
    }

    #[test]
    fn self_exclusion_is_one_violation() {
        let decl = SchemaDecl {
            name: "t".into(),
            attributes: s(&["x", "y"]),
            exclusions: vec![RuleDecl { subject: "x".into(), targets: s(&["x"]) }],
            ..Default::default()
        };
        let report = validate_schema(&decl);
        assert_eq!(report.violations.len(), 1);
        assert!(matches!(report.violations[0], Violation::SelfReference { .. }));
    }

    #[test]
    fn singleton_group_is_one_violation() {
        let decl = SchemaDecl {
            name: "t".into(),
            attributes: s(&["x", "y"]),
            groups: vec![GroupDecl {
                name: "g".into(),
                members: s(&["x"]),
                exclusive: false,
                exhaustive: true,
            }],
            ..Default::default()
        };
        let report = validate_schema(&decl);
        assert_eq!(report.violations, vec![Violation::GroupTooSmall { group: "g".into(), size: 1 }]);
    }

    #[test]
    fn undeclared_and_duplicate_are_reported() {
        let decl = SchemaDecl {
            name: "t".into(),
            attributes: s(&["x", "y", "x", ""]),
            dependencies: vec![RuleDecl { subject: "y".into(), targets: s(&["z"]) }],
            ..Default::default()
        };
        let report = decl.clone().compile().unwrap_err();
        assert_eq!(report.violations.len(), 3);
        assert!(report.violations.contains(&Violation::DuplicateAttribute("x".into())));
        assert!(report.violations.contains(&Violation::EmptyName { index: 3 }));
    }

    #[test]
    fn explicit_exclusions_merge_with_groups() {
        let decl = SchemaDecl {
            name: "t".into(),
            attributes: s(&["a", "b", "c"]),
            groups: vec![GroupDecl {
                name: "g".into(),
                members: s(&["a", "b"]),
                exclusive: true,
                exhaustive: false,
            }],
            exclusions: vec![
                RuleDecl { subject: "a".into(), targets: s(&["c", "b"]) },
            ],
            ..Default::default()
        };
        let schema = decl.compile().unwrap();
        assert_eq!(schema.exclusion_rules()[0], Rule { subject: 0, targets: vec![1, 2] });
        assert_eq!(schema.exclusion_pairs(), &[(0, 1), (0, 2)]);
        assert!(schema.are_exclusive(2, 0));
        assert!(!schema.are_exclusive(1, 2));
        assert!(schema.exhaustive_groups().is_empty());
    }
}
