//! Logical-consistency engine for multi-label attribute prediction.
//!
//! - [`schema`]: attribute groups, exclusion and dependency rules, and the
//!   constraint language they are written in.
//! - [`audit`]: thresholding and consistent / incomplete / impossible verdicts.
//! - [`compensate`]: argmax fill of empty exhaustive groups.
//! - [`loss`]: BCE, hard consistency statistics, the LCP penalty and its
//!   differentiable surrogate.
//! - [`trainer`]: synthetic data, a small classifier with hand-written
//!   backpropagation, and training loops.
//! - [`metrics`]: per-attribute accuracies, plain and consistency-enforced.
//! - [`recognition`]: genuine/impostor score analysis by beard-area pair.

pub mod audit;
pub mod compensate;
pub mod error;
pub mod loss;
pub mod matrix;
pub mod metrics;
pub mod recognition;
pub mod schema;
pub mod trainer;

pub use audit::{audit_binary, audit_dataset, binarize, check_vector, AuditReport, ConsistencyVerdict, Status};
pub use compensate::{compensate_binary, compensate_dataset, compensate_vector};
pub use error::{Error, ParseError, ParseErrorKind, Result};
pub use loss::{
    bce_loss, hard_consistency_stats, lcp_loss, soft_lcp_surrogate, total_loss, ConsistencyStats, LossConfig,
};
pub use matrix::{BinaryMatrix, Matrix, ScoreMatrix};
pub use metrics::{attribute_accuracy, consistency_enforced_accuracy, MetricsReport};
pub use schema::{fh37k_default, parse_schema, serialize_schema, validate_schema, AttributeSchema};
