//! Desk-scale training: synthetic consistent data, a small classifier with
//! hand-written backpropagation, and BCE / BCE + LCP training loops.

pub mod checkpoint;
pub mod config;
pub mod experiment;
pub mod model;
pub mod synth;
pub mod train;

pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use config::RunConfig;
pub use model::ClassifierModel;
pub use synth::{generate_synthetic, Split, SyntheticData, SyntheticDatasetSpec};
pub use train::{evaluate, objective, train, EpochLog, LcpGradient, LossMode, TrainConfig, TrainOutcome};
