//! A coverage-guided fuzzer that pairs an AFL-style evolutionary loop with a
//! neural surrogate of edge coverage and a saliency-map attack against rare
//! edges.
//!
//! The fuzzing side executes in-process targets under edge instrumentation,
//! keeps a global coverage map, and mutates queue entries through the usual
//! deterministic and havoc stages. In adversarial mode a second component
//! trains a small dense network to predict which edges an input activates,
//! then walks the highest-saliency input bytes to craft candidates for the
//! least frequently hit edges. Candidates flow back into the fuzzing queue
//! over a newline-delimited socket protocol.

pub mod adversary;
pub mod cli;
pub mod codec;
pub mod config;
pub mod corpus;
pub mod harness;
pub mod mutators;
pub mod orchestrator;
pub mod surrogate;

pub use config::{CampaignConfig, Mode};
pub use harness::{CoverageMap, ExecutionResult, Executor, FuzzTarget, Outcome, MAP_SIZE};

use std::path::PathBuf;

/// Errors surfaced by the fuzzing, codec, surrogate and transport layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unknown target {0:?}")]
    UnknownTarget(String),

    #[error("duplicate input rejected by the corpus")]
    DuplicateInput,

    #[error("input of {len} bytes exceeds the model input width {width}; the surrogate must be rebuilt")]
    InputTooWide { len: usize, width: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("label {label} out of range for {n_labels} labels")]
    LabelOutOfRange { label: usize, n_labels: usize },

    #[error("training diverged: {0}")]
    TrainingDiverged(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("channel closed")]
    ChannelClosed,

    #[error("malformed wire message: {0}")]
    MalformedMessage(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("checkpoint corrupt: {0}")]
    CorruptCheckpoint(String),

    #[error("missing input: {0}")]
    MissingInput(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
