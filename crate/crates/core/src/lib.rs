//! Online feature screening over labeled data streams.
//!
//! Five filter criteria are maintained incrementally in a single pass:
//! T-score and Fisher score from running moments, and Gini index, chi-square
//! and mutual information from epsilon-approximate quantile bin counts. The
//! engine handles dense and sparse (index:value) samples, fading-factor
//! adaptation for drifting streams, and minibatch ingestion that leaves the
//! final scores bit-identical to one-at-a-time processing.
//!
//! With the default `parallel` feature, per-feature work fans out across a
//! rayon pool; disabling it yields a dependency-free sequential build with
//! identical results.

pub mod bincount;
pub mod discretize;
pub mod engine;
pub mod error;
pub mod meanvar;
pub mod oracle;
mod par;
pub mod sketch;
pub mod synth;

pub use bincount::{Method, MethodFamily, ScoreVector};
pub use discretize::{BinCounts, BinTable};
pub use engine::{rank, select_top_k, Engine, Entries, Ranking, Sample, ScreenerConfig};
pub use error::{Error, Result};
pub use meanvar::{ClassMoments, ClassStats, StatsMode};
pub use oracle::DenseDataset;
pub use sketch::{FadingState, StreamSketch, SubSummary, SummaryTuple};
pub use synth::{BenchGrid, DetectionReport, DetectionRow, DriftStreamSpec};
