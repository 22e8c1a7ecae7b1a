//! Identify which sentiment-analysis tool produced a set of scores from
//! simple statistics of the score distribution.
//!
//! The pipeline runs in stages, each in its own module:
//!
//! * [`corpus`] loads, splits and synthesizes document collections.
//! * [`scorers`] turns documents into one score in `[-1, 1]` per tool.
//! * [`normalize`] discretizes scores (N1, N3, N5, N10).
//! * [`features`] samples chunks of documents and summarizes each tool's
//!   scores on a chunk as a moment vector.
//! * [`classify`] trains classifiers on those vectors and reports F1.
//! * [`analysis`] holds the descriptive cross-tool statistics: distance
//!   correlation, majority-vote agreement, boxplot summaries.
//! * [`runner`] drives whole experiment grids and writes reports.

pub mod analysis;
pub mod classify;
pub mod corpus;
pub mod error;
pub mod features;
pub mod normalize;
pub mod rng;
pub mod runner;
pub mod scorers;

pub use analysis::{AgreementReport, BoxplotStats, DcorMatrix};
pub use classify::{MetricsReport, Model, Split};
pub use corpus::{Corpus, Document, SynthCorpusSpec};
pub use error::{Error, Result};
pub use features::{Chunk, LabeledDataset, MomentVector};
pub use normalize::Normalization;
pub use runner::{ExperimentConfig, ReportBundle};
pub use scorers::{Lexicon, OutputClass, ScoreMode, ScoreTable, ToolKind, ToolSpec};
