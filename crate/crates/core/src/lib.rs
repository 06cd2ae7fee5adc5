//! bias-refinery-core: build refined training datasets for bias detection
//! in medical curricular text, and evaluate pluggable classifiers over them.
//!
//! The pipeline in one pass: ingest annotated and unannotated excerpts
//! ([`corpus`]), mine keyword-matched negative candidates ([`lexicon`]),
//! judge whether each ambiguous keyword is used in its demographic sense
//! and filter the candidates ([`wsd`]), assemble dataset variants with
//! stratified splits and folds ([`datasets`]), then score classifiers with
//! confusion metrics, F-beta, AUC, and fold-aggregated confidence intervals
//! ([`evalkit`], [`scoring`]).
//!
//! Two interchangeable judgment backends ship with the crate: a native,
//! fully deterministic TF-IDF + logistic-regression model ([`baseline`])
//! and a remote chat model behind a caching, retrying client ([`llm`]).

pub mod baseline;
pub mod corpus;
pub mod datasets;
pub mod evalkit;
pub mod lexicon;
pub mod llm;
pub mod scoring;
pub mod text;
pub mod wsd;

pub use corpus::{BiasLabel, CorpusFormat, CorpusStats, Excerpt, Level2Code, Origin};
pub use datasets::{DatasetManifest, DatasetVariant, FoldPlan, SplitManifest, VariantKind};
pub use evalkit::{AggregateReport, CiMethod, ConfusionCounts, MetricName, Metrics};
pub use lexicon::{CategoryName, KeywordMatch, Lexicon, XnCandidate};
pub use wsd::{DisambiguationQuery, DisambiguationVerdict, Disambiguator, FilterPolicy};

/// Toolkit version embedded in manifests and run records.
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");
