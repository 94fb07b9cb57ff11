//! Toolkit for the Commonsense Norm Bank descriptive-ethics QA data.
//!
//! The crate is organized around a pluggable [`scorer::Scorer`]: datasets are
//! built from source corpora ([`ingest`], [`unify`]), written in the model I/O
//! formats ([`serialize`]), and any scorer can then be evaluated ([`eval`]),
//! probed for identity bias ([`probe`]) or used to re-rank story continuations
//! ([`rerank`]). A deterministic keyword baseline lets everything run without a
//! model.

pub mod compose;
pub mod eval;
pub mod ingest;
pub mod polarity;
pub mod probe;
pub mod rerank;
pub mod scorer;
pub mod seed;
pub mod serialize;
pub mod types;
pub mod unify;

pub use polarity::{normalize_judgment, polarity_of, PolarityMap};
pub use scorer::{Scorer, Verdict};
pub use types::{ClassLabel, Composition, Mode, Polarity, QAInstance, Query, Source, Split};
