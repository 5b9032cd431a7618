//! Word-length predictions under three communicative-cost objectives.
//!
//! * **Zipf**: minimise expected word length; optimal lengths follow
//!   `-log p(w)` and are realised exactly by K-ary Huffman coding.
//! * **CCH**: keep each word's information rate (surprisal per character)
//!   close to a channel capacity `C`; under a quadratic distance the optimal
//!   length is `E[s^2] / (C E[s])`, i.e. mean surprisal plus its
//!   variance-to-mean ratio.
//! * **CCH-lower**: the same distance evaluated at a word's *mean* surprisal,
//!   which lower-bounds the CCH cost and is minimised by `E[s] / C`.
//!
//! The crate covers the full path from raw text to evaluation: corpus
//! filtering and counting ([`corpus`]), contextual surprisal from an
//! interpolated n-gram model or external files ([`surprisal`]), the three
//! length estimators ([`hypotheses`]), optimal codes ([`coder`]), cost
//! evaluation and length optimisation ([`costs`]), correlation and weighted
//! regression metrics ([`eval`]) and the end-to-end driver ([`pipeline`]).
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar for the common cases.

pub mod coder;
pub mod corpus;
pub mod costs;
pub mod error;
pub mod eval;
pub mod hypotheses;
pub mod pipeline;
pub mod scalar;
pub mod surprisal;
mod tsv;

pub use coder::{build_huffman_k, CodeBook};
pub use corpus::{count_frequencies, ingest_and_filter, CorpusConfig, FilterProtocol, FrequencyTable, WordRecord};
pub use costs::{CostSpec, LengthAssignment, Objective};
pub use error::{Error, Result};
pub use eval::{EvalReport, Metrics};
pub use hypotheses::{Hypothesis, PredictionSet};
pub use scalar::Real;
pub use surprisal::{NgramModel, SurprisalSample, SurprisalSource, SurprisalTable};

pub type SurprisalSampleF64 = SurprisalSample<f64>;
pub type SurprisalTableF64 = SurprisalTable<f64>;
pub type PredictionSetF64 = PredictionSet<f64>;
pub type CostSpecF64 = CostSpec<f64>;
pub type LengthAssignmentF64 = LengthAssignment<f64>;

pub type SurprisalSampleF32 = SurprisalSample<f32>;
pub type SurprisalTableF32 = SurprisalTable<f32>;
pub type PredictionSetF32 = PredictionSet<f32>;
pub type CostSpecF32 = CostSpec<f32>;
pub type LengthAssignmentF32 = LengthAssignment<f32>;
