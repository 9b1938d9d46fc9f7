//! Statistical machinery for testing Zipf's law on word-frequency data.
//!
//! The crate fits three discrete Zipf-like distributions to the multiset of
//! word-type frequencies of a text by maximum likelihood, validates each fit
//! with a Monte-Carlo Kolmogorov-Smirnov test, compares the two power-law
//! variants with a likelihood-ratio test, and scales the whole procedure
//! over a corpus of plain-text documents with deterministic seeding and
//! aggregate reporting.
//!
//! Module map:
//!
//! * [`distributions`] — pmf / log-pmf / survival of the three families.
//! * [`special`] — Hurwitz zeta, log-gamma, erfc.
//! * [`sampling`] — exact and rejection samplers with reproducible streams.
//! * [`estimation`] — maximum-likelihood exponent fits (Brent).
//! * [`gof`] — discrete KS statistic and Monte-Carlo p-values.
//! * [`model_selection`] — likelihood-ratio comparison of the two
//!   power-law variants.
//! * [`corpus`] — ingestion: boilerplate stripping, tokenization, counting.
//! * [`pipeline`] — per-text analysis bundle, corpus runs, aggregation.

pub mod corpus;
pub mod distributions;
pub mod estimation;
pub mod gof;
pub mod model_selection;
pub mod pipeline;
pub mod sampling;
pub mod special;

pub use distributions::{FamilyKind, ZipfModel};
pub use estimation::{FitResult, FrequencyVector};
pub use gof::GofResult;
pub use model_selection::LrResult;
pub use sampling::SamplerState;
