//! Error-message frequency analysis.
//!
//! Raw compiler and runtime output is canonicalized into message classes
//! ([`sanitizer`]), counted into rank-frequency tables ([`corpus`]), and
//! fitted to Zipf-Mandelbrot distributions ([`fitting`]) either by maximum
//! likelihood on the distribution of frequencies or by chi-squared
//! minimization over the low-frequency spectrum. [`distributions`] holds
//! the underlying models and a seeded sampler for synthetic corpora.

pub mod cli;
pub mod corpus;
pub mod distributions;
pub mod fitting;
pub mod sanitizer;
pub mod specfun;

pub use corpus::{FrequencyTable, LegomenaSpectrum, MessageCount};
pub use distributions::{EvertParams, SampleSpec, ZmParams};
pub use fitting::{FitMethod, FitResult};
pub use sanitizer::{LanguageProfile, RuleSet};
