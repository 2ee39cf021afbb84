//! Experiment engine for associating biological container context (species,
//! tissue types, cell lines) with biochemical events across sentence
//! boundaries.
//!
//! The pipeline runs from an annotated corpus ([`corpus`]) to type-level
//! candidates ([`instances`]), per mention-pair features ([`features`]),
//! mean/min/max aggregation ([`aggregation`]), from-scratch classifiers
//! ([`classifiers`]) and the leave-one-paper-out evaluation protocol
//! ([`eval`]). Corpus-quality statistics live in [`agreement`].

pub mod aggregation;
pub mod agreement;
pub mod classifiers;
pub mod config;
pub mod convert;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod instances;
pub mod matrix;
pub mod seed;

pub use error::{Error, Result};
