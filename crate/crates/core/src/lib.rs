//! Example-based verb sense disambiguation with training-utility selective
//! sampling.
//!
//! The crate is organized bottom-up: [`corpus`] and [`thesaurus`] load the
//! inputs, [`vsm`] builds co-occurrence vectors, [`engine`] disambiguates
//! against a [`database::SenseDatabase`], [`baselines`] holds the comparison
//! classifiers, [`sampler`] runs pool-based selective sampling with
//! incrementally maintained caches and [`eval`] drives the experiments.

pub mod baselines;
pub mod corpus;
pub mod database;
pub mod engine;
pub mod error;
pub mod eval;
pub mod par;
pub mod sampler;
pub mod synth;
pub mod thesaurus;
pub mod vsm;

pub use error::{Error, Result};
