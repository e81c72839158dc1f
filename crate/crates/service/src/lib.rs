//! Command-line pipelines and the HTTP annotation API over a sampling session.

pub mod api;
pub mod cli;
