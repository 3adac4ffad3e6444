//! Files, experiment drivers and reports around `viewpath-core`.
// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod experiment;
pub mod export;
pub mod files;
pub mod oracle;
pub mod report;
pub mod settings;
pub mod text;

pub use viewpath_core as core;
