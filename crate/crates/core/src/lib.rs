//! Identifier obfuscation for Python programs with verified semantics.

pub mod data;
pub mod datasetio;
pub mod evalrunner;
pub mod frontend;
pub mod metrics;
pub mod pipeline;
pub mod rewrite;
pub mod scopes;
pub mod strategies;
pub mod verify;
