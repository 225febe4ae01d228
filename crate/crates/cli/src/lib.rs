//! Workflow behind the `abfd` command: synthesize a campaign, extract and
//! cache gated cepstral features, train and evaluate the classifier, and run
//! the named seen/unseen damage experiments end to end.

pub mod commands;
pub mod experiment;

pub use experiment::{ExperimentName, ExperimentSpec, Overrides};
