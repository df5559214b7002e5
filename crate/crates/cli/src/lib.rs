//! Experiment harness: configuration, the map pipeline, training,
//! evaluation, and report emission behind the `rim` binary.

pub mod config;
pub mod evaluate;
pub mod mitigate;
pub mod pipeline;
pub mod report;
pub mod train;
