//! Experiment harness for the faintmark pipeline: synthetic corpora, the
//! strength/entropy/size/mitigation sweeps, CSV records, and SVG charts.

pub mod configio;
pub mod corpus;
pub mod payloads;
pub mod plots;
pub mod records;
pub mod sweeps;
