//! A deterministic laboratory for studying how training randomness (weight
//! initialization vs. data-order reshuffling) drives variance in group
//! fairness metrics of small neural classifiers.

pub mod cli;
pub mod data;
pub mod experiments;
pub mod metrics;
pub mod nn;
pub mod rng;
pub mod stats;
