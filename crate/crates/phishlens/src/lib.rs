//! File, network and command-line layer of phishlens.
//!
//! The pure pipeline lives in `phishlens_core`; this crate adds provider
//! profiles, the HTTP gateway, corpus loading, evaluation runs and their
//! artifact files.

pub mod cli;
pub mod config;
pub mod dataset;
pub mod evaluate;
pub mod gateway;
pub mod report;

pub use phishlens_core as core;
