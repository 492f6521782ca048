//! Config-driven front end for `chist-core`.

pub mod app;
pub mod catalog;
pub mod config;
pub mod execute;
pub mod report;
