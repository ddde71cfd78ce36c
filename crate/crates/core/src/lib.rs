//! Toolkit for running crowdsourced annotation projects on your own server.
//!
//! - [`config`]: task configuration documents, validation and clarity lint.
//! - [`planner`]: payment suggestion, deployment arithmetic and unit building
//!   with duplicate and golden-item injection.
//! - [`analytics`]: worker quality metrics, agreement and the quality report.
//! - [`service`]: the task server (embedded core plus HTTP API).
//! - [`cli`]: the `crowdqc` command line.
//! - [`sim`]: scripted worker personas for end-to-end exercises.

pub mod analytics;
pub mod answers;
pub mod cli;
pub mod config;
pub mod ingest;
pub mod markdown;
pub mod model;
pub mod planner;
pub mod service;
pub mod sim;
