//! Maintenance-time prediction pipeline.
//!
//! Ingests software-maintenance change logs, trains a small `[1, H, 1]`
//! feedforward network with Levenberg-Marquardt and validation early stopping
//! to predict maintenance days, and emits regression statistics plus SVG
//! diagnostic plots (regression scatter, MSE-per-epoch performance, error
//! histogram).
//!
//! The crate is organised as a straight pipeline:
//!
//! - [`ingest`] — change-log CSV parsing and sample construction
//! - [`dataset`] — min-max normalization and the seeded 70/15/15 split
//! - [`mlp`] — the tanh-hidden / linear-output network, residuals, Jacobian
//! - [`trainer`] — Levenberg-Marquardt training with early stopping
//! - [`stats`] — Pearson correlation, simple OLS regression, histograms
//! - [`report`] — SVG plot documents and CSV exports
//! - [`synth`] — seeded synthetic change-log generator
//! - [`cli`] — the command front end wiring the above into reproducible runs

pub mod cli;
pub mod dataset;
pub mod ingest;
pub mod mlp;
pub mod report;
pub mod stats;
pub mod synth;
pub mod trainer;
