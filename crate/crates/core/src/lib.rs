//! Spillover networks across returns, volatility, VaR and ES.
//!
//! The pipeline runs price ingest, per-asset risk indicators, VAR
//! estimation (OLS or post-LASSO), generalized variance decomposition,
//! rolling windows and community detection on the resulting networks.

pub mod error;
pub mod gfevd;
pub mod indicators;
pub mod network;
pub mod optim;
pub mod panel;
pub mod pipeline;
pub mod rolling;
pub mod simulate;
pub mod stats;
pub mod var;

pub use error::{Error, Result};
