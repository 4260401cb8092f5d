//! Latent Gaussian model for multisite daily precipitation occurrence.
//!
//! A site-day is wet when a standard normal latent value exceeds a site- and
//! month-specific threshold; latent values are correlated across sites and
//! over the previous `r` days. The crate fits the model to observed records,
//! repairs near-singular correlation estimates, simulates synthetic ensembles
//! and compares them with observations.

pub mod data;
pub mod model;
pub mod numerics;
pub mod simulate;
pub mod evaluate;
