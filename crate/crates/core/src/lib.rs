//! Variance estimation for finely stratified samples.
//!
//! With one or two sampled units per stratum the usual stratified variance
//! estimator is unavailable or unstable. This crate implements four
//! alternatives and a Monte Carlo harness that compares them:
//!
//! * collapsed strata ([`collapse`]),
//! * kernel-weighted neighbourhood residuals ([`kernel`]),
//! * empirical Bayes under a Dirichlet process prior ([`dirichlet`]),
//! * hierarchical Bayes with a half-t prior, fitted by MCMC ([`hb`]).
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`); the type
//! aliases at the crate root fix the scalar to `f64`.

pub mod collapse;
pub mod config;
pub mod dirichlet;
pub mod error;
pub mod harness;
pub mod hb;
pub mod io;
pub mod kernel;
pub mod popgen;
pub mod rng;
pub mod scalar;
pub mod strata;

pub use collapse::{collapse_sample, collapsed_variance, make_collapse_plan, CollapsePlan};
pub use dirichlet::nb_variance;
pub use error::{Error, Result};
pub use harness::{Estimator, SimulationSpec};
pub use hb::{hb_variance, run_hb_chain, HbHyperParams, McmcConfig};
pub use kernel::{kernel_variance, KernelConfig, KeyMode};
pub use popgen::{GaussianScenario, HmtConfig, Scenario};
pub use scalar::Real;
pub use strata::{ht_mean, ht_variance, Design};

pub type Population = strata::StratifiedPopulation<f64>;
pub type Stratum = strata::Stratum<f64>;
pub type Sample = strata::StratifiedSample<f64>;
pub type StratumSample = strata::StratumSample<f64>;
pub type PseudoStratum = collapse::PseudoStratum<f64>;
pub type HbPosterior = hb::HbPosterior<f64>;
pub type DirichletEstimate = dirichlet::DirichletEstimate<f64>;
