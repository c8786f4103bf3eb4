//! Simulation and verification toolkit for directed polymers in the
//! intermediate disorder regime.
//!
//! The crate is organized around five subsystems:
//!
//! * [`dist`] — special functions and reference distributions, including a
//!   self-validating Tracy-Widom GUE evaluator and Kolmogorov-Smirnov
//!   machinery.
//! * [`weights`] — per-site disorder laws, their exact moments, centering and
//!   scaling constants, moment matching, validity checks and exponent
//!   arithmetic.
//! * [`paths`] — Bernoulli walks and bridges, intersection local times and
//!   the quantitative bridge lemmas behind the moment bounds.
//! * [`lattice`] — disorder fields, log-domain transfer-matrix partition
//!   functions, strip measures, replica identities and the weight-swap
//!   experiment.
//! * [`engine`] — reproducible parallel Monte Carlo driving with
//!   checkpoint/resume and streaming aggregation.

pub mod dd;
pub mod dist;
pub mod engine;
pub mod lattice;
pub mod paths;
pub mod rng;
pub mod weights;
