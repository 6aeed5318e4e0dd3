//! Cross-flow vortex-induced-vibration (VIV) response and fatigue
//! prediction for tensioned pipes in sheared current, with adaptive
//! hydrodynamic parameters: measured responses are clustered by their
//! characteristics and a separate excitation-coefficient parameter set
//! is calibrated per cluster.
//!
//! The crate is organized around the workflow:
//!
//! 1. [`characterize`] extracts response features (mode order, harmonic
//!    stress ratio, bending stiffness ratio) from sensor records.
//! 2. [`clustering`] groups the features and classifies new cases.
//! 3. [`calibrate`] fits a [`hydro::CeParameterSet`] per cluster against
//!    measured fatigue using the frequency-domain [`predictor`].
//! 4. [`evaluate`] reports predicted-vs-measured accuracy statistics.
//!
//! [`structural`] holds the tensioned-beam model underneath all of it,
//! and [`data`] the JSON persistence plus a synthetic-case generator
//! used as a round-trip oracle.

// Validation uses `!(x > 0.0)` style comparisons: unlike `x <= 0.0`
// they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibrate;
pub mod characterize;
pub mod clustering;
pub mod data;
pub mod error;
pub mod evaluate;
pub mod hydro;
pub mod predictor;
pub mod structural;

pub use error::{Error, Result};
