//! Biomass pyrolysis analysis pipeline.
//!
//! The crate covers the full path from raw thermogravimetric (TGA) runs to
//! kinetic and thermodynamic parameters, plus a recurrent model that predicts
//! mass-loss curves for pure feedstocks and blends:
//!
//! - [`tga`]: curve/sample data model, CSV + JSON sidecar IO, uniform resampling.
//! - [`preprocess`]: conversion α(T), DTG, stage peak detection, T(α) lookup.
//! - [`kinetics`]: Friedman, KAS and FWO isoconversional regressions.
//! - [`thermo`]: activation enthalpy, Gibbs energy and entropy per α.
//! - [`synthkin`]: multi-pseudo-component Arrhenius simulator used as a
//!   ground-truth oracle for everything above.
//! - [`seqmodel`]: feature engineering, a from-scratch LSTM with BPTT,
//!   random hyperparameter search and evaluation metrics.
//! - [`report`] and [`plot`]: text/CSV tables, mass balance and SVG emission.
//!
//! Internal units are SI (K, s, J/mol, mass fraction of the initial sample).
//! Conversions to °C, K/min, % and kJ/mol happen at the IO boundary only.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod error;
pub mod kinetics;
pub mod plot;
pub mod preprocess;
pub mod report;
pub mod seqmodel;
pub mod synthkin;
pub mod thermo;
pub mod tga;

pub use error::{Error, ErrorKind, Result};
