//! Metrics for generated graph sets: descriptor MMDs and their ratio to the
//! train-vs-test baseline, exact planarity, SBM validity and VUN.

pub mod error;
pub mod mmd;
pub mod planarity;
pub mod report;
pub mod sbm;
pub mod vun;

pub use error::{EvalError, Result};
pub use mmd::{mmd, Distance, MmdConfig};
pub use planarity::is_planar;
pub use report::{descriptor_mmds, full_report, ReportConfig, SampleReport};
pub use sbm::{calibrate, fit_blocks, Calibration, SbmFit, SbmValidity};
pub use vun::{vun, vun_flags, Validity, VunReport};
