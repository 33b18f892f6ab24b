//! Reduction of measured data: flux calibration from jump voltages,
//! single-shot decay detection and censored lifetime histograms, plus
//! synthetic data for exercising them.

pub mod calibrate;
pub mod decay;
pub mod histogram;
pub mod synth;

pub use calibrate::{calibrate_flux, detect_jumps, Calibration, CalibrationBranch, CalibrationInput};
pub use decay::{detect_all, detect_decay, Detection, LifetimeSample, MeasurementProtocol, ShotTrace, TraceMeta};
pub use histogram::{lifetime_histogram, Binning, LifetimeHistogram};
pub use synth::{synthesize_calibration, synthesize_traces, TraceModel};
