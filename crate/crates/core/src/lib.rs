//! Simulation twin of an adaptive cmWave/FR3 channel sounder.
//!
//! The crate synthesizes the Zadoff-Chu OFDM sounding frame, propagates it
//! through a ground-truth channel (static scatterers and moving sensing
//! targets), and runs the full-correlator receiver, calibration and analysis
//! chain on the result.

pub mod analysis;
pub mod array;
pub mod calibration;
pub mod campaign;
pub mod channel;
pub mod config;
pub mod export;
pub mod signal;
pub mod receiver;
pub mod recording;
pub mod rng;
pub mod units;
pub mod waveform;

pub use config::{validate_config, BandPlan, ConfigError, SounderConfig};
