//! Zadoff-Chu sounding waveform: sequence generation, OFDM mapping, and the
//! repeated CP-free sounding frame.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::SounderConfig;
use crate::signal::{self, ComplexBaseband};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveformError {
    #[error("ZC length must be >= 1")]
    ZeroLength,
    #[error("ZC root {root} must satisfy 0 < root < {length}")]
    RootOutOfRange { root: u64, length: u64 },
    #[error("ZC root {root} is not coprime with length {length}")]
    NotCoprime { root: u64, length: u64 },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Unit-modulus Zadoff-Chu sequence, x[n] = exp(-iπ·q·n(n+1)/N).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZcSequence {
    pub root: u64,
    pub length: u64,
    pub values: Vec<Complex64>,
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn zc_generate(root: u64, length: u64) -> Result<ZcSequence, WaveformError> {
    if length == 0 {
        return Err(WaveformError::ZeroLength);
    }
    if length > 1 && (root == 0 || root >= length) {
        return Err(WaveformError::RootOutOfRange { root, length });
    }
    if gcd(root, length) != 1 {
        return Err(WaveformError::NotCoprime { root, length });
    }
    // Reduce q·n(n+1) modulo 2N in integers so the phase stays exact for long sequences.
    let two_n = 2 * length as u128;
    let values = (0..length)
        .map(|n| {
            let m = (root as u128 * (n as u128 * (n as u128 + 1))) % two_n;
            Complex64::from_polar(1.0, -PI * m as f64 / length as f64)
        })
        .collect();
    Ok(ZcSequence { root, length, values })
}

/// Maps `symbol_values` onto the occupied subcarriers and inverse-transforms one
/// `fft_size`-sample period with 1/fft_size scaling.
pub fn ofdm_modulate(
    symbol_values: &[Complex64],
    cfg: &SounderConfig,
) -> Result<ComplexBaseband, WaveformError> {
    let l = cfg.zc_length;
    if symbol_values.len() != l || l > cfg.fft_size {
        return Err(WaveformError::LengthMismatch { expected: l, got: symbol_values.len() });
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); cfg.fft_size];
    for (i, v) in symbol_values.iter().enumerate() {
        buf[signal::subcarrier_bin(i, l, cfg.fft_size)] = *v;
    }
    signal::ifft(&mut buf);
    Ok(ComplexBaseband::new(buf, cfg.sample_rate_hz(), 0.0))
}

/// Forward transform of one period, returning the occupied subcarriers.
pub fn ofdm_demodulate(period: &[Complex64], zc_length: usize) -> Vec<Complex64> {
    let mut buf = period.to_vec();
    signal::fft(&mut buf);
    signal::extract_subcarriers(&buf, zc_length)
}

/// The transmitted sounding frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TxFrame {
    /// `repetitions` back-to-back copies of one modulated period.
    pub baseband: ComplexBaseband,
    pub repetitions: usize,
    pub fft_size: usize,
    /// Nominal ZC sequence; the correlator divides by this.
    pub zc: ZcSequence,
    /// Subcarrier values actually transmitted (ZC times any TX coefficients).
    pub freq_domain_reference: Vec<Complex64>,
    pub sample_rate_hz: f64,
}

impl TxFrame {
    pub fn duration_s(&self) -> f64 {
        self.baseband.duration_s()
    }

    pub fn period(&self, k: usize) -> &[Complex64] {
        &self.baseband.samples[k * self.fft_size..(k + 1) * self.fft_size]
    }
}

/// Power reference that maps an unweighted ZC period to `eirp_dbm`.
fn frame_power_ref(cfg: &SounderConfig) -> f64 {
    let per_sample = cfg.zc_length as f64 / (cfg.fft_size as f64).powi(2);
    cfg.tx_eirp_dbm - 10.0 * per_sample.log10()
}

fn repeat_period(period: &[Complex64], reps: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(period.len() * reps);
    for _ in 0..reps {
        out.extend_from_slice(period);
    }
    out
}

pub fn build_sounding_frame(cfg: &SounderConfig, root: u64) -> Result<TxFrame, WaveformError> {
    let zc = zc_generate(root, cfg.zc_length as u64)?;
    let period = ofdm_modulate(&zc.values, cfg)?;
    let samples = repeat_period(&period.samples, cfg.n_repetitions);
    Ok(TxFrame {
        baseband: ComplexBaseband::new(samples, cfg.sample_rate_hz(), frame_power_ref(cfg)),
        repetitions: cfg.n_repetitions,
        fft_size: cfg.fft_size,
        freq_domain_reference: zc.values.clone(),
        zc,
        sample_rate_hz: cfg.sample_rate_hz(),
    })
}

/// Multiplies the transmitted subcarriers by per-subcarrier coefficients and
/// re-modulates. The nominal ZC reference is left untouched.
pub fn apply_tx_coefficients(
    frame: &TxFrame,
    coeffs: &[Complex64],
    cfg: &SounderConfig,
) -> Result<TxFrame, WaveformError> {
    let l = frame.freq_domain_reference.len();
    if coeffs.len() != l {
        return Err(WaveformError::LengthMismatch { expected: l, got: coeffs.len() });
    }
    let weighted: Vec<Complex64> =
        frame.freq_domain_reference.iter().zip(coeffs).map(|(x, c)| x * c).collect();
    let period = ofdm_modulate(&weighted, cfg)?;
    let mut out = frame.clone();
    out.baseband.samples = repeat_period(&period.samples, frame.repetitions);
    out.freq_domain_reference = weighted;
    Ok(out)
}
