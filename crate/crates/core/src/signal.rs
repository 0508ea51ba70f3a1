//! Sampled complex baseband and the FFT/subcarrier plumbing shared by TX and RX.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::config::SounderConfig;

/// Uniformly sampled IQ with an absolute power reference.
///
/// A stream whose mean |x|² is `p` carries `power_ref_dbm + 10·log10(p)` dBm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexBaseband {
    pub samples: Vec<Complex64>,
    pub sample_rate_hz: f64,
    pub power_ref_dbm: f64,
}

impl ComplexBaseband {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64, power_ref_dbm: f64) -> Self {
        Self { samples, sample_rate_hz, power_ref_dbm }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }

    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            self.energy() / self.samples.len() as f64
        }
    }

    /// Absolute power of the stream in dBm.
    pub fn power_dbm(&self) -> f64 {
        self.power_ref_dbm + 10.0 * self.mean_power().log10()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unnormalized forward DFT in place.
pub fn fft(buf: &mut [Complex64]) {
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    plan.process(buf);
}

/// Unnormalized inverse DFT in place (no 1/N).
pub fn ifft_unscaled(buf: &mut [Complex64]) {
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    plan.process(buf);
}

/// Inverse DFT with 1/N scaling.
pub fn ifft(buf: &mut [Complex64]) {
    ifft_unscaled(buf);
    let s = 1.0 / buf.len() as f64;
    buf.iter_mut().for_each(|x| *x *= s);
}

/// Signed subcarrier index of symbol slot `i`: -(L-1)/2 ..= (L-1)/2.
pub fn subcarrier_index(i: usize, zc_length: usize) -> i64 {
    i as i64 - ((zc_length - 1) / 2) as i64
}

/// FFT bin of symbol slot `i` for an `fft_size`-point transform.
pub fn subcarrier_bin(i: usize, zc_length: usize, fft_size: usize) -> usize {
    subcarrier_index(i, zc_length).rem_euclid(fft_size as i64) as usize
}

/// Baseband frequency offset of every occupied subcarrier, in Hz, in symbol-slot order.
pub fn subcarrier_frequencies(cfg: &SounderConfig) -> Vec<f64> {
    (0..cfg.zc_length)
        .map(|i| subcarrier_index(i, cfg.zc_length) as f64 * cfg.subcarrier_spacing_hz)
        .collect()
}

/// Frequency of every FFT bin in natural (0, 1, …, N-1) order with negative upper half.
pub fn bin_frequencies(cfg: &SounderConfig) -> Vec<f64> {
    let n = cfg.fft_size as i64;
    (0..n)
        .map(|b| {
            let k = if b >= n / 2 { b - n } else { b };
            k as f64 * cfg.subcarrier_spacing_hz
        })
        .collect()
}

/// Pulls the occupied subcarriers out of one forward-transformed period.
pub fn extract_subcarriers(spectrum: &[Complex64], zc_length: usize) -> Vec<Complex64> {
    let n = spectrum.len();
    (0..zc_length).map(|i| spectrum[subcarrier_bin(i, zc_length, n)]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mapping_is_symmetric_with_dc() {
        let l = 5;
        let bins: Vec<_> = (0..l).map(|i| subcarrier_bin(i, l, 8)).collect();
        assert_eq!(bins, vec![6, 7, 0, 1, 2]);
    }

    #[test]
    fn fft_roundtrip() {
        let orig: Vec<Complex64> = (0..16).map(|i| Complex64::new(i as f64, -(i as f64) / 3.0)).collect();
        let mut v = orig.clone();
        fft(&mut v);
        ifft(&mut v);
        for (a, b) in v.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
