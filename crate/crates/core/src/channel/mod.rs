//! Ground-truth propagation: taps, scenes, front-end impairments and the
//! frequency-domain channel applied to a periodic sounding frame.

pub mod geometry;
pub mod rcs;
pub mod scene;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::SounderConfig;
use crate::rng::stream_rng;
use crate::signal::{self, ComplexBaseband};
use crate::units::thermal_noise_dbm;

pub use geometry::{
    bistatic_delay_s, fspl_db, scattering_gain_db, target_path_loss_db, Direction, SensingGeometry, Vec3,
};
pub use rcs::{rcs_sample_dbsm, RcsModel, SensingMode, TargetClass};
pub use scene::{realize_channel, RcsPolicy, Scene, TargetSpec, Waypoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },
    #[error("non-finite position")]
    NonFinitePosition,
    #[error("degenerate geometry: d1 = {d1}, d2 = {d2}")]
    DegenerateGeometry { d1: f64, d2: f64 },
    #[error("{what} track not defined at t = {t} s")]
    TrackUndefined { what: &'static str, t: f64 },
    #[error("environment tap delay {0} s outside [0, max excess delay]")]
    TapDelay(f64),
    #[error("sample rate {got} Hz does not match configured {expected} Hz")]
    SampleRate { expected: f64, got: f64 },
    #[error("input length {0} is not a whole number of periods")]
    PartialPeriod(usize),
    #[error("scene: {0}")]
    Scene(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TapOrigin {
    LineOfSight,
    Environment,
    Target,
}

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathTap {
    pub delay_s: f64,
    /// Linear voltage gain.
    pub gain: Complex64,
    pub aod: Direction,
    pub aoa: Direction,
    pub origin: TapOrigin,
}

impl PathTap {
    pub fn from_loss(
        delay_s: f64,
        path_loss_db: f64,
        phase_rad: f64,
        aod: Direction,
        aoa: Direction,
        origin: TapOrigin,
    ) -> Self {
        let gain = Complex64::from_polar(10f64.powf(-path_loss_db / 20.0), phase_rad);
        Self { delay_s, gain, aod, aoa, origin }
    }

    /// Power gain in dB (negative of the path loss).
    pub fn power_db(&self) -> f64 {
        20.0 * self.gain.norm().log10()
    }
}

/// Ground truth kept alongside a target tap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetTruth {
    pub index: usize,
    pub rcs_dbsm: f64,
    pub path_loss_db: f64,
    pub geometry: SensingGeometry,
    pub delay_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    /// Sorted by delay.
    pub taps: Vec<PathTap>,
    pub timestamp_s: f64,
    /// Timing offset between TX and capture window, added to every tap delay.
    #[serde(default)]
    pub delay_bias_s: f64,
    #[serde(default)]
    pub targets: Vec<TargetTruth>,
}

impl ChannelRealization {
    pub fn from_taps(mut taps: Vec<PathTap>) -> Self {
        taps.sort_by(|a, b| a.delay_s.total_cmp(&b.delay_s));
        Self { taps, timestamp_s: 0.0, delay_bias_s: 0.0, targets: Vec::new() }
    }

    /// Scales every tap by a direction-dependent receive gain in dB.
    pub fn with_rx_gain(&self, gain_db: impl Fn(&PathTap) -> f64) -> Self {
        let mut out = self.clone();
        for tap in &mut out.taps {
            tap.gain *= 10f64.powf(gain_db(tap) / 20.0);
        }
        out
    }

    /// H(f) = Σ gain · exp(−i2π f (delay + bias)).
    pub fn frequency_response(&self, freqs_hz: &[f64]) -> Vec<Complex64> {
        freqs_hz
            .iter()
            .map(|&f| {
                self.taps
                    .iter()
                    .map(|t| t.gain * Complex64::from_polar(1.0, -2.0 * PI * f * (t.delay_s + self.delay_bias_s)))
                    .sum()
            })
            .collect()
    }
}

/// Smooth seeded ripple across the band: three sinusoids in dB, zero mean,
/// bounded by `peak_db`.
fn ripple_db(len: usize, peak_db: f64, rng: &mut impl Rng) -> Vec<f64> {
    let weights: [f64; 3] = [rng.gen_range(0.2..1.0), rng.gen_range(0.2..1.0), rng.gen_range(0.2..1.0)];
    let total: f64 = weights.iter().sum();
    let comps: Vec<(f64, f64, f64)> = weights
        .iter()
        .enumerate()
        .map(|(j, w)| {
            let amp = peak_db * w / total;
            let cycles = (j as f64 + 0.5) + rng.gen_range(0.0..1.0);
            (amp, cycles, rng.gen_range(0.0..2.0 * PI))
        })
        .collect();
    let raw: Vec<f64> = (0..len)
        .map(|i| {
            let x = i as f64 / len as f64;
            comps.iter().map(|(a, c, p)| a * (2.0 * PI * c * x + p).sin()).sum()
        })
        .collect();
    // Zero mean in dB, so the ripple carries no net gain.
    let mean = raw.iter().sum::<f64>() / len.max(1) as f64;
    let centred: Vec<f64> = raw.iter().map(|v| v - mean).collect();
    let worst = centred.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if worst > peak_db { peak_db / worst } else { 1.0 };
    centred.iter().map(|v| v * scale).collect()
}

/// Front-end imperfections the calibration steps have to remove.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontEndModel {
    /// Per-subcarrier TX response (magnitude only; what a spectrum analyzer sees).
    pub tx_ripple: Vec<Complex64>,
    /// Per-subcarrier RX response.
    pub rx_ripple: Vec<Complex64>,
    pub rx_gain_offset_db: f64,
    pub noise_figure_db: f64,
    pub seed: u64,
}

impl FrontEndModel {
    pub const RIPPLE_PEAK_DB: f64 = 1.5;

    pub fn ideal(cfg: &SounderConfig, noise_figure_db: f64) -> Self {
        let one = vec![Complex64::new(1.0, 0.0); cfg.zc_length];
        Self { tx_ripple: one.clone(), rx_ripple: one, rx_gain_offset_db: 0.0, noise_figure_db, seed: 0 }
    }

    /// Ripple bounded by ±1.5 dB on both sides and a uniform RX gain error in ±3 dB.
    pub fn seeded(cfg: &SounderConfig, seed: u64, noise_figure_db: f64) -> Self {
        let mut rng = stream_rng(seed, &[0xFE]);
        let l = cfg.zc_length;
        let tx_mag = ripple_db(l, Self::RIPPLE_PEAK_DB, &mut rng);
        let rx_mag = ripple_db(l, Self::RIPPLE_PEAK_DB, &mut rng);
        let rx_phase = ripple_db(l, 0.3, &mut rng);
        let rx_gain_offset_db = rng.gen_range(-3.0..3.0);
        Self {
            tx_ripple: tx_mag.iter().map(|db| Complex64::new(10f64.powf(db / 20.0), 0.0)).collect(),
            rx_ripple: rx_mag
                .iter()
                .zip(&rx_phase)
                .map(|(db, ph)| Complex64::from_polar(10f64.powf(db / 20.0), *ph))
                .collect(),
            rx_gain_offset_db,
            noise_figure_db,
            seed,
        }
    }

    pub fn with_gain_offset(mut self, db: f64) -> Self {
        self.rx_gain_offset_db = db;
        self
    }

    /// Absolute in-band noise power at the RX input.
    pub fn noise_power_dbm(&self, cfg: &SounderConfig) -> f64 {
        thermal_noise_dbm(cfg.occupied_bandwidth_hz()).0 + self.noise_figure_db
    }
}

/// Applies `ch` and the front end to a whole-period periodic TX stream.
///
/// Each `fft_size` block is treated as one period of a periodic signal, so
/// fractional delays are exact phase ramps. Noise, when an RNG is given, is
/// white over the occupied subcarriers at −174 dBm/Hz + 10·log10(BW) + NF.
pub fn apply_channel(
    tx: &ComplexBaseband,
    ch: &ChannelRealization,
    fe: &FrontEndModel,
    cfg: &SounderConfig,
    noise: Option<&mut dyn RngCore>,
) -> Result<ComplexBaseband, ChannelError> {
    let fs = cfg.sample_rate_hz();
    if ((tx.sample_rate_hz - fs) / fs).abs() > 1e-9 {
        return Err(ChannelError::SampleRate { expected: fs, got: tx.sample_rate_hz });
    }
    let n = cfg.fft_size;
    let l = cfg.zc_length;
    if tx.samples.len() % n != 0 {
        return Err(ChannelError::PartialPeriod(tx.samples.len()));
    }

    let mut response = ch.frequency_response(&signal::bin_frequencies(cfg));
    let g = 10f64.powf(fe.rx_gain_offset_db / 20.0);
    response.iter_mut().for_each(|h| *h *= g);
    for i in 0..l {
        let b = signal::subcarrier_bin(i, l, n);
        response[b] *= fe.tx_ripple[i] * fe.rx_ripple[i];
    }

    let identity = response.iter().all(|h| *h == Complex64::new(1.0, 0.0));
    if identity && noise.is_none() {
        return Ok(tx.clone());
    }

    let noise_rel = 10f64.powf((fe.noise_power_dbm(cfg) - tx.power_ref_dbm) / 10.0);
    let bin_std = (noise_rel * (n * n) as f64 / l as f64 / 2.0).sqrt();
    let mut noise = noise;

    let mut out = Vec::with_capacity(tx.samples.len());
    for block in tx.samples.chunks(n) {
        let mut buf = block.to_vec();
        signal::fft(&mut buf);
        for (x, h) in buf.iter_mut().zip(&response) {
            *x *= h;
        }
        if let Some(rng) = noise.as_deref_mut() {
            for i in 0..l {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                buf[signal::subcarrier_bin(i, l, n)] += Complex64::new(re, im) * bin_std;
            }
        }
        signal::ifft(&mut buf);
        out.extend(buf);
    }
    Ok(ComplexBaseband::new(out, tx.sample_rate_hz, tx.power_ref_dbm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::build_sounding_frame;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_cfg() -> SounderConfig {
        let mut cfg = SounderConfig::for_band(14.5).unwrap();
        cfg.zc_length = 31;
        cfg.fft_size = 64;
        cfg.bandwidth_hz = 31.0 * cfg.subcarrier_spacing_hz;
        cfg
    }

    fn unit_tap(delay: f64, gain: Complex64) -> PathTap {
        PathTap {
            delay_s: delay,
            gain,
            aod: Direction::default(),
            aoa: Direction::default(),
            origin: TapOrigin::LineOfSight,
        }
    }

    #[test]
    fn identity_channel_is_exact() {
        let cfg = SounderConfig::for_band(14.5).unwrap();
        let frame = build_sounding_frame(&cfg, 1).unwrap();
        let ch = ChannelRealization::from_taps(vec![unit_tap(0.0, Complex64::new(1.0, 0.0))]);
        let fe = FrontEndModel::ideal(&cfg, 0.0);
        let out = apply_channel(&frame.baseband, &ch, &fe, &cfg, None).unwrap();
        assert_eq!(out, frame.baseband);
    }

    #[test]
    fn unit_tap_preserves_energy() {
        let cfg = SounderConfig::for_band(8.3).unwrap();
        let frame = build_sounding_frame(&cfg, 5).unwrap();
        let ch = ChannelRealization::from_taps(vec![unit_tap(13.7e-9, Complex64::from_polar(1.0, 0.4))]);
        let out = apply_channel(&frame.baseband, &ch, &FrontEndModel::ideal(&cfg, 0.0), &cfg, None).unwrap();
        assert!((out.energy() / frame.baseband.energy() - 1.0).abs() < 1e-10);
    }

    /// Direct O(N²) band-limited circular convolution.
    fn circular_convolution_oracle(x: &[Complex64], taps: &[PathTap], cfg: &SounderConfig) -> Vec<Complex64> {
        let n = cfg.fft_size;
        let freqs = signal::bin_frequencies(cfg);
        let h_freq: Vec<Complex64> = freqs
            .iter()
            .map(|&f| taps.iter().map(|t| t.gain * Complex64::from_polar(1.0, -2.0 * PI * f * t.delay_s)).sum())
            .collect();
        let h_time: Vec<Complex64> = (0..n)
            .map(|m| {
                (0..n)
                    .map(|b| h_freq[b] * Complex64::from_polar(1.0, 2.0 * PI * (b * m) as f64 / n as f64))
                    .sum::<Complex64>()
                    / n as f64
            })
            .collect();
        (0..n).map(|m| (0..n).map(|j| x[j] * h_time[(m + n - j) % n]).sum()).collect()
    }

    #[test]
    fn matches_time_domain_convolution() {
        let cfg = small_cfg();
        let frame = build_sounding_frame(&cfg, 3).unwrap();
        let ts = 1.0 / cfg.sample_rate_hz();
        let taps = vec![
            unit_tap(0.0, Complex64::new(0.8, 0.1)),
            unit_tap(3.0 * ts, Complex64::new(-0.2, 0.3)),
            unit_tap(7.0 * ts, Complex64::new(0.05, -0.1)),
        ];
        let ch = ChannelRealization::from_taps(taps.clone());
        let out = apply_channel(&frame.baseband, &ch, &FrontEndModel::ideal(&cfg, 0.0), &cfg, None).unwrap();
        let oracle = circular_convolution_oracle(frame.period(0), &taps, &cfg);
        for (a, b) in out.samples[..64].iter().zip(&oracle) {
            assert!((a - b).norm() < 1e-12);
        }
        // integer-sample delays are plain circular shifts
        let shift = ChannelRealization::from_taps(vec![unit_tap(5.0 * ts, Complex64::new(1.0, 0.0))]);
        let out = apply_channel(&frame.baseband, &shift, &FrontEndModel::ideal(&cfg, 0.0), &cfg, None).unwrap();
        for m in 0..64 {
            assert!((out.samples[m] - frame.period(0)[(m + 64 - 5) % 64]).norm() < 1e-12);
        }
    }

    #[test]
    fn noise_only_power() {
        let cfg = SounderConfig::for_band(14.5).unwrap();
        let frame = build_sounding_frame(&cfg, 1).unwrap();
        let ch = ChannelRealization::from_taps(vec![]);
        let fe = FrontEndModel::ideal(&cfg, 8.3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let out = apply_channel(&frame.baseband, &ch, &fe, &cfg, Some(&mut rng)).unwrap();
        let expected = -87.967 + 8.3;
        assert!((out.power_dbm() - expected).abs() < 0.1, "{} vs {}", out.power_dbm(), expected);
    }

    #[test]
    fn rejects_bad_input() {
        let cfg = small_cfg();
        let frame = build_sounding_frame(&cfg, 3).unwrap();
        let ch = ChannelRealization::from_taps(vec![]);
        let fe = FrontEndModel::ideal(&cfg, 0.0);
        let mut wrong_rate = frame.baseband.clone();
        wrong_rate.sample_rate_hz *= 2.0;
        assert!(matches!(apply_channel(&wrong_rate, &ch, &fe, &cfg, None), Err(ChannelError::SampleRate { .. })));
        let mut partial = frame.baseband.clone();
        partial.samples.pop();
        assert!(matches!(apply_channel(&partial, &ch, &fe, &cfg, None), Err(ChannelError::PartialPeriod(_))));
    }

    #[test]
    fn seeded_ripple_bounded() {
        let cfg = SounderConfig::for_band(11.3).unwrap();
        for seed in 0..20 {
            let fe = FrontEndModel::seeded(&cfg, seed, 8.3);
            for r in fe.tx_ripple.iter().chain(&fe.rx_ripple) {
                let db = 20.0 * r.norm().log10();
                assert!(db.abs() <= FrontEndModel::RIPPLE_PEAK_DB + 1e-12);
            }
            assert!(fe.rx_gain_offset_db.abs() <= 3.0);
        }
        assert_eq!(FrontEndModel::seeded(&cfg, 3, 1.0), FrontEndModel::seeded(&cfg, 3, 1.0));
    }
}
