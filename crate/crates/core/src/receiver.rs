//! Full-correlator receiver: CIR extraction, power delay profiles, noise
//! thresholding and omnidirectional synthesis from beam sweeps.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::SounderConfig;
use crate::signal::{self, ComplexBaseband};
use crate::waveform::TxFrame;

/// Threshold margin above the tail-decile noise floor estimate.
///
/// The estimator is the median of exponentially distributed bin powers, which
/// sits 1.59 dB under the mean; 9 dB keeps the pure-noise false-alarm rate
/// near 0.4%.
pub const DEFAULT_MARGIN_DB: f64 = 9.0;

/// Fraction of the delay window at the end used for noise estimation.
pub const TAIL_FRACTION: f64 = 0.1;

/// Floor on the noise estimate relative to the strongest bin, so that
/// noiseless profiles are not thresholded on rounding residue. Matches the
/// dynamic range of f32 recordings.
pub const DYNAMIC_RANGE_DB: f64 = 130.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReceiverError {
    #[error("capture holds {got} samples, {needed} required")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("reference has zc_length {got}, configuration expects {expected}")]
    ReferenceMismatch { expected: usize, got: usize },
    #[error("RX correction has {got} coefficients, expected {expected}")]
    CorrectionLength { expected: usize, got: usize },
    #[error("threshold margin must be positive, got {0}")]
    Margin(f64),
    #[error("profiles differ in length or tap spacing")]
    MixedGeometry,
    #[error("profile {0} is not thresholded")]
    NotThresholded(usize),
    #[error("no profiles given")]
    Empty,
}

/// Where and when a capture was taken.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CaptureMeta {
    pub timestamp_s: f64,
    pub node_id: u16,
    pub array_id: u8,
    /// `array::OMNI_BEAM` for the omni antenna.
    pub beam_id: u16,
}

impl CaptureMeta {
    pub fn is_omni(&self) -> bool {
        self.beam_id == crate::array::OMNI_BEAM
    }
}

/// Complex channel impulse response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cir {
    pub taps: Vec<Complex64>,
    pub tap_spacing_s: f64,
    /// Absolute power (dBm) of a tap with |tap| = 1.
    pub power_reference_dbm: f64,
    pub meta: CaptureMeta,
}

impl Cir {
    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn delay_s(&self, bin: usize) -> f64 {
        bin as f64 * self.tap_spacing_s
    }

    pub fn peak_bin(&self) -> usize {
        argmax(self.taps.iter().map(|t| t.norm_sqr()))
    }

    /// Peak power over the mean power of every other bin, dB.
    pub fn peak_snr_db(&self) -> f64 {
        let p = self.peak_bin();
        let peak = self.taps[p].norm_sqr();
        let rest: f64 = self.taps.iter().enumerate().filter(|(i, _)| *i != p).map(|(_, t)| t.norm_sqr()).sum();
        10.0 * (peak / (rest / (self.len() - 1) as f64)).log10()
    }
}

fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Receiver corrections from calibration: per-subcarrier flatness
/// coefficients and an absolute power offset.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RxCorrection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<Complex64>>,
    #[serde(default)]
    pub offset_db: f64,
}

impl RxCorrection {
    pub fn offset(offset_db: f64) -> Self {
        Self { coefficients: None, offset_db }
    }
}

/// Correlates a capture against the transmitted ZC sequence.
pub fn correlate(rx: &ComplexBaseband, reference: &TxFrame, cfg: &SounderConfig) -> Result<Cir, ReceiverError> {
    correlate_with(rx, reference, cfg, &RxCorrection::default())
}

/// Coherently averages the repetitions, equalizes by the nominal ZC values on
/// every occupied subcarrier, applies `correction`, and returns to the delay
/// domain with a `zc_length`-point inverse transform. A unit, zero-delay
/// channel gives tap 0 = 1.
pub fn correlate_with(
    rx: &ComplexBaseband,
    reference: &TxFrame,
    cfg: &SounderConfig,
    correction: &RxCorrection,
) -> Result<Cir, ReceiverError> {
    let l = cfg.zc_length;
    let n = cfg.fft_size;
    let reps = cfg.n_repetitions;
    if reference.zc.values.len() != l {
        return Err(ReceiverError::ReferenceMismatch { expected: l, got: reference.zc.values.len() });
    }
    if rx.samples.len() < n * reps {
        return Err(ReceiverError::InsufficientSamples { needed: n * reps, got: rx.samples.len() });
    }
    if let Some(c) = &correction.coefficients {
        if c.len() != l {
            return Err(ReceiverError::CorrectionLength { expected: l, got: c.len() });
        }
    }

    let mut avg = vec![Complex64::new(0.0, 0.0); n];
    for period in rx.samples.chunks_exact(n).take(reps) {
        avg.iter_mut().zip(period).for_each(|(a, x)| *a += x);
    }
    let inv = 1.0 / reps as f64;
    avg.iter_mut().for_each(|a| *a *= inv);
    signal::fft(&mut avg);

    // Subcarrier slot i carries signed index i - (L-1)/2; placing it at that
    // index mod L makes bin m of the inverse transform the delay m / (L·Δf).
    let mut h = vec![Complex64::new(0.0, 0.0); l];
    for i in 0..l {
        let mut v = avg[signal::subcarrier_bin(i, l, n)] / reference.zc.values[i];
        if let Some(c) = &correction.coefficients {
            v *= c[i];
        }
        h[signal::subcarrier_bin(i, l, l)] = v;
    }
    signal::ifft(&mut h);

    let scale_db = 10.0 * (l as f64 / (n * n) as f64).log10();
    Ok(Cir {
        taps: h,
        tap_spacing_s: cfg.tap_spacing_s(),
        power_reference_dbm: rx.power_ref_dbm + scale_db + correction.offset_db,
        meta: CaptureMeta { beam_id: crate::array::OMNI_BEAM, ..CaptureMeta::default() },
    })
}

/// Thresholding record kept on a PDP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdInfo {
    pub noise_floor_dbm: f64,
    pub margin_db: f64,
    pub threshold_dbm: f64,
    /// Retained taps inside the tail region used for the noise estimate.
    pub tail_warnings: usize,
}

/// Power delay profile in linear mW; `None` marks a tap removed by thresholding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pdp {
    pub taps_mw: Vec<Option<f64>>,
    pub tap_spacing_s: f64,
    pub meta: CaptureMeta,
    pub threshold: Option<ThresholdInfo>,
}

impl Pdp {
    pub fn len(&self) -> usize {
        self.taps_mw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps_mw.is_empty()
    }

    pub fn power_dbm(&self, bin: usize) -> Option<f64> {
        self.taps_mw[bin].map(mw_to_dbm)
    }

    pub fn delay_ns(&self, bin: usize) -> f64 {
        bin as f64 * self.tap_spacing_s * 1e9
    }

    pub fn retained(&self) -> usize {
        self.taps_mw.iter().flatten().count()
    }

    pub fn peak_bin(&self) -> usize {
        argmax(self.taps_mw.iter().map(|p| p.unwrap_or(f64::NEG_INFINITY)))
    }
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn pdp_from_cir(cir: &Cir) -> Pdp {
    let scale = dbm_to_mw(cir.power_reference_dbm);
    Pdp {
        taps_mw: cir.taps.iter().map(|t| Some(t.norm_sqr() * scale)).collect(),
        tap_spacing_s: cir.tap_spacing_s,
        meta: cir.meta,
        threshold: None,
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Removes taps below the noise floor estimate plus `margin_db`.
///
/// The floor is the median power of the last 10% of delay bins, which are
/// assumed free of paths. Taps retained inside that region are counted in
/// `tail_warnings`.
pub fn noise_threshold(pdp: &Pdp, margin_db: f64) -> Result<Pdp, ReceiverError> {
    if !(margin_db > 0.0) {
        return Err(ReceiverError::Margin(margin_db));
    }
    let len = pdp.len();
    let tail_start = len - ((len as f64 * TAIL_FRACTION).round() as usize).clamp(1, len.max(1));
    let tail: Vec<f64> = pdp.taps_mw[tail_start..].iter().map(|p| p.unwrap_or(0.0)).collect();
    let peak = pdp.taps_mw.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
    let floor = median(tail).max(peak * 10f64.powf(-DYNAMIC_RANGE_DB / 10.0));
    let threshold = floor * 10f64.powf(margin_db / 10.0);

    let taps_mw: Vec<Option<f64>> =
        pdp.taps_mw.iter().map(|p| p.filter(|&v| v >= threshold && v > 0.0)).collect();
    let tail_warnings = taps_mw[tail_start..].iter().flatten().count();
    Ok(Pdp {
        taps_mw,
        tap_spacing_s: pdp.tap_spacing_s,
        meta: pdp.meta,
        threshold: Some(ThresholdInfo {
            noise_floor_dbm: mw_to_dbm(floor),
            margin_db,
            threshold_dbm: mw_to_dbm(threshold),
            tail_warnings,
        }),
    })
}

/// Omnidirectional PDP synthesized from a beam sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmniPdp {
    pub taps_mw: Vec<Option<f64>>,
    /// Beams with a retained tap at each delay bin.
    pub contributing: Vec<u32>,
    pub tap_spacing_s: f64,
    pub n_beams: usize,
    pub timestamp_s: f64,
}

/// Per-tap linear power sum over thresholded beam PDPs.
pub fn synthesize_omni_pdp(beam_pdps: &[Pdp]) -> Result<OmniPdp, ReceiverError> {
    let first = beam_pdps.first().ok_or(ReceiverError::Empty)?;
    let len = first.len();
    for (i, p) in beam_pdps.iter().enumerate() {
        if p.len() != len || (p.tap_spacing_s - first.tap_spacing_s).abs() > 1e-15 {
            return Err(ReceiverError::MixedGeometry);
        }
        if p.threshold.is_none() {
            return Err(ReceiverError::NotThresholded(i));
        }
    }
    let mut taps_mw = vec![None; len];
    let mut contributing = vec![0u32; len];
    for p in beam_pdps {
        for (bin, v) in p.taps_mw.iter().enumerate() {
            if let Some(v) = v {
                *taps_mw[bin].get_or_insert(0.0) += v;
                contributing[bin] += 1;
            }
        }
    }
    Ok(OmniPdp {
        taps_mw,
        contributing,
        tap_spacing_s: first.tap_spacing_s,
        n_beams: beam_pdps.len(),
        timestamp_s: first.meta.timestamp_s,
    })
}

/// Anything that carries per-tap linear powers.
pub trait PowerProfile {
    fn taps_mw(&self) -> &[Option<f64>];
    fn tap_spacing_s(&self) -> f64;
}

impl PowerProfile for Pdp {
    fn taps_mw(&self) -> &[Option<f64>] {
        &self.taps_mw
    }
    fn tap_spacing_s(&self) -> f64 {
        self.tap_spacing_s
    }
}

impl PowerProfile for OmniPdp {
    fn taps_mw(&self) -> &[Option<f64>] {
        &self.taps_mw
    }
    fn tap_spacing_s(&self) -> f64 {
        self.tap_spacing_s
    }
}

/// Result of a power summation. All-absent profiles are `NoSignal`, never −∞.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TotalPower {
    Dbm(f64),
    NoSignal,
}

impl TotalPower {
    pub fn dbm(self) -> Option<f64> {
        match self {
            TotalPower::Dbm(v) => Some(v),
            TotalPower::NoSignal => None,
        }
    }

    pub fn from_mw(mw: f64) -> Self {
        if mw > 0.0 && mw.is_finite() {
            TotalPower::Dbm(mw_to_dbm(mw))
        } else {
            TotalPower::NoSignal
        }
    }
}

/// 10·log10 of the linear sum of retained taps.
pub fn total_power_dbm(profile: &impl PowerProfile) -> TotalPower {
    TotalPower::from_mw(profile.taps_mw().iter().flatten().sum())
}

/// Indices of local maxima among retained taps (cyclic). A bin counts when it
/// is at least as strong as both neighbours up to a relative 1e-9, so two
/// equal adjacent taps each register.
pub fn local_maxima(profile: &impl PowerProfile) -> Vec<usize> {
    let p = profile.taps_mw();
    let n = p.len();
    let v = |i: usize| p[i % n].unwrap_or(0.0);
    let geq = |a: f64, b: f64| a >= b * (1.0 - 1e-9);
    (0..n).filter(|&i| v(i) > 0.0 && geq(v(i), v(i + n - 1)) && geq(v(i), v(i + 1))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{apply_channel, ChannelRealization, Direction, FrontEndModel, PathTap, TapOrigin};
    use crate::waveform::build_sounding_frame;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn cfg() -> SounderConfig {
        SounderConfig::for_band(14.5).unwrap()
    }

    fn tap(bins: f64, gain: Complex64, cfg: &SounderConfig) -> PathTap {
        PathTap {
            delay_s: bins * cfg.tap_spacing_s(),
            gain,
            aod: Direction::default(),
            aoa: Direction::default(),
            origin: TapOrigin::Environment,
        }
    }

    fn run(taps: Vec<PathTap>, cfg: &SounderConfig) -> Cir {
        let frame = build_sounding_frame(cfg, 1).unwrap();
        let ch = ChannelRealization::from_taps(taps);
        let rx = apply_channel(&frame.baseband, &ch, &FrontEndModel::ideal(cfg, 0.0), cfg, None).unwrap();
        correlate(&rx, &frame, cfg).unwrap()
    }

    #[test]
    fn loopback_is_a_unit_impulse() {
        let cfg = cfg();
        let cir = run(vec![tap(0.0, Complex64::new(1.0, 0.0), &cfg)], &cfg);
        assert_eq!(cir.len(), cfg.zc_length);
        assert!((cir.taps[0].norm() - 1.0).abs() < 1e-9);
        assert!(cir.taps[1..].iter().all(|t| t.norm() < 1e-9));
        assert!((cir.power_reference_dbm - cfg.tx_eirp_dbm).abs() < 1e-9);
        assert!((cir.tap_spacing_s * cfg.zc_length as f64 - cfg.zc_period_s()).abs() < 1e-15);
    }

    #[test]
    fn integer_delay_lands_on_its_bin() {
        let cfg = cfg();
        let cir = run(vec![tap(10.0, Complex64::new(0.5, 0.0), &cfg)], &cfg);
        assert_eq!(cir.peak_bin(), 10);
        assert!((cir.taps[10].norm() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn linear_in_the_channel() {
        let cfg = cfg();
        let a = tap(7.3, Complex64::from_polar(0.8, 1.0), &cfg);
        let b = tap(55.0, Complex64::from_polar(0.3, -2.0), &cfg);
        let ca = run(vec![a], &cfg);
        let cb = run(vec![b], &cfg);
        let cab = run(vec![a, b], &cfg);
        for i in 0..cfg.zc_length {
            assert!((cab.taps[i] - ca.taps[i] - cb.taps[i]).norm() < 1e-9);
        }
    }

    #[test]
    fn mismatched_inputs_rejected() {
        let cfg = cfg();
        let frame = build_sounding_frame(&cfg, 1).unwrap();
        let short = ComplexBaseband::new(frame.baseband.samples[..100].to_vec(), cfg.sample_rate_hz(), 0.0);
        assert!(matches!(correlate(&short, &frame, &cfg), Err(ReceiverError::InsufficientSamples { .. })));
        let mut other = cfg.clone();
        other.zc_length = 3331;
        assert!(matches!(correlate(&frame.baseband, &frame, &other), Err(ReceiverError::ReferenceMismatch { .. })));
    }

    #[test]
    fn adjacent_taps_resolve() {
        let cfg = cfg();
        let one = Complex64::new(1.0, 0.0);
        let cir = run(vec![tap(100.0, one, &cfg), tap(101.0, one, &cfg)], &cfg);
        let pdp = noise_threshold(&pdp_from_cir(&cir), DEFAULT_MARGIN_DB).unwrap();
        assert_eq!(local_maxima(&pdp), vec![100, 101]);
    }

    #[test]
    fn pdp_scaling() {
        let cir = Cir {
            taps: vec![Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.0)],
            tap_spacing_s: 1e-9,
            power_reference_dbm: 0.0,
            meta: CaptureMeta::default(),
        };
        let pdp = pdp_from_cir(&cir);
        assert_eq!(pdp.power_dbm(0), Some(0.0));
        assert!((pdp.power_dbm(1).unwrap() + 6.0206).abs() < 1e-4);
        let direct: f64 = cir.taps.iter().map(|t| t.norm_sqr()).sum();
        assert!((dbm_to_mw(total_power_dbm(&pdp).dbm().unwrap()) - direct).abs() < 1e-12);
    }

    #[test]
    fn noiseless_single_tap_survives_alone() {
        let cfg = cfg();
        let cir = run(vec![tap(42.0, Complex64::new(0.01, 0.0), &cfg)], &cfg);
        let pdp = noise_threshold(&pdp_from_cir(&cir), DEFAULT_MARGIN_DB).unwrap();
        assert_eq!(pdp.retained(), 1);
        assert!(pdp.taps_mw[42].is_some());
        assert!(noise_threshold(&pdp, 0.0).is_err());
    }

    fn noise_pdp(rng: &mut ChaCha8Rng, len: usize, extra: Option<(usize, f64)>) -> Pdp {
        let mut taps: Vec<Complex64> = (0..len)
            .map(|_| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
            })
            .collect();
        if let Some((bin, amp)) = extra {
            taps[bin] += Complex64::new(amp, 0.0);
        }
        pdp_from_cir(&Cir { taps, tap_spacing_s: 1e-9, power_reference_dbm: 0.0, meta: CaptureMeta::default() })
    }

    #[test]
    fn false_alarm_rate_on_pure_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials = 200;
        let len = 3343;
        let mut retained = 0;
        for _ in 0..trials {
            retained += noise_threshold(&noise_pdp(&mut rng, len, None), DEFAULT_MARGIN_DB).unwrap().retained();
        }
        let rate = retained as f64 / (trials * len) as f64;
        // Oracle: exp(-ln2 · 10^(m/10)) for unit-mean exponential powers.
        let expected = (-(2f64.ln()) * 10f64.powf(DEFAULT_MARGIN_DB / 10.0)).exp();
        assert!(rate <= 0.01, "false alarm rate {rate}");
        assert!((rate - expected).abs() < 0.002, "rate {rate} vs {expected}");
    }

    /// P(|a + n|² ≥ t) for unit-power complex Gaussian n, by quadrature of the Rice density.
    fn rice_exceedance(a: f64, t: f64) -> f64 {
        let steps = 200_000;
        let r_max = a + 12.0;
        let r0 = t.sqrt();
        let h = (r_max - r0) / steps as f64;
        let pdf = |r: f64| {
            let x = 2.0 * a * r;
            // exp(-(r²+a²)) I0(2ar), with I0 scaled to avoid overflow
            2.0 * r * (-(r - a).powi(2)).exp() * bessel_i0_scaled(x)
        };
        (0..steps).map(|k| pdf(r0 + (k as f64 + 0.5) * h) * h).sum()
    }

    /// exp(-x) · I0(x), series for small x, asymptotic for large.
    fn bessel_i0_scaled(x: f64) -> f64 {
        if x < 30.0 {
            let mut term = 1.0;
            let mut sum = 1.0;
            for k in 1..200 {
                term *= (x / 2.0).powi(2) / (k * k) as f64;
                sum += term;
            }
            sum * (-x).exp()
        } else {
            let mut s = 1.0;
            let mut term = 1.0;
            for k in 1..8 {
                term *= ((2 * k - 1) as f64).powi(2) / (8.0 * x * k as f64);
                s += term;
            }
            s / (2.0 * std::f64::consts::PI * x).sqrt()
        }
    }

    #[test]
    fn detection_rate_matches_rice_statistics() {
        // A deterministic tap placed 3 dB above the nominal threshold, on top of
        // unit-mean noise. The nominal floor is the tail-median ln 2.
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let nominal_threshold = 2f64.ln() * 10f64.powf(DEFAULT_MARGIN_DB / 10.0);
        let tap_power = nominal_threshold * 10f64.powf(0.3);
        let trials = 4000;
        let hits = (0..trials)
            .filter(|_| {
                let p = noise_pdp(&mut rng, 3343, Some((500, tap_power.sqrt())));
                noise_threshold(&p, DEFAULT_MARGIN_DB).unwrap().taps_mw[500].is_some()
            })
            .count();
        let rate = hits as f64 / trials as f64;
        let oracle = rice_exceedance(tap_power.sqrt(), nominal_threshold);
        assert!((rate - oracle).abs() < 0.02, "rate {rate} vs Rice {oracle}");
        assert!(rate > 0.85);
    }

    #[test]
    fn omni_synthesis() {
        let mk = |p: f64, beam: u16| Pdp {
            taps_mw: vec![None, Some(p), None],
            tap_spacing_s: 1e-9,
            meta: CaptureMeta { beam_id: beam, ..Default::default() },
            threshold: Some(ThresholdInfo { noise_floor_dbm: -100.0, margin_db: 9.0, threshold_dbm: -91.0, tail_warnings: 0 }),
        };
        let one = synthesize_omni_pdp(&[mk(1e-5, 0)]).unwrap();
        assert_eq!(one.taps_mw, mk(1e-5, 0).taps_mw);
        let two = synthesize_omni_pdp(&[mk(1e-5, 0), mk(1e-5, 1)]).unwrap();
        let d = total_power_dbm(&two).dbm().unwrap() - total_power_dbm(&one).dbm().unwrap();
        assert!((d - 3.0103).abs() < 1e-4);
        assert_eq!(two.contributing, vec![0, 2, 0]);

        let mut short = mk(1.0, 2);
        short.taps_mw.pop();
        assert_eq!(synthesize_omni_pdp(&[mk(1.0, 0), short]), Err(ReceiverError::MixedGeometry));
        let mut raw = mk(1.0, 2);
        raw.threshold = None;
        assert_eq!(synthesize_omni_pdp(&[raw]), Err(ReceiverError::NotThresholded(0)));
    }

    #[test]
    fn total_power_values() {
        let pdp = |v: Vec<Option<f64>>| Pdp { taps_mw: v, tap_spacing_s: 1e-9, meta: Default::default(), threshold: None };
        assert!((total_power_dbm(&pdp(vec![Some(1e-5)])).dbm().unwrap() + 50.0).abs() < 1e-12);
        assert!((total_power_dbm(&pdp(vec![Some(1e-5), Some(1e-5)])).dbm().unwrap() + 46.9897).abs() < 1e-4);
        assert_eq!(total_power_dbm(&pdp(vec![None, None])), TotalPower::NoSignal);
    }

    #[test]
    fn calibration_scene_power() {
        // 3 m at 7 GHz with a 43 dBm EIRP: expected -15.88 dBm.
        let cfg = SounderConfig::for_band(7.0).unwrap();
        let pl = crate::channel::fspl_db(3.0, 7.0, 0.0, 0.0).unwrap();
        let t = PathTap::from_loss(3.0 / crate::units::SPEED_OF_LIGHT, pl, 0.3, Direction::default(), Direction::default(), TapOrigin::LineOfSight);
        let cir = run(vec![t], &cfg);
        let pdp = noise_threshold(&pdp_from_cir(&cir), DEFAULT_MARGIN_DB).unwrap();
        assert!((total_power_dbm(&pdp).dbm().unwrap() + 15.88).abs() < 0.01);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn shift_equivariance(k in 0usize..3343, frac in 0.0f64..1.0) {
            let cfg = cfg();
            let base = run(vec![tap(frac, Complex64::new(1.0, 0.0), &cfg)], &cfg);
            let shifted = run(vec![tap(frac + k as f64, Complex64::new(1.0, 0.0), &cfg)], &cfg);
            let l = cfg.zc_length;
            prop_assert_eq!(shifted.peak_bin(), (base.peak_bin() + k) % l);
            for i in (0..l).step_by(97) {
                prop_assert!((shifted.taps[(i + k) % l] - base.taps[i]).norm() < 1e-9);
            }
        }
    }
}
