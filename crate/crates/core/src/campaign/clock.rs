//! Node clock error models.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockSource {
    Gnss,
    Rubidium,
    Ptp,
    Ideal,
}

/// Preset parameters: GNSS offset std 10 ns, rubidium drift 1e-12 s/s,
/// PTP offset std 100 ns.
pub const GNSS_OFFSET_STD_S: f64 = 10e-9;
pub const RUBIDIUM_DRIFT: f64 = 1e-12;
pub const PTP_OFFSET_STD_S: f64 = 100e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeClock {
    pub source: ClockSource,
    pub offset_s: f64,
    pub drift: f64,
    pub jitter_std_s: f64,
    pub seed: u64,
}

impl Default for NodeClock {
    fn default() -> Self {
        Self::ideal()
    }
}

impl NodeClock {
    pub fn ideal() -> Self {
        Self { source: ClockSource::Ideal, offset_s: 0.0, drift: 0.0, jitter_std_s: 0.0, seed: 0 }
    }

    /// Preset for `source`; random offsets are drawn once from `seed`.
    pub fn preset(source: ClockSource, seed: u64) -> Self {
        let mut rng = stream_rng(seed, &[0xC10C]);
        let mut draw = |std: f64| Normal::new(0.0, std).expect("positive std").sample(&mut rng);
        let (offset_s, drift) = match source {
            ClockSource::Ideal => return Self::ideal(),
            ClockSource::Gnss => (draw(GNSS_OFFSET_STD_S), 0.0),
            ClockSource::Rubidium => (0.0, RUBIDIUM_DRIFT),
            ClockSource::Ptp => (draw(PTP_OFFSET_STD_S), 0.0),
        };
        Self { source, offset_s, drift, jitter_std_s: 0.0, seed }
    }

    /// Bound on |apply_clock(t) − t| over [0, horizon], with jitter taken at 4σ.
    pub fn worst_case_error_s(&self, horizon_s: f64) -> f64 {
        self.offset_s.abs() + self.drift.abs() * horizon_s + 4.0 * self.jitter_std_s
    }
}

/// Local clock reading at global time `t`: t + offset + drift·t + jitter.
/// The jitter draw is a deterministic function of (seed, t).
pub fn apply_clock(t_nominal: f64, clock: &NodeClock) -> f64 {
    let jitter = if clock.jitter_std_s > 0.0 {
        let mut rng = stream_rng(clock.seed, &[0x717, t_nominal.to_bits()]);
        let z: f64 = rng.sample(rand_distr::StandardNormal);
        z * clock.jitter_std_s
    } else {
        0.0
    };
    t_nominal + clock.offset_s + clock.drift * t_nominal + jitter
}

/// Apparent extra delay of a capture taken at `t`: a receiver clock that reads
/// late opens its window early relative to the signal; a transmitter that
/// reads late sends late.
pub fn delay_bias_s(t_nominal: f64, tx: &NodeClock, rx: &NodeClock) -> f64 {
    let e_tx = apply_clock(t_nominal, tx) - t_nominal;
    let e_rx = apply_clock(t_nominal, rx) - t_nominal;
    e_rx - e_tx
}
