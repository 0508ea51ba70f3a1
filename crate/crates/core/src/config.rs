//! Band plan and sounder configuration.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::{Dbm, SPEED_OF_LIGHT};

/// Supported carrier frequencies in GHz. 7 GHz is served by the omni receiver only.
pub const BAND_CENTERS_GHZ: [f64; 4] = [7.0, 8.3, 11.3, 14.5];

/// Maximum allowed transmit EIRP.
pub const MAX_EIRP_DBM: f64 = 43.0;

/// Carrier frequency and the phased-array fit-out used with it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandPlan {
    pub center_frequency_hz: f64,
    pub beams_per_array: u32,
    pub elements_per_array: u32,
}

impl BandPlan {
    /// The catalog band plan for a carrier in GHz.
    pub fn for_ghz(f_ghz: f64) -> Result<Self, ConfigError> {
        let (beams, elements) = catalog_array(f_ghz).ok_or(ConfigError::UnknownBand(f_ghz))?;
        Ok(Self {
            center_frequency_hz: f_ghz * 1e9,
            beams_per_array: beams,
            elements_per_array: elements,
        })
    }

    pub fn center_ghz(&self) -> f64 {
        self.center_frequency_hz / 1e9
    }

    pub fn has_arrays(&self) -> bool {
        self.beams_per_array > 0
    }
}

/// (beams per array, elements per array) for a catalog carrier.
fn catalog_array(f_ghz: f64) -> Option<(u32, u32)> {
    let idx = BAND_CENTERS_GHZ.iter().position(|&c| (c - f_ghz).abs() < 1e-6)?;
    Some(match idx {
        0 => (0, 0),
        1 | 2 => (15, 32),
        _ => (20, 64),
    })
}

/// Everything the waveform, receiver and link-budget code needs to agree on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SounderConfig {
    pub band: BandPlan,
    pub bandwidth_hz: f64,
    pub subcarrier_spacing_hz: f64,
    pub zc_length: usize,
    pub n_repetitions: usize,
    pub fft_size: usize,
    pub max_excess_delay_s: f64,
    pub tx_eirp_dbm: f64,
    pub rx_noise_figure_omni_db: f64,
    pub rx_noise_figure_array_db: f64,
}

impl SounderConfig {
    /// Nominal configuration for one of the catalog carriers.
    pub fn for_band(f_ghz: f64) -> Result<Self, ConfigError> {
        Ok(Self {
            band: BandPlan::for_ghz(f_ghz)?,
            bandwidth_hz: 400e6,
            subcarrier_spacing_hz: 120e3,
            zc_length: 3343,
            n_repetitions: 4,
            fft_size: 4096,
            max_excess_delay_s: 8e-6,
            tx_eirp_dbm: MAX_EIRP_DBM,
            rx_noise_figure_omni_db: 1.5,
            rx_noise_figure_array_db: 8.3,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| ConfigError::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn center_ghz(&self) -> f64 {
        self.band.center_ghz()
    }

    /// zc_length × subcarrier spacing.
    pub fn occupied_bandwidth_hz(&self) -> f64 {
        self.zc_length as f64 * self.subcarrier_spacing_hz
    }

    /// fft_size × subcarrier spacing.
    pub fn sample_rate_hz(&self) -> f64 {
        self.fft_size as f64 * self.subcarrier_spacing_hz
    }

    /// One OFDM/ZC period.
    pub fn zc_period_s(&self) -> f64 {
        1.0 / self.subcarrier_spacing_hz
    }

    /// CIR delay bin width.
    pub fn tap_spacing_s(&self) -> f64 {
        1.0 / self.occupied_bandwidth_hz()
    }

    pub fn frame_duration_s(&self) -> f64 {
        self.n_repetitions as f64 / self.subcarrier_spacing_hz
    }

    /// Correlation plus coherent-averaging gain, 10·log10(zc_length · n_repetitions).
    pub fn processing_gain_db(&self) -> f64 {
        10.0 * ((self.zc_length * self.n_repetitions) as f64).log10()
    }

    pub fn tx_eirp(&self) -> Dbm {
        Dbm(self.tx_eirp_dbm)
    }

    /// Metres of propagation per delay bin.
    pub fn range_per_tap_m(&self) -> f64 {
        SPEED_OF_LIGHT * self.tap_spacing_s()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub field: &'static str,
    pub constraint: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.constraint)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("unknown band {0} GHz (expected one of 7, 8.3, 11.3, 14.5)")]
    UnknownBand(f64),
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config io error: {0}")]
    Io(String),
    #[error("{} invariant violation(s): {}", .0.len(), join(.0))]
    Invalid(Vec<Violation>),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// Checks every configuration invariant and reports all violations at once.
pub fn validate_config(cfg: SounderConfig) -> Result<SounderConfig, ConfigError> {
    let mut out = Vec::new();
    let mut bad = |field: &'static str, constraint: String| out.push(Violation { field, constraint });

    let f_ghz = cfg.band.center_ghz();
    match catalog_array(f_ghz) {
        None => bad(
            "band.center_frequency_hz",
            format!("{f_ghz} GHz not in {{7, 8.3, 11.3, 14.5}} GHz"),
        ),
        Some((beams, elements)) => {
            if cfg.band.beams_per_array != beams {
                bad(
                    "band.beams_per_array",
                    format!("must be {beams} at {f_ghz} GHz, got {}", cfg.band.beams_per_array),
                );
            }
            if cfg.band.elements_per_array != elements {
                bad(
                    "band.elements_per_array",
                    format!("must be {elements} at {f_ghz} GHz, got {}", cfg.band.elements_per_array),
                );
            }
        }
    }

    let positive = [
        ("bandwidth_hz", cfg.bandwidth_hz),
        ("subcarrier_spacing_hz", cfg.subcarrier_spacing_hz),
        ("max_excess_delay_s", cfg.max_excess_delay_s),
    ];
    for (field, v) in positive {
        if !(v.is_finite() && v > 0.0) {
            bad(field, format!("must be finite and > 0, got {v}"));
        }
    }
    for (field, v) in [
        ("rx_noise_figure_omni_db", cfg.rx_noise_figure_omni_db),
        ("rx_noise_figure_array_db", cfg.rx_noise_figure_array_db),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            bad(field, format!("must be finite and >= 0, got {v}"));
        }
    }

    if cfg.zc_length == 0 || cfg.zc_length % 2 == 0 {
        bad("zc_length", format!("must be odd and > 0, got {}", cfg.zc_length));
    }
    if cfg.n_repetitions == 0 {
        bad("n_repetitions", "must be >= 1".into());
    }

    let occ = cfg.occupied_bandwidth_hz();
    if cfg.bandwidth_hz > 0.0 && ((occ - cfg.bandwidth_hz) / cfg.bandwidth_hz).abs() > 0.01 {
        bad(
            "zc_length",
            format!(
                "zc_length × scs mismatch: {} × {} Hz = {} Hz is not within 1% of bandwidth {} Hz",
                cfg.zc_length, cfg.subcarrier_spacing_hz, occ, cfg.bandwidth_hz
            ),
        );
    }

    if !cfg.fft_size.is_power_of_two() || cfg.fft_size < cfg.zc_length {
        bad(
            "fft_size",
            format!(
                "not power of two / < zc_length: fft_size {} must be a power of two >= {}",
                cfg.fft_size, cfg.zc_length
            ),
        );
    }

    if cfg.subcarrier_spacing_hz > 0.0 && cfg.max_excess_delay_s > cfg.zc_period_s() {
        bad(
            "max_excess_delay_s",
            format!(
                "{} s exceeds one ZC period {} s",
                cfg.max_excess_delay_s,
                cfg.zc_period_s()
            ),
        );
    }

    if !(cfg.tx_eirp_dbm.is_finite() && cfg.tx_eirp_dbm <= MAX_EIRP_DBM) {
        bad("tx_eirp_dbm", format!("must be <= {MAX_EIRP_DBM} dBm, got {}", cfg.tx_eirp_dbm));
    }

    if out.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Invalid(out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn violations(cfg: SounderConfig) -> Vec<Violation> {
        match validate_config(cfg) {
            Err(ConfigError::Invalid(v)) => v,
            other => panic!("expected violations, got {other:?}"),
        }
    }

    #[test]
    fn band_plan_mapping() {
        let cases = [(7.0, 0, 0), (8.3, 15, 32), (11.3, 15, 32), (14.5, 20, 64)];
        for (f, beams, el) in cases {
            let b = BandPlan::for_ghz(f).unwrap();
            assert_eq!(b.beams_per_array, beams);
            assert_eq!(b.elements_per_array, el);
        }
        assert!(BandPlan::for_ghz(9.0).is_err());
    }

    #[test]
    fn defaults_validate_for_every_band() {
        for f in BAND_CENTERS_GHZ {
            let cfg = SounderConfig::for_band(f).unwrap();
            assert_eq!(validate_config(cfg.clone()).unwrap(), cfg);
        }
    }

    #[test]
    fn derived_quantities() {
        let cfg = SounderConfig::for_band(14.5).unwrap();
        assert!((cfg.occupied_bandwidth_hz() - 401.16e6).abs() < 1.0);
        assert!((cfg.sample_rate_hz() - 491.52e6).abs() < 1.0);
        assert!((cfg.zc_period_s() - 8.333_333e-6).abs() < 1e-11);
        assert!((cfg.tap_spacing_s() - 2.4928e-9).abs() < 1e-13);
        assert!(cfg.zc_period_s() >= cfg.max_excess_delay_s);
        assert!((cfg.processing_gain_db() - 41.262).abs() < 1e-3);
    }

    #[test]
    fn zc_bandwidth_mismatch() {
        let mut cfg = SounderConfig::for_band(14.5).unwrap();
        cfg.zc_length = 101;
        let v = violations(cfg);
        assert!(v.iter().any(|x| x.constraint.contains("zc_length × scs mismatch")));
    }

    #[test]
    fn fft_not_power_of_two() {
        let mut cfg = SounderConfig::for_band(14.5).unwrap();
        cfg.fft_size = 3000;
        let v = violations(cfg);
        assert!(v.iter().any(|x| x.field == "fft_size" && x.constraint.contains("not power of two / < zc_length")));
    }

    #[test]
    fn reports_all_violations() {
        let mut cfg = SounderConfig::for_band(8.3).unwrap();
        cfg.fft_size = 2048;
        cfg.tx_eirp_dbm = 50.0;
        cfg.band.beams_per_array = 20;
        cfg.max_excess_delay_s = 1e-5;
        let v = violations(cfg);
        let fields: Vec<_> = v.iter().map(|x| x.field).collect();
        for f in ["fft_size", "tx_eirp_dbm", "band.beams_per_array", "max_excess_delay_s"] {
            assert!(fields.contains(&f), "missing {f} in {fields:?}");
        }
    }

    #[test]
    fn json_rejects_unknown_keys() {
        let cfg = SounderConfig::for_band(14.5).unwrap();
        let json = cfg.to_json_pretty();
        assert_eq!(SounderConfig::from_json(&json).unwrap(), cfg);
        let with_extra = json.replacen('{', "{\"bogus\": 1,", 1);
        assert!(matches!(SounderConfig::from_json(&with_extra), Err(ConfigError::Parse(_))));
    }
}
