//! Measurement analytics: path-loss regression, angular profiles, target
//! isolation, RCS estimation and the link budget.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::array::BeamDefinition;
use crate::channel::{fspl_db, scattering_gain_db, ChannelError, SensingGeometry, SensingMode, TargetClass};
use crate::config::SounderConfig;
use crate::receiver::{
    dbm_to_mw, mw_to_dbm, noise_threshold, pdp_from_cir, synthesize_omni_pdp, total_power_dbm, OmniPdp, Pdp, PowerProfile,
    ReceiverError, TotalPower,
};
use crate::recording::Recording;
use crate::units::thermal_noise_dbm;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("need at least two distinct distances")]
    DegenerateDistances,
    #[error("invalid sample: {0}")]
    InvalidSample(String),
    #[error("beam {0} not in the beam table")]
    UnknownBeam(u16),
    #[error("profiles differ in length or tap spacing")]
    MixedGeometry,
    #[error("window {window_s} s smaller than one tap spacing {spacing_s} s")]
    WindowTooSmall { window_s: f64, spacing_s: f64 },
    #[error("{what}: expected {expected} entries, got {got}")]
    Length { what: &'static str, expected: usize, got: usize },
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Receiver(#[from] ReceiverError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossSample {
    pub distance_m: f64,
    pub path_loss_db: f64,
    #[serde(default)]
    pub run_id: u32,
    #[serde(default)]
    pub timestamp_s: f64,
}

/// PL = EIRP + g_rx − received omni power. "No signal" captures give no sample.
pub fn path_loss_from_capture(tx_eirp_dbm: f64, omni_power: TotalPower, g_rx_dbi: f64) -> Option<f64> {
    omni_power.dbm().map(|p| tx_eirp_dbm + g_rx_dbi - p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InterceptMode {
    /// Slope and intercept both fitted.
    #[default]
    Free,
    /// Intercept fixed at free-space loss at d0.
    FreeSpaceAnchored { f_ghz_millis: u64 },
}

impl InterceptMode {
    pub fn anchored(f_ghz: f64) -> Self {
        InterceptMode::FreeSpaceAnchored { f_ghz_millis: (f_ghz * 1000.0).round() as u64 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossFit {
    pub ple: f64,
    pub sigma_s_db: f64,
    pub intercept_at_d0_db: f64,
    pub d0_m: f64,
    pub n_samples: usize,
}

impl PathLossFit {
    pub fn predict_db(&self, d_m: f64) -> f64 {
        self.intercept_at_d0_db + 10.0 * self.ple * (d_m / self.d0_m).log10()
    }
}

/// Least squares of PL against 10·log10(d/d0) with a free intercept.
pub fn fit_path_loss(samples: &[PathLossSample], d0_m: f64) -> Result<PathLossFit, AnalysisError> {
    fit_path_loss_with(samples, d0_m, InterceptMode::Free)
}

/// Least squares of PL against x = 10·log10(d/d0); PLE is the slope.
/// Shadow fading uses the n − 2 residual denominator for a free intercept
/// (n − 1 when anchored); with exactly two samples it is 0.
pub fn fit_path_loss_with(samples: &[PathLossSample], d0_m: f64, mode: InterceptMode) -> Result<PathLossFit, AnalysisError> {
    if !(d0_m > 0.0) {
        return Err(AnalysisError::InvalidSample(format!("d0 = {d0_m}")));
    }
    let min = match mode {
        InterceptMode::Free => 2,
        InterceptMode::FreeSpaceAnchored { .. } => 1,
    };
    if samples.len() < min {
        return Err(AnalysisError::TooFewSamples { needed: min, got: samples.len() });
    }
    for s in samples {
        if !(s.distance_m > 0.0) || !s.path_loss_db.is_finite() {
            return Err(AnalysisError::InvalidSample(format!("{s:?}")));
        }
    }
    let x: Vec<f64> = samples.iter().map(|s| 10.0 * (s.distance_m / d0_m).log10()).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.path_loss_db).collect();
    let n = x.len() as f64;

    let (slope, intercept, dof) = match mode {
        InterceptMode::Free => {
            let mx = x.iter().sum::<f64>() / n;
            let my = y.iter().sum::<f64>() / n;
            let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
            if sxx <= 1e-12 * n {
                return Err(AnalysisError::DegenerateDistances);
            }
            let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
            let slope = sxy / sxx;
            (slope, my - slope * mx, samples.len().saturating_sub(2))
        }
        InterceptMode::FreeSpaceAnchored { f_ghz_millis } => {
            let a = fspl_db(d0_m, f_ghz_millis as f64 / 1000.0, 0.0, 0.0)?;
            let sxx: f64 = x.iter().map(|v| v * v).sum();
            if sxx <= 0.0 {
                return Err(AnalysisError::DegenerateDistances);
            }
            let sxy: f64 = x.iter().zip(&y).map(|(a_, b)| a_ * (b - a)).sum();
            (sxy / sxx, a, samples.len() - 1)
        }
    };
    let rss: f64 = x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let sigma = if dof == 0 { 0.0 } else { (rss / dof as f64).sqrt() };
    Ok(PathLossFit { ple: slope, sigma_s_db: sigma, intercept_at_d0_db: intercept, d0_m, n_samples: samples.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PadpAxis {
    Azimuth,
    Elevation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    /// Rows azimuth, columns elevation, cells total beam power.
    Pap,
    /// Rows angle along the axis, columns delay.
    Padp(PadpAxis),
}

/// Angular (and delay) power grid. `None` cells are absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PadpGrid {
    pub kind: GridKind,
    /// Row axis in degrees.
    pub angles_deg: Vec<f64>,
    /// Column axis: elevation degrees for a PAP, delay ns for a PADP.
    pub columns: Vec<f64>,
    pub power_mw: Vec<Vec<Option<f64>>>,
    /// Beams of the table with no PDP supplied.
    pub missing_beams: Vec<u16>,
}

impl PadpGrid {
    pub fn power_dbm(&self, row: usize, col: usize) -> Option<f64> {
        self.power_mw[row][col].map(mw_to_dbm)
    }

    pub fn is_empty(&self) -> bool {
        self.angles_deg.is_empty()
    }

    /// Row and column of the strongest cell.
    pub fn argmax(&self) -> Option<(usize, usize)> {
        let mut best: Option<((usize, usize), f64)> = None;
        for (r, row) in self.power_mw.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                if let Some(v) = v {
                    if best.map_or(true, |(_, b)| *v > b) {
                        best = Some(((r, c), *v));
                    }
                }
            }
        }
        best.map(|(rc, _)| rc)
    }

    pub fn column_label(&self) -> &'static str {
        match self.kind {
            GridKind::Pap => "el_deg",
            GridKind::Padp(_) => "delay_ns",
        }
    }

    pub fn row_label(&self) -> &'static str {
        match self.kind {
            GridKind::Pap | GridKind::Padp(PadpAxis::Azimuth) => "az_deg",
            GridKind::Padp(PadpAxis::Elevation) => "el_deg",
        }
    }
}

/// Angle key with enough resolution to merge identical pointings.
fn key(deg: f64) -> i64 {
    (deg * 1e6).round() as i64
}

fn index_beams<'a>(beam_pdps: &'a [Pdp], beams: &[BeamDefinition]) -> Result<(Vec<(&'a Pdp, BeamDefinition)>, Vec<u16>), AnalysisError> {
    let mut pairs = Vec::with_capacity(beam_pdps.len());
    for p in beam_pdps {
        let b = beams.iter().find(|b| b.beam_id == p.meta.beam_id).ok_or(AnalysisError::UnknownBeam(p.meta.beam_id))?;
        pairs.push((p, *b));
    }
    let missing = beams.iter().filter(|b| !beam_pdps.iter().any(|p| p.meta.beam_id == b.beam_id)).map(|b| b.beam_id).collect();
    Ok((pairs, missing))
}

fn axis_values(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let m: BTreeMap<i64, f64> = values.map(|v| (key(v), v)).collect();
    m.into_values().collect()
}

/// Power-angular profile: total power of each beam at its pointing.
pub fn build_pap(beam_pdps: &[Pdp], beams: &[BeamDefinition]) -> Result<PadpGrid, AnalysisError> {
    let (pairs, missing) = index_beams(beam_pdps, beams)?;
    let az = axis_values(beams.iter().map(|b| b.pointing.az_deg));
    let el = axis_values(beams.iter().map(|b| b.pointing.el_deg));
    let mut power_mw = vec![vec![None; el.len()]; az.len()];
    for (p, b) in pairs {
        let r = az.iter().position(|a| key(*a) == key(b.pointing.az_deg)).expect("axis built from table");
        let c = el.iter().position(|e| key(*e) == key(b.pointing.el_deg)).expect("axis built from table");
        if let TotalPower::Dbm(v) = total_power_dbm(p) {
            *power_mw[r][c].get_or_insert(0.0) += dbm_to_mw(v);
        }
    }
    Ok(PadpGrid { kind: GridKind::Pap, angles_deg: az, columns: el, power_mw, missing_beams: missing })
}

/// Power-angular-delay profile along one axis: PDPs of beams sharing that
/// pointing angle are summed linearly over the other axis.
pub fn build_padp(beam_pdps: &[Pdp], beams: &[BeamDefinition], axis: PadpAxis) -> Result<PadpGrid, AnalysisError> {
    let kind = GridKind::Padp(axis);
    let Some(first) = beam_pdps.first() else {
        return Ok(PadpGrid { kind, angles_deg: Vec::new(), columns: Vec::new(), power_mw: Vec::new(), missing_beams: Vec::new() });
    };
    let len = first.len();
    if beam_pdps.iter().any(|p| p.len() != len || (p.tap_spacing_s - first.tap_spacing_s).abs() > 1e-15) {
        return Err(AnalysisError::MixedGeometry);
    }
    let (pairs, missing) = index_beams(beam_pdps, beams)?;
    let angle = |b: &BeamDefinition| match axis {
        PadpAxis::Azimuth => b.pointing.az_deg,
        PadpAxis::Elevation => b.pointing.el_deg,
    };
    let angles = axis_values(beams.iter().map(angle));
    let mut power_mw = vec![vec![None; len]; angles.len()];
    for (p, b) in pairs {
        let r = angles.iter().position(|a| key(*a) == key(angle(&b))).expect("axis built from table");
        for (bin, v) in p.taps_mw.iter().enumerate() {
            if let Some(v) = v {
                *power_mw[r][bin].get_or_insert(0.0) += v;
            }
        }
    }
    let columns = (0..len).map(|i| first.delay_ns(i)).collect();
    Ok(PadpGrid { kind, angles_deg: angles, columns, power_mw, missing_beams: missing })
}

/// Per-bin temporal median of a profile series; absent taps count as zero.
pub fn background_median<P: PowerProfile>(series: &[P]) -> Vec<f64> {
    let len = series.first().map_or(0, |p| p.taps_mw().len());
    (0..len)
        .map(|bin| {
            let mut v: Vec<f64> = series.iter().map(|p| p.taps_mw().get(bin).copied().flatten().unwrap_or(0.0)).collect();
            v.sort_by(f64::total_cmp);
            let m = v.len() / 2;
            if v.len() % 2 == 1 {
                v[m]
            } else {
                0.5 * (v[m - 1] + v[m])
            }
        })
        .collect()
}

/// Power above the background, floored at zero, per bin.
pub fn residual_mw(profile: &impl PowerProfile, background: &[f64]) -> Vec<f64> {
    profile.taps_mw().iter().zip(background).map(|(p, b)| (p.unwrap_or(0.0) - b).max(0.0)).collect()
}

/// Default prominence for [`residual_peak_trace`]: pure-noise bins reach
/// 6 dB above the weakest retained tap with negligible probability.
pub const DEFAULT_PROMINENCE_DB: f64 = 6.0;

/// Delay (s) of the most prominent background-subtracted bin of each
/// snapshot, `None` when nothing stands `min_prominence_db` above the
/// background.
///
/// Bins are ranked by residual relative to their own background plus the
/// weakest retained tap of the series, so a strong static path whose noise
/// fluctuates by more than a weak mover's power does not mask it.
pub fn residual_peak_trace<P: PowerProfile>(series: &[P], min_prominence_db: f64) -> Vec<Option<f64>> {
    let bg = background_median(series);
    let floor = series
        .iter()
        .flat_map(|p| p.taps_mw().iter().flatten().copied())
        .fold(f64::INFINITY, f64::min);
    let min_score = 10f64.powf(min_prominence_db / 10.0);
    series
        .iter()
        .map(|p| {
            let r = residual_mw(p, &bg);
            let (i, v) = r
                .iter()
                .zip(&bg)
                .map(|(r, b)| r / (b + floor))
                .enumerate()
                .fold((0, 0.0), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
            (v > 0.0 && v >= min_score).then(|| i as f64 * p.tap_spacing_s())
        })
        .collect()
}

/// Target power per snapshot: background-subtracted power within
/// `expected_delay ± window`, with the background the per-bin temporal median.
pub fn isolate_target<P: PowerProfile>(series: &[P], expected_delay_s: &[f64], window_s: f64) -> Result<Vec<TotalPower>, AnalysisError> {
    if series.len() != expected_delay_s.len() {
        return Err(AnalysisError::Length { what: "expected delays", expected: series.len(), got: expected_delay_s.len() });
    }
    let Some(first) = series.first() else {
        return Ok(Vec::new());
    };
    let spacing = first.tap_spacing_s();
    let len = first.taps_mw().len();
    if window_s < spacing {
        return Err(AnalysisError::WindowTooSmall { window_s, spacing_s: spacing });
    }
    if series.iter().any(|p| p.taps_mw().len() != len || (p.tap_spacing_s() - spacing).abs() > 1e-15) {
        return Err(AnalysisError::MixedGeometry);
    }
    let bg = background_median(series);
    Ok(series
        .iter()
        .zip(expected_delay_s)
        .map(|(p, &tau)| {
            let r = residual_mw(p, &bg);
            let lo = ((tau - window_s) / spacing).ceil().max(0.0) as usize;
            let hi = (((tau + window_s) / spacing).floor().max(0.0) as usize).min(len.saturating_sub(1));
            let sum: f64 = if lo <= hi { r[lo..=hi].iter().sum() } else { 0.0 };
            TotalPower::from_mw(sum)
        })
        .collect())
}

/// Thresholded beam PDPs of one snapshot and their omni synthesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessedSnapshot {
    pub snapshot: u64,
    pub timestamp_s: f64,
    pub beam_pdps: Vec<Pdp>,
    pub omni: OmniPdp,
}

/// Correlated records to thresholded PDPs, grouped by snapshot.
pub fn process_recording(rec: &Recording, margin_db: f64) -> Result<Vec<ProcessedSnapshot>, AnalysisError> {
    let spacing = rec.header.config.tap_spacing_s();
    rec.by_snapshot()
        .into_iter()
        .enumerate()
        .filter(|(_, group)| !group.is_empty())
        .map(|(s, group)| {
            let beam_pdps = group
                .iter()
                .map(|r| noise_threshold(&pdp_from_cir(&r.to_cir(spacing)), margin_db))
                .collect::<Result<Vec<_>, _>>()?;
            let omni = synthesize_omni_pdp(&beam_pdps)?;
            Ok(ProcessedSnapshot { snapshot: s as u64, timestamp_s: omni.timestamp_s, beam_pdps, omni })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RcsEstimates {
    pub gamma_dbsm: Vec<f64>,
    /// Snapshots dropped for lack of signal.
    pub excluded: usize,
}

/// Inverts PL_t = PL_1 − G_s + PL_2 per snapshot with
/// PL_t = EIRP − target power and antenna gains folded into PL_1 / PL_2.
pub fn estimate_rcs(
    target_powers: &[TotalPower],
    geometry: &[SensingGeometry],
    f_ghz: f64,
    tx_eirp_dbm: f64,
    g_tx_dbi: f64,
    g_rx_dbi: f64,
) -> Result<RcsEstimates, AnalysisError> {
    if target_powers.len() != geometry.len() {
        return Err(AnalysisError::Length { what: "geometry", expected: target_powers.len(), got: geometry.len() });
    }
    let g0 = scattering_gain_db(0.0, f_ghz)?;
    let mut out = RcsEstimates { gamma_dbsm: Vec::with_capacity(geometry.len()), excluded: 0 };
    for (p, g) in target_powers.iter().zip(geometry) {
        match p.dbm() {
            Some(p) => {
                let pl_t = tx_eirp_dbm - p;
                let pl1 = fspl_db(g.d1, f_ghz, g_tx_dbi, 0.0)?;
                let pl2 = fspl_db(g.d2, f_ghz, 0.0, g_rx_dbi)?;
                out.gamma_dbsm.push(pl1 + pl2 - pl_t - g0);
            }
            None => out.excluded += 1,
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RcsFit {
    pub mu_dbsm: f64,
    pub sigma_dbsm: f64,
    pub n_samples: usize,
    pub target_class: TargetClass,
    pub mode: SensingMode,
}

/// Sample mean and unbiased standard deviation.
pub fn fit_normal(gamma_dbsm: &[f64], target_class: TargetClass, mode: SensingMode) -> Result<RcsFit, AnalysisError> {
    let n = gamma_dbsm.len();
    if n < 2 {
        return Err(AnalysisError::TooFewSamples { needed: 2, got: n });
    }
    let mu = gamma_dbsm.iter().sum::<f64>() / n as f64;
    let var = gamma_dbsm.iter().map(|g| (g - mu).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok(RcsFit { mu_dbsm: mu, sigma_dbsm: var.sqrt(), n_samples: n, target_class, mode })
}

/// Receive gain assumed by the link budget when none is given.
pub const DEFAULT_LINK_G_RX_DBI: f64 = 15.0;
/// Minimum post-correlation SNR for a usable path.
pub const DEFAULT_SNR_MIN_DB: f64 = 3.0;

/// Largest measurable path loss:
/// EIRP + g_rx + processing gain − snr_min − noise floor − NF, where the noise
/// floor is thermal noise over the occupied bandwidth. The array noise figure
/// is used unless `g_rx_dbi` is 0 (omni).
pub fn link_budget(cfg: &SounderConfig, g_rx_dbi: f64, snr_min_db: f64) -> f64 {
    let nf = if g_rx_dbi == 0.0 { cfg.rx_noise_figure_omni_db } else { cfg.rx_noise_figure_array_db };
    link_budget_with_nf(cfg, g_rx_dbi, snr_min_db, nf)
}

pub fn link_budget_with_nf(cfg: &SounderConfig, g_rx_dbi: f64, snr_min_db: f64, noise_figure_db: f64) -> f64 {
    let floor = thermal_noise_dbm(cfg.occupied_bandwidth_hz()).0;
    cfg.tx_eirp_dbm + g_rx_dbi + cfg.processing_gain_db() - snr_min_db - floor - noise_figure_db
}
