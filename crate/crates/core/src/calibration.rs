//! The four calibration steps: TX flatness, RX flatness, incident power and
//! omni-versus-beam verification, plus simulated bench measurements.
//!
//! Steps are chained through typed intermediate results so step 3 can only be
//! run once steps 1 and 2 have produced their coefficients.

use std::collections::BTreeMap;

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{fspl_db, ChannelError};
use crate::config::SounderConfig;
use crate::receiver::{dbm_to_mw, mw_to_dbm, total_power_dbm, OmniPdp, Pdp, TotalPower};
use crate::rng::stream_rng;
use crate::units::linear_to_db;
use crate::waveform::TxFrame;

/// Largest per-bin correction step 1 may apply, either direction.
pub const TX_REACH_DB: f64 = 3.0;
/// Step 1 acceptance: residual ripple and mean power error.
pub const TX_RIPPLE_BOUND_DB: f64 = 1.0;
pub const TX_POWER_BOUND_DB: f64 = 1.0;
/// Step 2 is applied only when the RX response ripple exceeds this.
pub const RX_FLATNESS_TRIGGER_DB: f64 = 1.0;
pub const RX_RIPPLE_BOUND_DB: f64 = 1.0;
/// Cable bins weaker than this (linear magnitude) cannot be inverted.
pub const CABLE_MIN_MAGNITUDE: f64 = 1e-6;
pub const FAR_FIELD_MIN_M: f64 = 1.0;
pub const REFERENCE_DISTANCE_M: f64 = 3.0;
/// Step 4 pass bound on |omni synthesized − omni antenna|.
pub const OMNI_VS_BEAM_BOUND_DB: f64 = 0.2;
/// Horn gain the TX EIRP is quoted through.
pub const TX_ANTENNA_GAIN_DBI: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalError {
    #[error("expected {expected} subcarriers, got {got}")]
    Length { expected: usize, got: usize },
    #[error("target unreachable within ±{reach_db} dB at {} subcarrier(s), first {:?}", bins.len(), bins.first())]
    Unreachable { reach_db: f64, bins: Vec<usize> },
    #[error("cable response near zero at {} subcarrier(s)", .0.len())]
    CableNearZero(Vec<usize>),
    #[error("reference distance {0} m inside far-field limit {FAR_FIELD_MIN_M} m")]
    NearField(f64),
    #[error("no dominant tap above the noise threshold")]
    NoDominantTap,
    #[error("{0} has no signal")]
    NoSignal(&'static str),
    #[error("face power matrix is singular or gives non-positive gains")]
    Singular,
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Per-subcarrier correction for one port.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalCoefficients {
    port_id: u16,
    coefficients: Vec<Complex64>,
    derived_at_s: f64,
    residual_ripple_db: f64,
    power_error_db: f64,
}

impl CalCoefficients {
    /// Identity coefficients.
    pub fn unity(port_id: u16, len: usize) -> Self {
        Self {
            port_id,
            coefficients: vec![Complex64::new(1.0, 0.0); len],
            derived_at_s: 0.0,
            residual_ripple_db: 0.0,
            power_error_db: 0.0,
        }
    }

    pub fn port_id(&self) -> u16 {
        self.port_id
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn derived_at_s(&self) -> f64 {
        self.derived_at_s
    }

    pub fn with_timestamp(mut self, t: f64) -> Self {
        self.derived_at_s = t;
        self
    }

    /// Peak-to-peak ripple of the corrected response, dB.
    pub fn residual_ripple_db(&self) -> f64 {
        self.residual_ripple_db
    }

    pub fn power_error_db(&self) -> f64 {
        self.power_error_db
    }

    pub fn is_unity(&self, tol: f64) -> bool {
        self.coefficients.iter().all(|c| (c - Complex64::new(1.0, 0.0)).norm() <= tol)
    }
}

/// Peak-to-peak spread of a dB series.
pub fn ripple_db(values_db: &[f64]) -> f64 {
    let (lo, hi) = values_db.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if values_db.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

fn magnitude_db(values: &[Complex64]) -> Vec<f64> {
    values.iter().map(|v| 20.0 * v.norm().log10()).collect()
}

/// Step 1: real per-subcarrier coefficients bringing every bin of the port
/// spectrum to (target EIRP − antenna gain) spread evenly over the subcarriers.
pub fn cal_tx_flatness(
    measured_spectrum_dbm: &[f64],
    target_eirp_dbm: f64,
    antenna_gain_dbi: f64,
) -> Result<CalCoefficients, CalError> {
    let l = measured_spectrum_dbm.len();
    if l == 0 {
        return Err(CalError::Length { expected: 1, got: 0 });
    }
    let port_target = target_eirp_dbm - antenna_gain_dbi;
    let per_bin = port_target - linear_to_db(l as f64);
    let steps: Vec<f64> = measured_spectrum_dbm.iter().map(|m| per_bin - m).collect();
    let bad: Vec<usize> = steps.iter().enumerate().filter(|(_, s)| s.abs() > TX_REACH_DB).map(|(i, _)| i).collect();
    if !bad.is_empty() {
        return Err(CalError::Unreachable { reach_db: TX_REACH_DB, bins: bad });
    }
    let coefficients: Vec<Complex64> = steps.iter().map(|s| Complex64::new(10f64.powf(s / 20.0), 0.0)).collect();
    let corrected: Vec<f64> = measured_spectrum_dbm.iter().zip(&steps).map(|(m, s)| m + s).collect();
    let total = mw_to_dbm(corrected.iter().map(|d| dbm_to_mw(*d)).sum());
    Ok(CalCoefficients {
        port_id: 0,
        coefficients,
        derived_at_s: 0.0,
        residual_ripple_db: ripple_db(&corrected),
        power_error_db: total - port_target,
    })
}

/// Step 2: flatness-only RX correction, ḡ/r_k with r = rx / cable and ḡ the
/// log-average magnitude of r. The flat level ḡ is left for step 3 and
/// reported as `power_error_db`.
pub fn cal_rx_flatness(rx_spectrum: &[Complex64], cable_response: &[Complex64]) -> Result<CalCoefficients, CalError> {
    if rx_spectrum.len() != cable_response.len() || rx_spectrum.is_empty() {
        return Err(CalError::Length { expected: cable_response.len(), got: rx_spectrum.len() });
    }
    let weak: Vec<usize> = cable_response
        .iter()
        .chain(rx_spectrum)
        .enumerate()
        .filter(|(_, c)| !(c.norm() >= CABLE_MIN_MAGNITUDE))
        .map(|(i, _)| i % cable_response.len())
        .collect();
    if !weak.is_empty() {
        return Err(CalError::CableNearZero(weak));
    }
    let r: Vec<Complex64> = rx_spectrum.iter().zip(cable_response).map(|(x, c)| x / c).collect();
    let level = (r.iter().map(|v| v.norm().ln()).sum::<f64>() / r.len() as f64).exp();
    let coefficients: Vec<Complex64> = r.iter().map(|v| level / v).collect();
    let corrected: Vec<Complex64> = r.iter().zip(&coefficients).map(|(a, b)| a * b).collect();
    Ok(CalCoefficients {
        port_id: 0,
        coefficients,
        derived_at_s: 0.0,
        residual_ripple_db: ripple_db(&magnitude_db(&corrected)),
        power_error_db: 20.0 * level.log10(),
    })
}

/// Peak-to-peak ripple of an RX response before correction, dB.
pub fn rx_response_ripple_db(rx_spectrum: &[Complex64], cable_response: &[Complex64]) -> f64 {
    let r: Vec<Complex64> = rx_spectrum.iter().zip(cable_response).map(|(x, c)| x / c).collect();
    ripple_db(&magnitude_db(&r))
}

/// Expected incident power at `d_ref` from a 0 dBi receive antenna.
pub fn expected_incident_dbm(d_ref_m: f64, f_ghz: f64, tx_eirp_dbm: f64) -> Result<f64, CalError> {
    Ok(tx_eirp_dbm - fspl_db(d_ref_m, f_ghz, 0.0, 0.0)?)
}

/// Step 3: offset that makes the measured LOS power equal the expected
/// incident power. The LOS power is the total retained power of the
/// thresholded LOS-dominant PDP, which stays exact when the path falls
/// between delay bins.
pub fn cal_incident_power(measured_pdp: &Pdp, d_ref_m: f64, f_ghz: f64, tx_eirp_dbm: f64) -> Result<f64, CalError> {
    if !(d_ref_m > FAR_FIELD_MIN_M) {
        return Err(CalError::NearField(d_ref_m));
    }
    let expected = expected_incident_dbm(d_ref_m, f_ghz, tx_eirp_dbm)?;
    if measured_pdp.threshold.is_none() || measured_pdp.taps_mw[measured_pdp.peak_bin()].is_none() {
        return Err(CalError::NoDominantTap);
    }
    match total_power_dbm(measured_pdp) {
        TotalPower::Dbm(p) => Ok(expected - p),
        TotalPower::NoSignal => Err(CalError::NoDominantTap),
    }
}

/// Per-face offsets (dB) for an array receiver. Row f of `face_power_mw` holds
/// the summed, scan-loss de-embedded beam power of every face while face f
/// points at the reference transmitter; the solution makes each of these four
/// sums equal `incident_mw`.
pub fn cal_array_faces(face_power_mw: &[[f64; 4]; 4], incident_mw: f64) -> Result<[f64; 4], CalError> {
    let m = Matrix4::from_fn(|r, c| face_power_mw[r][c]);
    let b = Vector4::repeat(incident_mw);
    let x = m.lu().solve(&b).ok_or(CalError::Singular)?;
    if x.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(CalError::Singular);
    }
    Ok([0, 1, 2, 3].map(|i| linear_to_db(x[i])))
}

/// Step 4: synthesized total power minus the omni-antenna total, dB.
pub fn verify_omni_vs_beams(omni: &OmniPdp, reference_omni: &Pdp) -> Result<f64, CalError> {
    let synth = total_power_dbm(omni).dbm().ok_or(CalError::NoSignal("beam synthesis"))?;
    let reference = total_power_dbm(reference_omni).dbm().ok_or(CalError::NoSignal("omni reference"))?;
    Ok(synth - reference)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub step: u8,
    pub name: String,
    pub passed: bool,
    pub metrics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl StepReport {
    fn new(step: u8, name: &str, passed: bool, metrics: &[(&str, f64)]) -> Self {
        Self {
            step,
            name: name.into(),
            passed,
            metrics: metrics.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            reason: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CalReport {
    pub steps: Vec<StepReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omni_vs_beam_delta_db: Option<f64>,
}

impl CalReport {
    pub fn passed(&self) -> bool {
        !self.steps.is_empty() && self.steps.iter().all(|s| s.passed)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Corrections for one receive port.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortCorrection {
    pub array_id: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flatness: Option<CalCoefficients>,
    pub offset_db: f64,
}

/// Everything the simulator and processing need to undo the front end.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SystemCalibration {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx: Option<CalCoefficients>,
    #[serde(default)]
    pub ports: Vec<PortCorrection>,
    /// Beam powers are referred back to boresight by adding each beam's scan loss.
    #[serde(default)]
    pub deembed_scan_loss: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<CalReport>,
}

impl SystemCalibration {
    pub fn port(&self, array_id: u8) -> Option<&PortCorrection> {
        self.ports.iter().find(|p| p.array_id == array_id)
    }
}

/// Result of step 1, required to start step 2.
#[derive(Debug, Clone, PartialEq)]
pub struct TxFlatnessDone {
    pub coefficients: CalCoefficients,
    pub report: StepReport,
}

/// Result of steps 1–2, required to start step 3.
#[derive(Debug, Clone, PartialEq)]
pub struct RxFlatnessDone {
    pub tx: TxFlatnessDone,
    pub ports: Vec<PortCorrection>,
    pub report: StepReport,
}

/// Result of steps 1–3.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidentPowerDone {
    pub calibration: SystemCalibration,
    pub reports: Vec<StepReport>,
}

pub fn step1_tx_flatness(
    measured_spectrum_dbm: &[f64],
    target_eirp_dbm: f64,
    antenna_gain_dbi: f64,
) -> Result<TxFlatnessDone, CalError> {
    let coefficients = cal_tx_flatness(measured_spectrum_dbm, target_eirp_dbm, antenna_gain_dbi)?;
    let ripple = coefficients.residual_ripple_db();
    let err = coefficients.power_error_db();
    let report = StepReport::new(
        1,
        "tx_flatness",
        ripple <= TX_RIPPLE_BOUND_DB && err.abs() <= TX_POWER_BOUND_DB,
        &[("residual_ripple_db", ripple), ("power_error_db", err)],
    );
    Ok(TxFlatnessDone { coefficients, report })
}

/// One RX port's loopback measurement for step 2.
#[derive(Debug, Clone, PartialEq)]
pub struct RxLoopback {
    pub array_id: u8,
    pub rx_spectrum: Vec<Complex64>,
    pub cable_response: Vec<Complex64>,
}

impl TxFlatnessDone {
    /// Step 2 on every port; coefficients are kept only where the response
    /// ripple exceeds the trigger.
    pub fn rx_flatness(self, loopbacks: &[RxLoopback]) -> Result<RxFlatnessDone, CalError> {
        let mut ports = Vec::with_capacity(loopbacks.len());
        let mut worst_before = 0.0f64;
        let mut worst_after = 0.0f64;
        for lb in loopbacks {
            let before = rx_response_ripple_db(&lb.rx_spectrum, &lb.cable_response);
            let mut c = cal_rx_flatness(&lb.rx_spectrum, &lb.cable_response)?;
            c.port_id = lb.array_id as u16;
            worst_before = worst_before.max(before);
            let flatness = if before > RX_FLATNESS_TRIGGER_DB {
                worst_after = worst_after.max(c.residual_ripple_db());
                Some(c)
            } else {
                worst_after = worst_after.max(before);
                None
            };
            ports.push(PortCorrection { array_id: lb.array_id, flatness, offset_db: 0.0 });
        }
        let report = StepReport::new(
            2,
            "rx_flatness",
            worst_after <= RX_RIPPLE_BOUND_DB,
            &[("ripple_before_db", worst_before), ("residual_ripple_db", worst_after)],
        );
        Ok(RxFlatnessDone { tx: self, ports, report })
    }
}

impl RxFlatnessDone {
    /// Calibration state to use while capturing the step-3 reference.
    pub fn partial_calibration(&self, deembed_scan_loss: bool) -> SystemCalibration {
        SystemCalibration {
            tx: Some(self.tx.coefficients.clone()),
            ports: self.ports.clone(),
            deembed_scan_loss,
            report: None,
        }
    }

    fn finish(self, offsets: &[(u8, f64)], deembed: bool, metrics: &[(&str, f64)]) -> IncidentPowerDone {
        let mut calibration = self.partial_calibration(deembed);
        for (id, off) in offsets {
            if let Some(p) = calibration.ports.iter_mut().find(|p| p.array_id == *id) {
                p.offset_db = *off;
            }
        }
        let step3 = StepReport::new(3, "incident_power", true, metrics);
        IncidentPowerDone { calibration, reports: vec![self.tx.report, self.report, step3] }
    }

    /// Step 3 for the omni port (array id 0).
    pub fn incident_power_omni(
        self,
        measured_pdp: &Pdp,
        d_ref_m: f64,
        f_ghz: f64,
        tx_eirp_dbm: f64,
    ) -> Result<IncidentPowerDone, CalError> {
        let offset = cal_incident_power(measured_pdp, d_ref_m, f_ghz, tx_eirp_dbm)?;
        Ok(self.finish(&[(0, offset)], false, &[("offset_db", offset), ("d_ref_m", d_ref_m)]))
    }

    /// Step 3 for a four-face array, one offset per face.
    pub fn incident_power_array(
        self,
        face_power_mw: &[[f64; 4]; 4],
        d_ref_m: f64,
        f_ghz: f64,
        tx_eirp_dbm: f64,
    ) -> Result<IncidentPowerDone, CalError> {
        if !(d_ref_m > FAR_FIELD_MIN_M) {
            return Err(CalError::NearField(d_ref_m));
        }
        let incident = dbm_to_mw(expected_incident_dbm(d_ref_m, f_ghz, tx_eirp_dbm)?);
        let off = cal_array_faces(face_power_mw, incident)?;
        let offsets: Vec<(u8, f64)> = (0..4u8).map(|f| (f, off[f as usize])).collect();
        Ok(self.finish(
            &offsets,
            true,
            &[
                ("face0_offset_db", off[0]),
                ("face1_offset_db", off[1]),
                ("face2_offset_db", off[2]),
                ("face3_offset_db", off[3]),
                ("d_ref_m", d_ref_m),
            ],
        ))
    }
}

impl IncidentPowerDone {
    /// Step 4 and the final report.
    pub fn verify(self, omni: &OmniPdp, reference_omni: &Pdp) -> (SystemCalibration, CalReport) {
        let mut report = CalReport { steps: self.reports, omni_vs_beam_delta_db: None };
        let step4 = match verify_omni_vs_beams(omni, reference_omni) {
            Ok(d) => {
                report.omni_vs_beam_delta_db = Some(d);
                StepReport::new(4, "omni_vs_beams", d.abs() <= OMNI_VS_BEAM_BOUND_DB, &[("delta_db", d)])
            }
            Err(e) => StepReport { reason: Some(e.to_string()), ..StepReport::new(4, "omni_vs_beams", false, &[]) },
        };
        report.steps.push(step4);
        let mut cal = self.calibration;
        cal.report = Some(report.clone());
        (cal, report)
    }

    /// Finalizes without step 4 (omni-only receivers).
    pub fn finish_without_beams(self) -> (SystemCalibration, CalReport) {
        let report = CalReport { steps: self.reports, omni_vs_beam_delta_db: None };
        let mut cal = self.calibration;
        cal.report = Some(report.clone());
        (cal, report)
    }
}

/// Port spectrum a spectrum analyzer would read for `frame`, dBm per subcarrier.
pub fn measure_tx_spectrum(frame: &TxFrame, tx_ripple: &[Complex64], cfg: &SounderConfig, antenna_gain_dbi: f64) -> Vec<f64> {
    let per_bin = cfg.tx_eirp_dbm - antenna_gain_dbi - linear_to_db(cfg.zc_length as f64);
    frame
        .freq_domain_reference
        .iter()
        .zip(tx_ripple)
        .map(|(x, r)| per_bin + 20.0 * (x * r).norm().log10())
        .collect()
}

/// Known cable network: about 20 dB of loss with a gentle tilt and 3 ns of delay.
pub fn cable_response(cfg: &SounderConfig, seed: u64) -> Vec<Complex64> {
    use rand::Rng;
    let mut rng = stream_rng(seed, &[0xCAB1E]);
    let tilt_db: f64 = rng.gen_range(-0.5..0.5);
    let freqs = crate::signal::subcarrier_frequencies(cfg);
    let half = cfg.occupied_bandwidth_hz() / 2.0;
    freqs
        .iter()
        .map(|f| {
            let db = -20.0 + tilt_db * f / half;
            Complex64::from_polar(10f64.powf(db / 20.0), -2.0 * std::f64::consts::PI * f * 3e-9)
        })
        .collect()
}

/// Loopback spectrum at an RX port, normalized by the nominal ZC (what the
/// correlator sees before its inverse transform).
pub fn measure_rx_loopback(
    frame: &TxFrame,
    tx_ripple: &[Complex64],
    rx_ripple: &[Complex64],
    rx_gain_offset_db: f64,
    cable: &[Complex64],
) -> Vec<Complex64> {
    let g = 10f64.powf(rx_gain_offset_db / 20.0);
    (0..frame.zc.values.len())
        .map(|i| frame.freq_domain_reference[i] / frame.zc.values[i] * tx_ripple[i] * cable[i] * rx_ripple[i] * g)
        .collect()
}
