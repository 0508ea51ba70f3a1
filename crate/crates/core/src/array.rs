//! Four-face phased-array receiver: beam grid, Gaussian beam pattern with scan
//! loss, and the per-face beam scan schedule.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{Direction, PathTap};
use crate::config::{BandPlan, SounderConfig};
use crate::units::wrap_deg;

/// Beam id used for the omni antenna in schedules and recordings.
pub const OMNI_BEAM: u16 = 0xFFFF;

pub const N_FACES: usize = 4;
/// Face field of view: ±45° azimuth about boresight, ±32.5° elevation.
pub const FACE_HALF_AZ_DEG: f64 = 45.0;
pub const FIELD_HALF_EL_DEG: f64 = 32.5;
pub const BEAM_COLUMNS: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArrayError {
    #[error("band {0} GHz has no phased arrays (omni only)")]
    OmniOnly(f64),
    #[error("unsupported beam count {0} per array")]
    BeamCount(u32),
    #[error("guard time must be >= 0, got {0}")]
    NegativeGuard(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayFace {
    pub face_id: u8,
    pub boresight_azimuth_deg: f64,
}

pub fn faces() -> [ArrayFace; N_FACES] {
    [0u8, 1, 2, 3].map(|f| ArrayFace { face_id: f, boresight_azimuth_deg: 90.0 * f as f64 })
}

/// Beam pattern constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternModel {
    /// Added to 10·log10(elements) to get the peak gain.
    pub element_factor_db: f64,
    /// 3 dB beamwidth as a multiple of the grid spacing.
    pub beamwidth_factor: f64,
    /// Sidelobe floor relative to the beam's on-axis gain.
    pub sidelobe_rel_db: f64,
    /// Scan loss reaches this value on the reference ellipse and is clamped there.
    pub max_scan_loss_db: f64,
    pub scan_ref_az_deg: f64,
    pub scan_ref_el_deg: f64,
}

impl Default for PatternModel {
    fn default() -> Self {
        Self {
            element_factor_db: 5.0,
            beamwidth_factor: 1.5,
            sidelobe_rel_db: -20.0,
            max_scan_loss_db: 6.0,
            scan_ref_az_deg: 60.0,
            scan_ref_el_deg: 45.0,
        }
    }
}

impl PatternModel {
    /// 6 dB × ((az/60)² + (el/45)²), clamped to 6 dB.
    pub fn scan_loss_db(&self, az_off_deg: f64, el_off_deg: f64) -> f64 {
        let r2 = (az_off_deg / self.scan_ref_az_deg).powi(2) + (el_off_deg / self.scan_ref_el_deg).powi(2);
        (self.max_scan_loss_db * r2).min(self.max_scan_loss_db)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamDefinition {
    pub beam_id: u16,
    pub face_id: u8,
    /// Pointing in the platform frame.
    pub pointing: Direction,
    pub beamwidth_az_deg: f64,
    pub beamwidth_el_deg: f64,
    pub peak_gain_dbi: f64,
    pub model: PatternModel,
}

impl BeamDefinition {
    pub fn face(&self) -> ArrayFace {
        faces()[self.face_id as usize]
    }

    /// Pointing offset from the face boresight (azimuth, elevation).
    pub fn scan_offset(&self) -> (f64, f64) {
        (wrap_deg(self.pointing.az_deg - self.face().boresight_azimuth_deg), self.pointing.el_deg)
    }

    pub fn scan_loss_db(&self) -> f64 {
        let (a, e) = self.scan_offset();
        self.model.scan_loss_db(a, e)
    }

    /// Gain in the pointing direction: peak gain less scan loss.
    pub fn on_axis_gain_dbi(&self) -> f64 {
        self.peak_gain_dbi - self.scan_loss_db()
    }

    pub fn sidelobe_floor_dbi(&self) -> f64 {
        self.on_axis_gain_dbi() + self.model.sidelobe_rel_db
    }
}

/// Beams for all four faces, or an error for the omni-only band.
pub fn build_beam_table(band: &BandPlan) -> Result<Vec<BeamDefinition>, ArrayError> {
    build_beam_table_with(band, PatternModel::default())
}

pub fn build_beam_table_with(band: &BandPlan, model: PatternModel) -> Result<Vec<BeamDefinition>, ArrayError> {
    if band.beams_per_array == 0 {
        return Err(ArrayError::OmniOnly(band.center_ghz()));
    }
    let per_face = band.beams_per_array as usize;
    if per_face % BEAM_COLUMNS != 0 {
        return Err(ArrayError::BeamCount(band.beams_per_array));
    }
    let rows = per_face / BEAM_COLUMNS;
    let az_step = 2.0 * FACE_HALF_AZ_DEG / BEAM_COLUMNS as f64;
    let el_step = 2.0 * FIELD_HALF_EL_DEG / rows as f64;
    let peak = 10.0 * (band.elements_per_array as f64).log10() + model.element_factor_db;

    let mut beams = Vec::with_capacity(per_face * N_FACES);
    for face in faces() {
        for r in 0..rows {
            for c in 0..BEAM_COLUMNS {
                let az_rel = -FACE_HALF_AZ_DEG + az_step * (c as f64 + 0.5);
                let el = -FIELD_HALF_EL_DEG + el_step * (r as f64 + 0.5);
                beams.push(BeamDefinition {
                    beam_id: beams.len() as u16,
                    face_id: face.face_id,
                    pointing: Direction::new(wrap_deg(face.boresight_azimuth_deg + az_rel), el),
                    beamwidth_az_deg: model.beamwidth_factor * az_step,
                    beamwidth_el_deg: model.beamwidth_factor * el_step,
                    peak_gain_dbi: peak,
                    model,
                });
            }
        }
    }
    Ok(beams)
}

/// Gaussian mainlobe: −12·((Δaz/bw_az)² + (Δel/bw_el)²) dB about the on-axis
/// gain, so an offset of half a beamwidth costs 3 dB, floored at the sidelobe level.
pub fn beam_gain_db(beam: &BeamDefinition, direction: Direction) -> f64 {
    let d_az = wrap_deg(direction.az_deg - beam.pointing.az_deg);
    let d_el = direction.el_deg - beam.pointing.el_deg;
    let mainlobe = beam.on_axis_gain_dbi()
        - 12.0 * ((d_az / beam.beamwidth_az_deg).powi(2) + (d_el / beam.beamwidth_el_deg).powi(2));
    mainlobe.max(beam.sidelobe_floor_dbi())
}

/// Converts a global direction into the frame of a platform rotated by `orientation_deg`.
pub fn to_platform_frame(dir: Direction, orientation_deg: f64) -> Direction {
    Direction::new(wrap_deg(dir.az_deg - orientation_deg), dir.el_deg)
}

pub fn effective_rx_gain_db(beam: &BeamDefinition, tap: &PathTap) -> f64 {
    beam_gain_db(beam, tap.aoa)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub time_offset_s: f64,
    pub face_id: u8,
    pub beam_id: u16,
    pub dwell_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSchedule {
    pub entries: Vec<ScheduleEntry>,
    pub total_duration_s: f64,
    pub guard_s: f64,
}

impl ScanSchedule {
    /// A single omni capture of one frame.
    pub fn omni(cfg: &SounderConfig) -> Self {
        let dwell = cfg.frame_duration_s();
        Self {
            entries: vec![ScheduleEntry { time_offset_s: 0.0, face_id: 0, beam_id: OMNI_BEAM, dwell_s: dwell }],
            total_duration_s: dwell,
            guard_s: 0.0,
        }
    }

    pub fn is_omni(&self) -> bool {
        self.entries.iter().all(|e| e.beam_id == OMNI_BEAM)
    }

    /// True if no two entries on the same face overlap in time.
    pub fn faces_non_overlapping(&self) -> bool {
        (0..N_FACES as u8).all(|f| {
            let mut spans: Vec<(f64, f64)> = self
                .entries
                .iter()
                .filter(|e| e.face_id == f)
                .map(|e| (e.time_offset_s, e.time_offset_s + e.dwell_s))
                .collect();
            spans.sort_by(|a, b| a.0.total_cmp(&b.0));
            spans.windows(2).all(|w| w[1].0 >= w[0].1 - 1e-15)
        })
    }
}

/// Faces sweep their beams in parallel, one dwell of `n_repetitions` periods per beam.
pub fn build_scan_schedule(
    beams: &[BeamDefinition],
    cfg: &SounderConfig,
    guard_s: f64,
) -> Result<ScanSchedule, ArrayError> {
    if !(guard_s >= 0.0) {
        return Err(ArrayError::NegativeGuard(guard_s));
    }
    let dwell = cfg.frame_duration_s();
    let mut next = [0usize; N_FACES];
    let mut entries = Vec::with_capacity(beams.len());
    for b in beams {
        let slot = &mut next[b.face_id as usize];
        entries.push(ScheduleEntry {
            time_offset_s: *slot as f64 * (dwell + guard_s),
            face_id: b.face_id,
            beam_id: b.beam_id,
            dwell_s: dwell,
        });
        *slot += 1;
    }
    let per_face = next.iter().copied().max().unwrap_or(0);
    Ok(ScanSchedule { entries, total_duration_s: per_face as f64 * (dwell + guard_s), guard_s })
}
