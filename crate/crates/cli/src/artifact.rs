//! JSON artifacts written by the subcommands. Each file carries an
//! `artifact` tag so `export` can tell them apart.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sounder_core::analysis::{process_recording, PadpGrid, PathLossFit, PathLossSample, ProcessedSnapshot, RcsFit};
use sounder_core::calibration::{CalReport, SystemCalibration};
use sounder_core::campaign::ReceiverKind;
use sounder_core::channel::{SensingGeometry, SensingMode, TargetClass};
use sounder_core::export::{CsvTable, PathLossTable};
use sounder_core::recording::{read_recording, Recording, MAGIC};
use sounder_core::SounderConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProcessedFile {
    pub config: SounderConfig,
    pub receiver: ReceiverKind,
    pub margin_db: f64,
    pub snapshots: Vec<ProcessedSnapshot>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathLossReport {
    pub fit: PathLossFit,
    pub samples: Vec<PathLossSample>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetSample {
    pub snapshot: u64,
    pub timestamp_s: f64,
    pub expected_delay_s: f64,
    /// `None` when nothing above the background remained in the window.
    pub power_dbm: Option<f64>,
    pub geometry: SensingGeometry,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetSeries {
    pub f_ghz: f64,
    pub tx_eirp_dbm: f64,
    pub target_class: TargetClass,
    pub mode: SensingMode,
    pub window_s: f64,
    pub samples: Vec<TargetSample>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationFile {
    pub calibration: SystemCalibration,
    pub report: CalReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "artifact", rename_all = "snake_case")]
pub enum Artifact {
    Processed(ProcessedFile),
    PathLoss(PathLossReport),
    Grid(PadpGrid),
    Target(TargetSeries),
    RcsFit(RcsFit),
    Calibration(CalibrationFile),
}

impl Artifact {
    pub fn name(&self) -> &'static str {
        match self {
            Artifact::Processed(_) => "processed",
            Artifact::PathLoss(_) => "path_loss",
            Artifact::Grid(_) => "grid",
            Artifact::Target(_) => "target",
            Artifact::RcsFit(_) => "rcs_fit",
            Artifact::Calibration(_) => "calibration",
        }
    }
}

impl CsvTable for PathLossReport {
    fn header(&self) -> Vec<String> {
        PathLossTable { samples: &self.samples, fit: &self.fit }.header()
    }

    fn rows(&self) -> Vec<Vec<String>> {
        PathLossTable { samples: &self.samples, fit: &self.fit }.rows()
    }
}

impl CsvTable for TargetSeries {
    fn header(&self) -> Vec<String> {
        ["snapshot", "timestamp_s", "expected_delay_ns", "power_dbm"].map(String::from).to_vec()
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.samples
            .iter()
            .map(|s| {
                vec![
                    s.snapshot.to_string(),
                    format!("{}", s.timestamp_s),
                    format!("{}", s.expected_delay_s * 1e9),
                    s.power_dbm.map(|p| format!("{p}")).unwrap_or_default(),
                ]
            })
            .collect()
    }
}

pub fn is_recording(bytes: &[u8]) -> bool {
    bytes.starts_with(MAGIC)
}

pub fn read_artifact(path: &Path) -> Result<Artifact> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{} is not a sounder artifact", path.display()))
}

pub fn load_recording(path: &Path) -> Result<Recording> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(read_recording(&bytes).with_context(|| format!("decoding {}", path.display()))?)
}

/// Processed snapshots from either a recording or a `processed` artifact.
pub fn load_processed(path: &Path, margin_db: f64) -> Result<ProcessedFile> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if is_recording(&bytes) {
        let rec = read_recording(&bytes).with_context(|| format!("decoding {}", path.display()))?;
        return process(&rec, margin_db);
    }
    match serde_json::from_slice(&bytes) {
        Ok(Artifact::Processed(p)) => Ok(p),
        Ok(other) => bail!("{} holds a {} artifact, expected a recording or processed snapshots", path.display(), other.name()),
        Err(e) => Err(e).with_context(|| format!("{} is neither a recording nor a sounder artifact", path.display())),
    }
}

pub fn process(rec: &Recording, margin_db: f64) -> Result<ProcessedFile> {
    Ok(ProcessedFile {
        config: rec.header.config.clone(),
        receiver: rec.header.receiver,
        margin_db,
        snapshots: process_recording(rec, margin_db)?,
    })
}
