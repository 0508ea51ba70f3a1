//! CSV and JSON exports of analysis products.
//!
//! Floats are written with Rust's shortest round-trip formatting, so parsing
//! a cell back yields the identical f64. Absent values are empty cells.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{GridKind, PadpAxis, PadpGrid, PathLossFit, PathLossSample, RcsEstimates, RcsFit};
use crate::array::BeamDefinition;
use crate::receiver::{mw_to_dbm, Pdp};

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed table: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format '{other}' (csv or json)")),
        }
    }
}

/// Anything that flattens to a header plus rows of cells.
pub trait CsvTable {
    fn header(&self) -> Vec<String>;
    fn rows(&self) -> Vec<Vec<String>>;
}

fn f(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(f).unwrap_or_default()
}

fn hdr(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

pub struct BeamTable<'a>(pub &'a [BeamDefinition]);

impl CsvTable for BeamTable<'_> {
    fn header(&self) -> Vec<String> {
        hdr(&["beam_id", "face_id", "az_deg", "el_deg", "bw_az_deg", "bw_el_deg", "peak_gain_dbi"])
    }
    fn rows(&self) -> Vec<Vec<String>> {
        self.0
            .iter()
            .map(|b| {
                vec![
                    b.beam_id.to_string(),
                    b.face_id.to_string(),
                    f(b.pointing.az_deg),
                    f(b.pointing.el_deg),
                    f(b.beamwidth_az_deg),
                    f(b.beamwidth_el_deg),
                    f(b.peak_gain_dbi),
                ]
            })
            .collect()
    }
}

/// One row per (capture, delay bin).
pub struct PdpTable<'a>(pub &'a [Pdp]);

impl CsvTable for PdpTable<'_> {
    fn header(&self) -> Vec<String> {
        hdr(&["timestamp_s", "node_id", "array_id", "beam_id", "delay_ns", "power_dbm"])
    }
    fn rows(&self) -> Vec<Vec<String>> {
        let mut rows = Vec::new();
        for p in self.0 {
            for (i, v) in p.taps_mw.iter().enumerate() {
                rows.push(vec![
                    f(p.meta.timestamp_s),
                    p.meta.node_id.to_string(),
                    p.meta.array_id.to_string(),
                    p.meta.beam_id.to_string(),
                    f(p.delay_ns(i)),
                    opt(v.map(mw_to_dbm)),
                ]);
            }
        }
        rows
    }
}

/// Samples with the fitted line alongside.
pub struct PathLossTable<'a> {
    pub samples: &'a [PathLossSample],
    pub fit: &'a PathLossFit,
}

impl CsvTable for PathLossTable<'_> {
    fn header(&self) -> Vec<String> {
        hdr(&["distance_m", "pl_db", "fitted_db", "run_id", "timestamp_s"])
    }
    fn rows(&self) -> Vec<Vec<String>> {
        self.samples
            .iter()
            .map(|s| {
                vec![f(s.distance_m), f(s.path_loss_db), f(self.fit.predict_db(s.distance_m)), s.run_id.to_string(), f(s.timestamp_s)]
            })
            .collect()
    }
}

impl CsvTable for PathLossFit {
    fn header(&self) -> Vec<String> {
        hdr(&["ple", "sigma_s_db", "intercept_db", "d0_m", "n_samples"])
    }
    fn rows(&self) -> Vec<Vec<String>> {
        vec![vec![f(self.ple), f(self.sigma_s_db), f(self.intercept_at_d0_db), f(self.d0_m), self.n_samples.to_string()]]
    }
}

/// Long form: one row per cell. Linear power is kept next to dBm so a
/// re-import reproduces the grid exactly.
impl CsvTable for PadpGrid {
    fn header(&self) -> Vec<String> {
        vec![self.row_label().into(), self.column_label().into(), "power_dbm".into(), "power_mw".into()]
    }
    fn rows(&self) -> Vec<Vec<String>> {
        let mut rows = Vec::with_capacity(self.angles_deg.len() * self.columns.len());
        for (r, a) in self.angles_deg.iter().enumerate() {
            for (c, x) in self.columns.iter().enumerate() {
                let v = self.power_mw[r][c];
                rows.push(vec![f(*a), f(*x), opt(v.map(mw_to_dbm)), opt(v)]);
            }
        }
        rows
    }
}

impl CsvTable for RcsFit {
    fn header(&self) -> Vec<String> {
        hdr(&["target_class", "mode", "mu_dbsm", "sigma_dbsm", "n_samples"])
    }
    fn rows(&self) -> Vec<Vec<String>> {
        let name = |v: &dyn erased::Name| v.name();
        vec![vec![name(&self.target_class), name(&self.mode), f(self.mu_dbsm), f(self.sigma_dbsm), self.n_samples.to_string()]]
    }
}

impl CsvTable for RcsEstimates {
    fn header(&self) -> Vec<String> {
        hdr(&["index", "gamma_dbsm"])
    }
    fn rows(&self) -> Vec<Vec<String>> {
        self.gamma_dbsm.iter().enumerate().map(|(i, g)| vec![i.to_string(), f(*g)]).collect()
    }
}

mod erased {
    use serde::Serialize;

    pub trait Name {
        fn name(&self) -> String;
    }

    impl<T: Serialize> Name for T {
        fn name(&self) -> String {
            match serde_json::to_value(self) {
                Ok(serde_json::Value::String(s)) => s,
                Ok(v) => v.to_string(),
                Err(_) => String::new(),
            }
        }
    }
}

pub fn write_csv<W: Write>(table: &(impl CsvTable + ?Sized), out: W) -> Result<(), ExportError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(out);
    w.write_record(table.header())?;
    for row in table.rows() {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(table: &(impl CsvTable + ?Sized)) -> Result<String, ExportError> {
    let mut buf = Vec::new();
    write_csv(table, &mut buf)?;
    String::from_utf8(buf).map_err(|e| ExportError::Malformed(e.to_string()))
}

pub fn export_csv(table: &(impl CsvTable + ?Sized), path: &Path) -> Result<(), ExportError> {
    write_csv(table, File::create(path)?)
}

pub fn export_json(value: &impl Serialize, path: &Path) -> Result<(), ExportError> {
    let mut file = File::create(path)?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    Ok(())
}

/// Writes either form depending on `format`.
pub fn export<T: CsvTable + Serialize>(value: &T, format: Format, path: &Path) -> Result<(), ExportError> {
    match format {
        Format::Csv => export_csv(value, path),
        Format::Json => export_json(value, path),
    }
}

/// Rebuilds a grid from its long-form CSV. The grid kind comes from the
/// header labels; beams missing from the sweep are not recoverable.
pub fn read_grid_csv(text: &str) -> Result<PadpGrid, ExportError> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let kind = match (header.first().map(String::as_str), header.get(1).map(String::as_str)) {
        (Some("az_deg"), Some("el_deg")) => GridKind::Pap,
        (Some("az_deg"), Some("delay_ns")) => GridKind::Padp(PadpAxis::Azimuth),
        (Some("el_deg"), Some("delay_ns")) => GridKind::Padp(PadpAxis::Elevation),
        _ => return Err(ExportError::Malformed(format!("unrecognised header {header:?}"))),
    };
    let parse = |s: &str| s.parse::<f64>().map_err(|e| ExportError::Malformed(format!("'{s}': {e}")));
    let mut angles: Vec<f64> = Vec::new();
    let mut columns: Vec<f64> = Vec::new();
    let mut cells = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != 4 {
            return Err(ExportError::Malformed(format!("row has {} cells", rec.len())));
        }
        let a = parse(&rec[0])?;
        let x = parse(&rec[1])?;
        let v = if rec[3].is_empty() { None } else { Some(parse(&rec[3])?) };
        if !angles.contains(&a) {
            angles.push(a);
        }
        if !columns.contains(&x) {
            columns.push(x);
        }
        cells.push((a, x, v));
    }
    let mut power_mw = vec![vec![None; columns.len()]; angles.len()];
    for (a, x, v) in cells {
        let r = angles.iter().position(|q| *q == a).expect("collected above");
        let c = columns.iter().position(|q| *q == x).expect("collected above");
        power_mw[r][c] = v;
    }
    Ok(PadpGrid { kind, angles_deg: angles, columns, power_mw, missing_beams: Vec::new() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{build_pap, build_padp};
    use crate::array::build_beam_table;
    use crate::channel::{SensingMode, TargetClass};
    use crate::config::BandPlan;
    use crate::receiver::CaptureMeta;
    use proptest::prelude::*;

    fn sweep() -> (Vec<BeamDefinition>, Vec<Pdp>) {
        let beams = build_beam_table(&BandPlan::for_ghz(14.5).unwrap()).unwrap();
        let pdps = beams
            .iter()
            .map(|b| Pdp {
                taps_mw: (0..6).map(|i| if (i + b.beam_id as usize) % 3 == 0 { None } else { Some(1e-9 / (1.0 + i as f64 * 0.37 + b.beam_id as f64)) }).collect(),
                tap_spacing_s: 2.4928e-9,
                meta: CaptureMeta { beam_id: b.beam_id, ..Default::default() },
                threshold: None,
            })
            .collect();
        (beams, pdps)
    }

    #[test]
    fn beam_table_csv() {
        let (beams, _) = sweep();
        let s = to_csv_string(&BeamTable(&beams)).unwrap();
        let mut lines = s.split("\r\n");
        assert_eq!(lines.next().unwrap(), "beam_id,face_id,az_deg,el_deg,bw_az_deg,bw_el_deg,peak_gain_dbi");
        assert_eq!(s.matches("\r\n").count(), beams.len() + 1);
    }

    #[test]
    fn grid_round_trip_exact() {
        let (beams, pdps) = sweep();
        for grid in [build_pap(&pdps, &beams).unwrap(), build_padp(&pdps, &beams, PadpAxis::Azimuth).unwrap(), build_padp(&pdps, &beams, PadpAxis::Elevation).unwrap()] {
            let back = read_grid_csv(&to_csv_string(&grid).unwrap()).unwrap();
            assert_eq!(back.kind, grid.kind);
            assert_eq!(back.angles_deg, grid.angles_deg);
            assert_eq!(back.columns, grid.columns);
            assert_eq!(back.power_mw, grid.power_mw);
        }
    }

    #[test]
    fn pdp_and_fit_tables() {
        let (_, pdps) = sweep();
        let s = to_csv_string(&PdpTable(&pdps[..1])).unwrap();
        assert!(s.starts_with("timestamp_s,node_id,array_id,beam_id,delay_ns,power_dbm\r\n"));
        assert_eq!(s.lines().count(), 7);
        let samples = [
            PathLossSample { distance_m: 10.0, path_loss_db: 80.0, run_id: 0, timestamp_s: 0.0 },
            PathLossSample { distance_m: 100.0, path_loss_db: 100.0, run_id: 0, timestamp_s: 1.0 },
        ];
        let fit = crate::analysis::fit_path_loss(&samples, 1.0).unwrap();
        let s = to_csv_string(&PathLossTable { samples: &samples, fit: &fit }).unwrap();
        assert_eq!(s, "distance_m,pl_db,fitted_db,run_id,timestamp_s\r\n10,80,80,0,0\r\n100,100,100,0,1\r\n");
        let r = RcsFit { mu_dbsm: 7.7, sigma_dbsm: 8.4, n_samples: 3, target_class: TargetClass::PassengerCar, mode: SensingMode::Monostatic };
        assert_eq!(to_csv_string(&r).unwrap().lines().nth(1).unwrap(), "passenger_car,monostatic,7.7,8.4,3");
    }

    #[test]
    fn files_and_errors() {
        let dir = std::env::temp_dir().join(format!("sounder-export-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let (beams, pdps) = sweep();
        let grid = build_pap(&pdps, &beams).unwrap();
        export(&grid, Format::Json, &dir.join("g.json")).unwrap();
        let back: PadpGrid = serde_json::from_str(&std::fs::read_to_string(dir.join("g.json")).unwrap()).unwrap();
        assert_eq!(back, grid);
        export(&grid, Format::Csv, &dir.join("g.csv")).unwrap();
        assert!(matches!(export_csv(&grid, &dir.join("nope/g.csv")), Err(ExportError::Io(_))));
        std::fs::remove_dir_all(&dir).unwrap();
        assert_eq!("CSV".parse::<Format>(), Ok(Format::Csv));
        assert!("xml".parse::<Format>().is_err());
    }

    proptest! {
        #[test]
        fn float_cells_round_trip(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            prop_assert_eq!(f(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }
}
