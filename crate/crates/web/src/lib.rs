//! Browser demo. Each operation is a plain function (tested natively) with a
//! thin `wasm_bindgen` wrapper.

use sounder_core::analysis::link_budget;
use sounder_core::array::{build_beam_table, build_scan_schedule};
use sounder_core::calibration::SystemCalibration;
use sounder_core::campaign::{FrontEnds, ReceiverKind, Simulator};
use sounder_core::channel::scene::EnvironmentTap;
use sounder_core::channel::{fspl_db, realize_channel, Scene};
use sounder_core::receiver::{
    local_maxima, mw_to_dbm, noise_threshold, pdp_from_cir, total_power_dbm, DEFAULT_MARGIN_DB,
};
use sounder_core::SounderConfig;
use wasm_bindgen::prelude::*;

fn config(f_ghz: f64) -> Result<SounderConfig, String> {
    SounderConfig::for_band(f_ghz).map_err(|e| e.to_string())
}

pub fn max_path_loss_db(f_ghz: f64, g_rx_dbi: f64, snr_min_db: f64) -> Result<f64, String> {
    Ok(link_budget(&config(f_ghz)?, g_rx_dbi, snr_min_db))
}

/// Thresholded omni PDP of a LOS link plus one reflector.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct PdpView {
    delays_ns: Vec<f64>,
    power_dbm: Vec<f64>,
    threshold_dbm: f64,
    total_dbm: f64,
    fspl_db: f64,
    peaks: Vec<u32>,
}

#[wasm_bindgen]
impl PdpView {
    #[wasm_bindgen(getter)]
    pub fn delays_ns(&self) -> Vec<f64> {
        self.delays_ns.clone()
    }

    /// Absent taps are NaN.
    #[wasm_bindgen(getter)]
    pub fn power_dbm(&self) -> Vec<f64> {
        self.power_dbm.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn threshold_dbm(&self) -> f64 {
        self.threshold_dbm
    }

    #[wasm_bindgen(getter)]
    pub fn total_dbm(&self) -> f64 {
        self.total_dbm
    }

    #[wasm_bindgen(getter)]
    pub fn fspl_db(&self) -> f64 {
        self.fspl_db
    }

    #[wasm_bindgen(getter)]
    pub fn peaks(&self) -> Vec<u32> {
        self.peaks.clone()
    }
}

pub fn simulate_pdp(
    f_ghz: f64,
    distance_m: f64,
    reflector_delay_ns: f64,
    reflector_loss_db: f64,
    seed: u64,
) -> Result<PdpView, String> {
    let cfg = config(f_ghz)?;
    let mut scene = Scene::line_of_sight([0.0, 0.0, 2.0], [distance_m, 0.0, 2.0]);
    if reflector_loss_db.is_finite() && reflector_delay_ns > 0.0 {
        scene.environment.push(EnvironmentTap {
            delay_s: reflector_delay_ns * 1e-9,
            path_loss_db: reflector_loss_db,
            phase_rad: 0.0,
            aoa_deg: [0.0, 0.0],
            aod_deg: [0.0, 0.0],
        });
    }
    let channel = realize_channel(&scene, 0.0, &cfg, seed, 0).map_err(|e| e.to_string())?;
    let front_ends = FrontEnds::ideal(&cfg, ReceiverKind::Omni);
    let sim = Simulator::new(&cfg, ReceiverKind::Omni, front_ends, SystemCalibration::default())
        .map_err(|e| e.to_string())?;
    let cir = sim.acquire(&channel, 0.0, Some(seed)).map_err(|e| e.to_string())?.remove(0);
    let pdp = noise_threshold(&pdp_from_cir(&cir), DEFAULT_MARGIN_DB).map_err(|e| e.to_string())?;
    Ok(PdpView {
        delays_ns: (0..pdp.len()).map(|i| pdp.delay_ns(i)).collect(),
        power_dbm: pdp.taps_mw.iter().map(|v| v.map_or(f64::NAN, mw_to_dbm)).collect(),
        threshold_dbm: pdp.threshold.as_ref().map_or(f64::NAN, |t| t.threshold_dbm),
        total_dbm: total_power_dbm(&pdp).dbm().unwrap_or(f64::NAN),
        fspl_db: fspl_db(distance_m, f_ghz, 0.0, 0.0).map_err(|e| e.to_string())?,
        peaks: local_maxima(&pdp).into_iter().map(|i| i as u32).collect(),
    })
}

/// Beam pointings of the four-face array and the sweep duration.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct BeamGridView {
    az_deg: Vec<f64>,
    el_deg: Vec<f64>,
    beamwidth_az_deg: Vec<f64>,
    beamwidth_el_deg: Vec<f64>,
    face: Vec<u8>,
    sweep_ms: f64,
    peak_gain_dbi: f64,
}

#[wasm_bindgen]
impl BeamGridView {
    #[wasm_bindgen(getter)]
    pub fn az_deg(&self) -> Vec<f64> {
        self.az_deg.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn el_deg(&self) -> Vec<f64> {
        self.el_deg.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn beamwidth_az_deg(&self) -> Vec<f64> {
        self.beamwidth_az_deg.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn beamwidth_el_deg(&self) -> Vec<f64> {
        self.beamwidth_el_deg.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn face(&self) -> Vec<u8> {
        self.face.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn sweep_ms(&self) -> f64 {
        self.sweep_ms
    }

    #[wasm_bindgen(getter)]
    pub fn peak_gain_dbi(&self) -> f64 {
        self.peak_gain_dbi
    }
}

pub fn beam_grid(f_ghz: f64, guard_us: f64) -> Result<BeamGridView, String> {
    let cfg = config(f_ghz)?;
    let beams = build_beam_table(&cfg.band).map_err(|e| e.to_string())?;
    let sweep = build_scan_schedule(&beams, &cfg, guard_us * 1e-6).map_err(|e| e.to_string())?;
    Ok(BeamGridView {
        az_deg: beams.iter().map(|b| b.pointing.az_deg).collect(),
        el_deg: beams.iter().map(|b| b.pointing.el_deg).collect(),
        beamwidth_az_deg: beams.iter().map(|b| b.beamwidth_az_deg).collect(),
        beamwidth_el_deg: beams.iter().map(|b| b.beamwidth_el_deg).collect(),
        face: beams.iter().map(|b| b.face_id).collect(),
        sweep_ms: sweep.total_duration_s * 1e3,
        peak_gain_dbi: beams.first().map_or(0.0, |b| b.peak_gain_dbi),
    })
}

#[wasm_bindgen(js_name = maxPathLossDb)]
pub fn max_path_loss_db_js(f_ghz: f64, g_rx_dbi: f64, snr_min_db: f64) -> Result<f64, JsError> {
    max_path_loss_db(f_ghz, g_rx_dbi, snr_min_db).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = simulatePdp)]
pub fn simulate_pdp_js(
    f_ghz: f64,
    distance_m: f64,
    reflector_delay_ns: f64,
    reflector_loss_db: f64,
    seed: u32,
) -> Result<PdpView, JsError> {
    simulate_pdp(f_ghz, distance_m, reflector_delay_ns, reflector_loss_db, seed as u64).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = beamGrid)]
pub fn beam_grid_js(f_ghz: f64, guard_us: f64) -> Result<BeamGridView, JsError> {
    beam_grid(f_ghz, guard_us).map_err(|e| JsError::new(&e))
}
