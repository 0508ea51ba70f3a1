//! Multi-node orchestration: clocks, schedules, calibration runs and the
//! end-to-end campaign driver.

pub mod clock;
pub mod schedule;
pub mod sim;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::array::ArrayError;
use crate::calibration::{
    cable_response, measure_rx_loopback, measure_tx_spectrum, step1_tx_flatness, CalError, CalReport, RxLoopback,
    SystemCalibration, REFERENCE_DISTANCE_M, TX_ANTENNA_GAIN_DBI,
};
use crate::channel::{geometry, realize_channel, ChannelError, Direction, Scene};
use crate::config::SounderConfig;
use crate::receiver::{
    noise_threshold, pdp_from_cir, synthesize_omni_pdp, total_power_dbm, Pdp, ReceiverError, DEFAULT_MARGIN_DB,
};
use crate::recording::{CirRecord, Recording, RecordingHeader};
use crate::rng::stream_rng;
use crate::waveform::{apply_tx_coefficients, WaveformError};

pub use clock::{apply_clock, delay_bias_s, ClockSource, NodeClock};
pub use schedule::{build_schedule, Action, NodeActions, NodeRole, NodeSpec, ScheduledCapture, TxRxSchedule};
pub use sim::{FrontEnds, Simulator};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CampaignError {
    #[error("snapshot period {period_s} s shorter than the sweep; minimum is {minimum_s} s")]
    PeriodTooShort { period_s: f64, minimum_s: f64 },
    #[error("worst-case clock skew {skew_s} s exceeds the {margin_s} s delay margin")]
    ClockMargin { skew_s: f64, margin_s: f64 },
    #[error("nodes: {0}")]
    Nodes(String),
    #[error("capture at t = {t} s outside the scene time range [{start}, {end}]")]
    TimeRange { t: f64, start: f64, end: f64 },
    #[error("setup: {0}")]
    Setup(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Receiver(#[from] ReceiverError),
    #[error(transparent)]
    Waveform(#[from] WaveformError),
    #[error(transparent)]
    Array(#[from] ArrayError),
    #[error(transparent)]
    Calibration(#[from] CalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReceiverKind {
    #[default]
    Omni,
    Array,
}

/// Randomness of a campaign. `None` disables receiver noise or front-end
/// impairments respectively.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    #[serde(default)]
    pub noise: Option<u64>,
    #[serde(default)]
    pub rcs: u64,
    #[serde(default)]
    pub front_end: Option<u64>,
}

impl Default for Seeds {
    fn default() -> Self {
        Self { noise: Some(1), rcs: 1, front_end: Some(1) }
    }
}

impl Seeds {
    pub fn front_ends(&self, cfg: &SounderConfig, kind: ReceiverKind) -> FrontEnds {
        match self.front_end {
            Some(s) => FrontEnds::seeded(cfg, kind, s),
            None => FrontEnds::ideal(cfg, kind),
        }
    }
}

/// One transmitter and one receiver, or a single duplex node when TX and RX
/// share a position.
pub fn nodes_for_scene(scene: &Scene, tx_clock: NodeClock, rx_clock: NodeClock) -> Vec<NodeSpec> {
    if geometry::distance(scene.tx.position, scene.rx.position) == 0.0 && scene.rx.track.is_none() {
        vec![NodeSpec { node_id: 0, role: NodeRole::Duplex, clock: rx_clock }]
    } else {
        vec![
            NodeSpec { node_id: 0, role: NodeRole::Transmitter, clock: tx_clock },
            NodeSpec { node_id: 1, role: NodeRole::Receiver, clock: rx_clock },
        ]
    }
}

fn thresholded(cirs: &[crate::receiver::Cir]) -> Result<Vec<Pdp>, CampaignError> {
    Ok(cirs.iter().map(|c| noise_threshold(&pdp_from_cir(c), DEFAULT_MARGIN_DB)).collect::<Result<_, _>>()?)
}

/// Calibration reference scene: TX and RX `d` metres apart at equal height.
pub fn reference_scene(d_m: f64) -> Scene {
    Scene::line_of_sight([0.0, 0.0, 2.0], [d_m, 0.0, 2.0])
}

/// Runs calibration steps 1–3 (and 4 for arrays) in simulation.
///
/// Steps 1–2 use the simulated spectrum analyzer and cable loopback; step 3
/// captures the 3 m reference scene. Arrays are rotated so each face in turn
/// looks at the transmitter and the four face offsets are solved jointly;
/// step 4 then compares the beam synthesis at an off-boresight angle with a
/// separately calibrated omni antenna.
pub fn calibrate_system(
    cfg: &SounderConfig,
    kind: ReceiverKind,
    front_ends: &FrontEnds,
    seed: u64,
) -> Result<(SystemCalibration, CalReport), CampaignError> {
    let raw = Simulator::new(cfg, kind, front_ends.clone(), SystemCalibration::default())?;
    let spectrum = measure_tx_spectrum(raw.frame(), &front_ends.tx_ripple, cfg, TX_ANTENNA_GAIN_DBI);
    let step1 = step1_tx_flatness(&spectrum, cfg.tx_eirp_dbm, TX_ANTENNA_GAIN_DBI)?;

    let flat_frame = apply_tx_coefficients(raw.frame(), step1.coefficients.coefficients(), cfg)?;
    let cable = cable_response(cfg, seed);
    let loopbacks: Vec<RxLoopback> = front_ends
        .ports
        .iter()
        .enumerate()
        .map(|(p, fe)| RxLoopback {
            array_id: p as u8,
            rx_spectrum: measure_rx_loopback(&flat_frame, &front_ends.tx_ripple, &fe.rx_ripple, fe.rx_gain_offset_db, &cable),
            cable_response: cable.clone(),
        })
        .collect();
    let step2 = step1.rx_flatness(&loopbacks)?;

    let scene = reference_scene(REFERENCE_DISTANCE_M);
    let channel = realize_channel(&scene, 0.0, cfg, 0, 0)?;
    let f_ghz = cfg.center_ghz();
    match kind {
        ReceiverKind::Omni => {
            let sim = Simulator::new(cfg, kind, front_ends.clone(), step2.partial_calibration(false))?;
            let pdps = thresholded(&sim.acquire(&channel, 0.0, Some(seed))?)?;
            let done = step2.incident_power_omni(&pdps[0], REFERENCE_DISTANCE_M, f_ghz, cfg.tx_eirp_dbm)?;
            Ok(done.finish_without_beams())
        }
        ReceiverKind::Array => {
            let sim = Simulator::new(cfg, kind, front_ends.clone(), step2.partial_calibration(true))?;
            let az_to_tx = Direction::between(scene.rx.position, scene.tx.position).az_deg;
            let mut p = [[0.0; 4]; 4];
            for (f, row) in p.iter_mut().enumerate() {
                let cirs = sim.acquire(&channel, az_to_tx - 90.0 * f as f64, Some(seed.wrapping_add(f as u64)))?;
                for (pdp, cir) in thresholded(&cirs)?.iter().zip(&cirs) {
                    if let Some(mw) = total_power_dbm(pdp).dbm().map(crate::receiver::dbm_to_mw) {
                        row[cir.meta.array_id as usize] += mw;
                    }
                }
            }
            let done = step2.incident_power_array(&p, REFERENCE_DISTANCE_M, f_ghz, cfg.tx_eirp_dbm)?;

            // Step 4 against an omni antenna with its own front end.
            let omni_fe = FrontEnds::seeded(cfg, ReceiverKind::Omni, seed ^ 0x0A11);
            let (omni_cal, _) = calibrate_system(cfg, ReceiverKind::Omni, &omni_fe, seed)?;
            let omni = Simulator::new(cfg, ReceiverKind::Omni, omni_fe, omni_cal)?;
            let array = Simulator::new(cfg, kind, front_ends.clone(), done.calibration.clone())?;
            let orientation = az_to_tx - 20.0;
            let beam_pdps = thresholded(&array.acquire(&channel, orientation, Some(seed ^ 0xB3A))?)?;
            let reference = thresholded(&omni.acquire(&channel, orientation, Some(seed ^ 0x03A1))?)?;
            let synth = synthesize_omni_pdp(&beam_pdps)?;
            Ok(done.verify(&synth, &reference[0]))
        }
    }
}

/// Receiver configuration for a campaign run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ReceiverSetup {
    pub kind: ReceiverKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<SystemCalibration>,
}

fn simulate_snapshot(
    sim: &Simulator,
    schedule: &TxRxSchedule,
    scene: &Scene,
    cfg: &SounderConfig,
    seeds: &Seeds,
    snapshot: u64,
) -> Result<Vec<CirRecord>, CampaignError> {
    let tx_clock = schedule.transmitter().clock;
    let rx_clock = schedule.receiver().clock;
    schedule
        .snapshot_captures(snapshot)
        .map(|cap| {
            let mut ch = realize_channel(scene, cap.start_s, cfg, seeds.rcs, cap.snapshot)?;
            ch.delay_bias_s = delay_bias_s(cap.start_s, &tx_clock, &rx_clock);
            let meta = crate::receiver::CaptureMeta {
                timestamp_s: cap.start_s,
                node_id: cap.node_id,
                array_id: cap.array_id,
                beam_id: cap.beam_id,
            };
            let cir = match seeds.noise {
                Some(s) => {
                    let mut rng = stream_rng(s, &[cap.snapshot, cap.array_id as u64, cap.beam_id as u64]);
                    sim.capture(&ch, scene.rx.orientation_deg, meta, Some(&mut rng))?
                }
                None => sim.capture(&ch, scene.rx.orientation_deg, meta, None)?,
            };
            Ok(CirRecord::from_cir(&cir))
        })
        .collect()
}

/// Simulates every scheduled capture and returns the recording.
///
/// For each capture: realize the scene at the capture time, shift by the
/// clock-induced delay bias, weight taps by the beam pattern, pass through the
/// front end and channel, correlate. The result depends only on the inputs.
pub fn run_campaign(
    schedule: &TxRxSchedule,
    scene: &Scene,
    cfg: &SounderConfig,
    seeds: &Seeds,
    setup: &ReceiverSetup,
) -> Result<Recording, CampaignError> {
    schedule.check_half_duplex()?;
    schedule.check_clock_margin(cfg)?;
    let (start, end) = scene.time_range();
    for t in [schedule.snapshot_start_s(0), schedule.snapshot_start_s(schedule.n_snapshots - 1) + schedule.sweep.total_duration_s] {
        if t < start - 1e-12 || t > end + 1e-12 {
            return Err(CampaignError::TimeRange { t, start, end });
        }
    }
    if schedule.sweep.is_omni() != (setup.kind == ReceiverKind::Omni) {
        return Err(CampaignError::Setup("sweep does not match the receiver kind".into()));
    }

    let calibration = setup.calibration.clone().unwrap_or_default();
    let sim = Simulator::new(cfg, setup.kind, seeds.front_ends(cfg, setup.kind), calibration)?;
    let snapshots: Vec<u64> = (0..schedule.n_snapshots).collect();
    let run = |&s: &u64| simulate_snapshot(&sim, schedule, scene, cfg, seeds, s);

    #[cfg(feature = "parallel")]
    let per_snapshot: Vec<Result<Vec<CirRecord>, CampaignError>> = {
        use rayon::prelude::*;
        snapshots.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let per_snapshot: Vec<Result<Vec<CirRecord>, CampaignError>> = snapshots.iter().map(run).collect();

    let mut records = Vec::with_capacity(schedule.n_snapshots as usize * schedule.captures_per_snapshot());
    for r in per_snapshot {
        records.extend(r?);
    }
    records.sort_by_key(|r| (r.timestamp_ns, r.node_id, r.array_id));

    let header = RecordingHeader {
        config: cfg.clone(),
        receiver: setup.kind,
        calibration: setup.calibration.clone(),
        scene_hash: scene.hash_hex(),
        schedule_digest: schedule.digest(),
        schedule: schedule.clone(),
        seeds: *seeds,
        record_count: records.len() as u64,
    };
    Ok(Recording { header, records })
}
