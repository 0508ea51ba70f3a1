//! Capture simulation: front ends, beam weighting, channel, correlator.

use num_complex::Complex64;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{CampaignError, ReceiverKind};
use crate::array::{beam_gain_db, build_beam_table, to_platform_frame, BeamDefinition, N_FACES, OMNI_BEAM};
use crate::calibration::SystemCalibration;
use crate::channel::{apply_channel, ChannelRealization, FrontEndModel};
use crate::config::SounderConfig;
use crate::receiver::{correlate_with, CaptureMeta, Cir, RxCorrection};
use crate::waveform::{apply_tx_coefficients, build_sounding_frame, TxFrame};

/// ZC root used by every transmitter.
pub const ZC_ROOT: u64 = 1;

/// TX ripple and one RX front end per port (one for omni, four for arrays).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontEnds {
    pub tx_ripple: Vec<Complex64>,
    pub ports: Vec<FrontEndModel>,
}

impl FrontEnds {
    pub fn n_ports(kind: ReceiverKind) -> usize {
        match kind {
            ReceiverKind::Omni => 1,
            ReceiverKind::Array => N_FACES,
        }
    }

    fn noise_figure(cfg: &SounderConfig, kind: ReceiverKind) -> f64 {
        match kind {
            ReceiverKind::Omni => cfg.rx_noise_figure_omni_db,
            ReceiverKind::Array => cfg.rx_noise_figure_array_db,
        }
    }

    pub fn ideal(cfg: &SounderConfig, kind: ReceiverKind) -> Self {
        let fe = FrontEndModel::ideal(cfg, Self::noise_figure(cfg, kind));
        Self { tx_ripple: fe.tx_ripple.clone(), ports: vec![fe; Self::n_ports(kind)] }
    }

    /// Seeded ripple and gain errors; ports draw independent impairments.
    pub fn seeded(cfg: &SounderConfig, kind: ReceiverKind, seed: u64) -> Self {
        let nf = Self::noise_figure(cfg, kind);
        let sub = |i: u64| crate::rng::stream_rng(seed, &[0xF0, i]).next_u64();
        let tx_ripple = FrontEndModel::seeded(cfg, sub(u64::MAX), nf).tx_ripple;
        let ports = (0..Self::n_ports(kind) as u64).map(|p| FrontEndModel::seeded(cfg, sub(p), nf)).collect();
        Self { tx_ripple, ports }
    }

    /// The model `apply_channel` needs for a port: shared TX ripple plus the port's RX side.
    pub fn combined(&self, array_id: u8) -> FrontEndModel {
        let mut fe = self.ports[array_id as usize].clone();
        fe.tx_ripple = self.tx_ripple.clone();
        fe
    }
}

/// Simulates captures for one receiver.
#[derive(Debug, Clone)]
pub struct Simulator {
    pub cfg: SounderConfig,
    pub receiver: ReceiverKind,
    pub beams: Vec<BeamDefinition>,
    pub front_ends: FrontEnds,
    pub calibration: SystemCalibration,
    frame: TxFrame,
    combined: Vec<FrontEndModel>,
}

impl Simulator {
    pub fn new(
        cfg: &SounderConfig,
        receiver: ReceiverKind,
        front_ends: FrontEnds,
        calibration: SystemCalibration,
    ) -> Result<Self, CampaignError> {
        let beams = match receiver {
            ReceiverKind::Omni => Vec::new(),
            ReceiverKind::Array => build_beam_table(&cfg.band)?,
        };
        if front_ends.ports.len() != FrontEnds::n_ports(receiver) {
            return Err(CampaignError::Setup(format!(
                "{} front-end ports for a {:?} receiver",
                front_ends.ports.len(),
                receiver
            )));
        }
        let mut frame = build_sounding_frame(cfg, ZC_ROOT)?;
        if let Some(tx) = &calibration.tx {
            frame = apply_tx_coefficients(&frame, tx.coefficients(), cfg)?;
        }
        let combined = (0..front_ends.ports.len()).map(|p| front_ends.combined(p as u8)).collect();
        Ok(Self { cfg: cfg.clone(), receiver, beams, front_ends, calibration, frame, combined })
    }

    pub fn frame(&self) -> &TxFrame {
        &self.frame
    }

    pub fn beam(&self, beam_id: u16) -> Option<&BeamDefinition> {
        self.beams.get(beam_id as usize)
    }

    /// Correlator corrections for a port and beam.
    pub fn correction(&self, array_id: u8, beam: Option<&BeamDefinition>) -> RxCorrection {
        let port = self.calibration.port(array_id);
        let mut offset_db = port.map_or(0.0, |p| p.offset_db);
        if self.calibration.deembed_scan_loss {
            if let Some(b) = beam {
                offset_db += b.scan_loss_db();
            }
        }
        RxCorrection {
            coefficients: port.and_then(|p| p.flatness.as_ref()).map(|c| c.coefficients().to_vec()),
            offset_db,
        }
    }

    /// One capture of `channel` on (`array_id`, `beam_id`) with the platform
    /// rotated by `orientation_deg`.
    pub fn capture(
        &self,
        channel: &ChannelRealization,
        orientation_deg: f64,
        meta: CaptureMeta,
        noise: Option<&mut dyn RngCore>,
    ) -> Result<Cir, CampaignError> {
        let beam = if meta.beam_id == OMNI_BEAM {
            None
        } else {
            Some(self.beam(meta.beam_id).ok_or_else(|| CampaignError::Setup(format!("unknown beam {}", meta.beam_id)))?)
        };
        let weighted;
        let ch = match beam {
            Some(b) => {
                weighted = channel.with_rx_gain(|tap| beam_gain_db(b, to_platform_frame(tap.aoa, orientation_deg)));
                &weighted
            }
            None => channel,
        };
        let fe = self
            .combined
            .get(meta.array_id as usize)
            .ok_or_else(|| CampaignError::Setup(format!("unknown array {}", meta.array_id)))?;
        let rx = apply_channel(&self.frame.baseband, ch, fe, &self.cfg, noise)?;
        let mut cir = correlate_with(&rx, &self.frame, &self.cfg, &self.correction(meta.array_id, beam))?;
        cir.meta = meta;
        Ok(cir)
    }

    /// Capture slots of one full acquisition: every beam, or the omni port.
    pub fn slots(&self) -> Vec<(u8, u16)> {
        match self.receiver {
            ReceiverKind::Omni => vec![(0, OMNI_BEAM)],
            ReceiverKind::Array => self.beams.iter().map(|b| (b.face_id, b.beam_id)).collect(),
        }
    }

    /// Captures every slot of a static channel, with noise drawn from
    /// `noise_seed` when given.
    pub fn acquire(
        &self,
        channel: &ChannelRealization,
        orientation_deg: f64,
        noise_seed: Option<u64>,
    ) -> Result<Vec<Cir>, CampaignError> {
        self.slots()
            .into_iter()
            .enumerate()
            .map(|(i, (array_id, beam_id))| {
                let meta = CaptureMeta { timestamp_s: channel.timestamp_s, node_id: 1, array_id, beam_id };
                match noise_seed {
                    Some(s) => {
                        let mut rng = crate::rng::stream_rng(s, &[i as u64]);
                        self.capture(channel, orientation_deg, meta, Some(&mut rng))
                    }
                    None => self.capture(channel, orientation_deg, meta, None),
                }
            })
            .collect()
    }
}
