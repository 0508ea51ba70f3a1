//! Scene description: nodes, environment scatterers and target tracks.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::geometry::{self, Direction, SensingGeometry, Vec3};
use super::rcs::{rcs_sample_dbsm, RcsModel, SensingMode, TargetClass};
use super::{ChannelError, ChannelRealization, PathTap, TapOrigin, TargetTruth};
use crate::config::SounderConfig;
use crate::rng::stream_rng;
use crate::units::SPEED_OF_LIGHT;

/// Timestamped position; tracks interpolate linearly between waypoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub t: f64,
    pub position: Vec3,
    /// Extra attenuation on the LOS path at this point (shadowing), dB.
    #[serde(default)]
    pub excess_loss_db: f64,
}

/// Position at time `t` along a waypoint list.
pub fn interpolate(track: &[Waypoint], t: f64) -> Option<(Vec3, f64)> {
    let first = track.first()?;
    let last = track.last()?;
    if !(t >= first.t && t <= last.t) {
        return None;
    }
    if track.len() == 1 {
        return Some((first.position, first.excess_loss_db));
    }
    let i = track.windows(2).position(|w| t >= w[0].t && t <= w[1].t)?;
    let (a, b) = (&track[i], &track[i + 1]);
    let span = b.t - a.t;
    let u = if span > 0.0 { (t - a.t) / span } else { 0.0 };
    let lerp = |x: f64, y: f64| x + u * (y - x);
    Some((
        [
            lerp(a.position[0], b.position[0]),
            lerp(a.position[1], b.position[1]),
            lerp(a.position[2], b.position[2]),
        ],
        lerp(a.excess_loss_db, b.excess_loss_db),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TxNode {
    pub position: Vec3,
    /// Gain relative to the configured EIRP (0 when EIRP already covers the antenna).
    #[serde(default)]
    pub gain_dbi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RxNode {
    pub position: Vec3,
    #[serde(default)]
    pub gain_dbi: f64,
    /// Platform azimuth rotation; beam pointings are relative to it.
    #[serde(default)]
    pub orientation_deg: f64,
    /// Optional moving receiver. When present it overrides `position`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub track: Option<Vec<Waypoint>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentTap {
    pub delay_s: f64,
    /// Isotropic path loss of the scattered path, dB.
    pub path_loss_db: f64,
    #[serde(default)]
    pub phase_rad: f64,
    pub aoa_deg: [f64; 2],
    #[serde(default)]
    pub aod_deg: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RcsPolicy {
    /// Fresh draw for every snapshot.
    #[default]
    PerSnapshot,
    /// One draw per target for the whole scene.
    Frozen,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub class: TargetClass,
    pub mode: SensingMode,
    pub track: Vec<Waypoint>,
    #[serde(default)]
    pub rcs_policy: RcsPolicy,
    #[serde(default)]
    pub blocked: bool,
}

impl TargetSpec {
    pub fn rcs_model(&self) -> RcsModel {
        RcsModel::catalog(self.class, self.mode)
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub tx: TxNode,
    pub rx: RxNode,
    #[serde(default = "default_true")]
    pub los: bool,
    #[serde(default)]
    pub environment: Vec<EnvironmentTap>,
    #[serde(default)]
    pub targets: Vec<TargetSpec>,
}

impl Scene {
    /// TX and RX only, LOS path.
    pub fn line_of_sight(tx: Vec3, rx: Vec3) -> Self {
        Self {
            tx: TxNode { position: tx, gain_dbi: 0.0 },
            rx: RxNode { position: rx, gain_dbi: 0.0, orientation_deg: 0.0, track: None },
            los: true,
            environment: Vec::new(),
            targets: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ChannelError> {
        serde_json::from_str(text).map_err(|e| ChannelError::Scene(e.to_string()))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ChannelError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| ChannelError::Scene(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    /// SHA-256 of the compact JSON encoding, hex.
    pub fn hash_hex(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("scene serializes");
        Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// RX position and LOS excess loss at `t`.
    pub fn rx_at(&self, t: f64) -> Result<(Vec3, f64), ChannelError> {
        match &self.rx.track {
            None => Ok((self.rx.position, 0.0)),
            Some(track) => interpolate(track, t).ok_or(ChannelError::TrackUndefined { what: "rx", t }),
        }
    }

    /// Time span over which every track in the scene is defined.
    pub fn time_range(&self) -> (f64, f64) {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        let tracks = self.rx.track.iter().chain(self.targets.iter().map(|t| &t.track));
        for tr in tracks {
            if let (Some(a), Some(b)) = (tr.first(), tr.last()) {
                lo = lo.max(a.t);
                hi = hi.min(b.t);
            }
        }
        (lo, hi)
    }
}

fn carrier_phase(delay_s: f64, f_hz: f64) -> f64 {
    let cycles = (delay_s * f_hz).fract();
    -2.0 * std::f64::consts::PI * cycles
}

/// Ground-truth propagation taps for the scene at time `t`.
///
/// `rcs_seed` drives the RCS draws; `snapshot` selects the per-snapshot stream.
pub fn realize_channel(
    scene: &Scene,
    t: f64,
    cfg: &SounderConfig,
    rcs_seed: u64,
    snapshot: u64,
) -> Result<ChannelRealization, ChannelError> {
    let f_ghz = cfg.center_ghz();
    let f_hz = cfg.band.center_frequency_hz;
    let tx = scene.tx.position;
    let (rx, excess) = scene.rx_at(t)?;
    let mut taps = Vec::new();
    let mut targets = Vec::new();

    let d_los = geometry::distance(tx, rx);
    if scene.los && d_los > 0.0 {
        let pl = geometry::fspl_db(d_los, f_ghz, scene.tx.gain_dbi, scene.rx.gain_dbi)? + excess;
        let delay = d_los / SPEED_OF_LIGHT;
        taps.push(PathTap::from_loss(
            delay,
            pl,
            carrier_phase(delay, f_hz),
            Direction::between(tx, rx),
            Direction::between(rx, tx),
            TapOrigin::LineOfSight,
        ));
    }

    for env in &scene.environment {
        if !(env.delay_s >= 0.0 && env.delay_s <= cfg.max_excess_delay_s + d_los / SPEED_OF_LIGHT) {
            return Err(ChannelError::TapDelay(env.delay_s));
        }
        let pl = env.path_loss_db - scene.tx.gain_dbi - scene.rx.gain_dbi;
        taps.push(PathTap::from_loss(
            env.delay_s,
            pl,
            env.phase_rad,
            Direction::new(env.aod_deg[0], env.aod_deg[1]),
            Direction::new(env.aoa_deg[0], env.aoa_deg[1]),
            TapOrigin::Environment,
        ));
    }

    for (idx, target) in scene.targets.iter().enumerate() {
        let (pos, _) =
            interpolate(&target.track, t).ok_or(ChannelError::TrackUndefined { what: "target", t })?;
        if target.blocked {
            continue;
        }
        let geom = SensingGeometry::new(tx, rx, pos)?;
        let model = target.rcs_model();
        let draw_index = match target.rcs_policy {
            RcsPolicy::PerSnapshot => snapshot,
            RcsPolicy::Frozen => u64::MAX,
        };
        let mut rng = stream_rng(rcs_seed, &[idx as u64, draw_index]);
        let gamma = rcs_sample_dbsm(&model, &mut rng);
        let pl = geometry::target_path_loss_db(&geom, gamma, f_ghz, scene.tx.gain_dbi, scene.rx.gain_dbi)?;
        let delay = geometry::bistatic_delay_s(tx, rx, pos)?;
        taps.push(PathTap::from_loss(
            delay,
            pl,
            carrier_phase(delay, f_hz),
            Direction::between(tx, pos),
            Direction::between(rx, pos),
            TapOrigin::Target,
        ));
        targets.push(TargetTruth { index: idx, rcs_dbsm: gamma, path_loss_db: pl, geometry: geom, delay_s: delay });
    }

    taps.sort_by(|a, b| a.delay_s.total_cmp(&b.delay_s));
    Ok(ChannelRealization { taps, timestamp_s: t, delay_bias_s: 0.0, targets })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg7() -> SounderConfig {
        SounderConfig::for_band(7.0).unwrap()
    }

    #[test]
    fn empty_scene_single_los() {
        let scene = Scene::line_of_sight([0.0, 0.0, 2.0], [3.0, 0.0, 2.0]);
        let ch = realize_channel(&scene, 0.0, &cfg7(), 1, 0).unwrap();
        assert_eq!(ch.taps.len(), 1);
        let tap = &ch.taps[0];
        assert_eq!(tap.origin, TapOrigin::LineOfSight);
        assert!((tap.power_db() + 58.8844).abs() < 1e-3);
        assert!((tap.delay_s * 1e9 - 10.007).abs() < 1e-3);
    }

    fn isac_scene(blocked: bool) -> Scene {
        let mut s = Scene::line_of_sight([0.0, 0.0, 10.0], [25.0, 0.0, 2.0]);
        s.targets.push(TargetSpec {
            class: TargetClass::PassengerCar,
            mode: SensingMode::Bistatic,
            track: vec![
                Waypoint { t: 0.0, position: [26.0, 0.0, 1.5], excess_loss_db: 0.0 },
                Waypoint { t: 30.0, position: [226.0, 0.0, 1.5], excess_loss_db: 0.0 },
            ],
            rcs_policy: RcsPolicy::Frozen,
            blocked,
        });
        s
    }

    #[test]
    fn blocked_target_absent() {
        let ch = realize_channel(&isac_scene(true), 1.0, &cfg7(), 1, 0).unwrap();
        assert!(ch.taps.iter().all(|t| t.origin != TapOrigin::Target));
        let ch = realize_channel(&isac_scene(false), 1.0, &cfg7(), 1, 0).unwrap();
        assert_eq!(ch.taps.iter().filter(|t| t.origin == TapOrigin::Target).count(), 1);
    }

    #[test]
    fn receding_target_delay_grows() {
        let s = isac_scene(false);
        let d = |t| {
            let ch = realize_channel(&s, t, &cfg7(), 1, 0).unwrap();
            ch.taps.iter().find(|t| t.origin == TapOrigin::Target).unwrap().delay_s
        };
        assert!(d(10.0) > d(0.0));
        assert!(realize_channel(&s, 31.0, &cfg7(), 1, 0).is_err());
    }

    #[test]
    fn frozen_rcs_is_stable_per_snapshot_is_not() {
        let mut s = isac_scene(false);
        let g = |s: &Scene, snap| realize_channel(s, 1.0, &cfg7(), 9, snap).unwrap().targets[0].rcs_dbsm;
        assert_eq!(g(&s, 0), g(&s, 1));
        s.targets[0].rcs_policy = RcsPolicy::PerSnapshot;
        assert_ne!(g(&s, 0), g(&s, 1));
    }

    #[test]
    fn taps_sorted_and_single_los() {
        let mut s = isac_scene(false);
        s.environment.push(EnvironmentTap {
            delay_s: 50e-9,
            path_loss_db: 90.0,
            phase_rad: 0.0,
            aoa_deg: [10.0, 0.0],
            aod_deg: [0.0, 0.0],
        });
        let ch = realize_channel(&s, 3.0, &cfg7(), 1, 0).unwrap();
        assert!(ch.taps.windows(2).all(|w| w[0].delay_s <= w[1].delay_s));
        assert_eq!(ch.taps.iter().filter(|t| t.origin == TapOrigin::LineOfSight).count(), 1);
    }

    #[test]
    fn scene_json_roundtrip_and_unknown_keys() {
        let s = isac_scene(false);
        let json = s.to_json_pretty();
        assert_eq!(Scene::from_json(&json).unwrap(), s);
        assert!(Scene::from_json(&json.replacen('{', "{\"extra\": 0,", 1)).is_err());
        assert_eq!(s.hash_hex().len(), 64);
    }

    #[test]
    fn interpolation() {
        let tr = [
            Waypoint { t: 0.0, position: [0.0, 0.0, 0.0], excess_loss_db: 0.0 },
            Waypoint { t: 2.0, position: [2.0, 4.0, 0.0], excess_loss_db: 2.0 },
        ];
        let (p, x) = interpolate(&tr, 1.0).unwrap();
        assert_eq!(p, [1.0, 2.0, 0.0]);
        assert_eq!(x, 1.0);
        assert!(interpolate(&tr, -0.1).is_none());
        assert!(interpolate(&tr, 2.1).is_none());
    }
}
