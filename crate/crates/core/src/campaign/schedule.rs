//! Global transmission and reception schedule.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::clock::NodeClock;
use super::CampaignError;
use crate::array::{ScanSchedule, OMNI_BEAM};
use crate::config::SounderConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    Transmitter,
    Receiver,
    /// Transmits and captures on one node (monostatic sensing). Needs a
    /// full-duplex front end, so the no-simultaneous-TX/RX rule is waived.
    Duplex,
}

impl NodeRole {
    pub fn transmits(self) -> bool {
        matches!(self, NodeRole::Transmitter | NodeRole::Duplex)
    }

    pub fn captures(self) -> bool {
        matches!(self, NodeRole::Receiver | NodeRole::Duplex)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub node_id: u16,
    pub role: NodeRole,
    #[serde(default)]
    pub clock: NodeClock,
}

/// One scheduled capture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduledCapture {
    pub snapshot: u64,
    pub node_id: u16,
    pub array_id: u8,
    pub beam_id: u16,
    /// Global start time.
    pub start_s: f64,
    pub dwell_s: f64,
}

/// What a node does over the campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    /// Repeats the sounding frame back to back from `start_s` for `duration_s`.
    Transmit { start_s: f64, duration_s: f64 },
    /// Runs the sweep once per snapshot period.
    Capture { first_start_s: f64, period_s: f64, n_snapshots: u64, captures_per_snapshot: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeActions {
    pub node_id: u16,
    pub actions: Vec<Action>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TxRxSchedule {
    pub epoch_s: f64,
    pub snapshot_period_s: f64,
    pub n_snapshots: u64,
    pub sweep: ScanSchedule,
    pub nodes: Vec<NodeSpec>,
    pub per_node: Vec<NodeActions>,
}

impl TxRxSchedule {
    pub fn duration_s(&self) -> f64 {
        self.n_snapshots as f64 * self.snapshot_period_s
    }

    pub fn transmitter(&self) -> &NodeSpec {
        self.nodes.iter().find(|n| n.role.transmits()).expect("validated schedule has a transmitter")
    }

    pub fn receiver(&self) -> &NodeSpec {
        self.nodes.iter().find(|n| n.role.captures()).expect("validated schedule has a receiver")
    }

    pub fn captures_per_snapshot(&self) -> usize {
        self.sweep.entries.len()
    }

    pub fn snapshot_start_s(&self, snapshot: u64) -> f64 {
        self.epoch_s + snapshot as f64 * self.snapshot_period_s
    }

    /// Captures of one snapshot, in sweep order.
    pub fn snapshot_captures(&self, snapshot: u64) -> impl Iterator<Item = ScheduledCapture> + '_ {
        let rx = self.receiver().node_id;
        let t0 = self.snapshot_start_s(snapshot);
        self.sweep.entries.iter().map(move |e| ScheduledCapture {
            snapshot,
            node_id: rx,
            array_id: if e.beam_id == OMNI_BEAM { 0 } else { e.face_id },
            beam_id: e.beam_id,
            start_s: t0 + e.time_offset_s,
            dwell_s: e.dwell_s,
        })
    }

    pub fn captures(&self) -> impl Iterator<Item = ScheduledCapture> + '_ {
        (0..self.n_snapshots).flat_map(move |s| self.snapshot_captures(s))
    }

    /// Hex SHA-256 of the compact JSON form.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("schedule serializes");
        Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Largest timing error the clocks can put on a capture over the campaign.
    pub fn worst_case_skew_s(&self) -> f64 {
        let horizon = self.epoch_s + self.duration_s();
        self.transmitter().clock.worst_case_error_s(horizon) + self.receiver().clock.worst_case_error_s(horizon)
    }

    /// Clock skew must leave the delay window free of aliasing: skew plus the
    /// maximum excess delay stays inside one ZC period.
    pub fn check_clock_margin(&self, cfg: &SounderConfig) -> Result<(), CampaignError> {
        let margin = cfg.zc_period_s() - cfg.max_excess_delay_s;
        let skew = self.worst_case_skew_s();
        if skew > margin {
            return Err(CampaignError::ClockMargin { skew_s: skew, margin_s: margin });
        }
        Ok(())
    }

    /// No node transmits and captures at the same time unless it is duplex.
    pub fn check_half_duplex(&self) -> Result<(), CampaignError> {
        for n in &self.nodes {
            if n.role == NodeRole::Duplex {
                continue;
            }
            let acts = self.per_node.iter().find(|a| a.node_id == n.node_id);
            if let Some(acts) = acts {
                let tx = acts.actions.iter().any(|a| matches!(a, Action::Transmit { .. }));
                let rx = acts.actions.iter().any(|a| matches!(a, Action::Capture { .. }));
                if tx && rx {
                    return Err(CampaignError::Nodes(format!("node {} both transmits and captures", n.node_id)));
                }
            }
        }
        Ok(())
    }
}

/// Builds the campaign schedule. The transmitter runs continuously; the
/// receiving node repeats `sweep` every `snapshot_period_s`.
pub fn build_schedule(
    nodes: &[NodeSpec],
    sweep: &ScanSchedule,
    snapshot_period_s: f64,
    n_snapshots: u64,
) -> Result<TxRxSchedule, CampaignError> {
    let minimum = sweep.total_duration_s;
    if !(snapshot_period_s >= minimum * (1.0 - 1e-12)) {
        return Err(CampaignError::PeriodTooShort { period_s: snapshot_period_s, minimum_s: minimum });
    }
    if n_snapshots == 0 {
        return Err(CampaignError::Nodes("at least one snapshot required".into()));
    }
    let txs = nodes.iter().filter(|n| n.role.transmits()).count();
    let rxs = nodes.iter().filter(|n| n.role.captures()).count();
    if txs != 1 || rxs != 1 {
        return Err(CampaignError::Nodes(format!(
            "need exactly one transmitting and one capturing node, got {txs} and {rxs}"
        )));
    }
    let mut ids: Vec<u16> = nodes.iter().map(|n| n.node_id).collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() != nodes.len() {
        return Err(CampaignError::Nodes("duplicate node id".into()));
    }

    let duration = n_snapshots as f64 * snapshot_period_s;
    let per_node = nodes
        .iter()
        .map(|n| {
            let mut actions = Vec::new();
            if n.role.transmits() {
                actions.push(Action::Transmit { start_s: 0.0, duration_s: duration });
            }
            if n.role.captures() {
                actions.push(Action::Capture {
                    first_start_s: 0.0,
                    period_s: snapshot_period_s,
                    n_snapshots,
                    captures_per_snapshot: sweep.entries.len(),
                });
            }
            NodeActions { node_id: n.node_id, actions }
        })
        .collect();
    let schedule = TxRxSchedule {
        epoch_s: 0.0,
        snapshot_period_s,
        n_snapshots,
        sweep: sweep.clone(),
        nodes: nodes.to_vec(),
        per_node,
    };
    schedule.check_half_duplex()?;
    Ok(schedule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{build_beam_table, build_scan_schedule};
    use crate::config::BandPlan;

    fn pair() -> Vec<NodeSpec> {
        vec![
            NodeSpec { node_id: 0, role: NodeRole::Transmitter, clock: NodeClock::ideal() },
            NodeSpec { node_id: 1, role: NodeRole::Receiver, clock: NodeClock::ideal() },
        ]
    }

    #[test]
    fn thirty_second_campaign() {
        let cfg = SounderConfig::for_band(14.5).unwrap();
        let beams = build_beam_table(&BandPlan::for_ghz(14.5).unwrap()).unwrap();
        let sweep = build_scan_schedule(&beams, &cfg, 0.0).unwrap();
        let s = build_schedule(&pair(), &sweep, 1e-3, 30_000).unwrap();
        assert!((s.duration_s() - 30.0).abs() < 1e-9);
        assert_eq!(s.captures_per_snapshot(), 80);
        assert!(s.check_clock_margin(&cfg).is_ok());
    }

    #[test]
    fn single_omni_capture() {
        let cfg = SounderConfig::for_band(7.0).unwrap();
        let s = build_schedule(&pair(), &ScanSchedule::omni(&cfg), 1e-3, 1).unwrap();
        let caps: Vec<_> = s.captures().collect();
        assert_eq!(caps.len(), 1);
        assert!((caps[0].dwell_s - 33.333e-6).abs() < 1e-9);
        assert_eq!(caps[0].beam_id, OMNI_BEAM);
    }

    #[test]
    fn period_too_short_reports_minimum() {
        let cfg = SounderConfig::for_band(14.5).unwrap();
        let beams = build_beam_table(&BandPlan::for_ghz(14.5).unwrap()).unwrap();
        let sweep = build_scan_schedule(&beams, &cfg, 11.6e-6).unwrap();
        match build_schedule(&pair(), &sweep, 0.4e-3, 10) {
            Err(CampaignError::PeriodTooShort { minimum_s, .. }) => assert!((minimum_s - 0.9e-3).abs() < 2e-6),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn monostatic_duplex_node() {
        let cfg = SounderConfig::for_band(7.0).unwrap();
        let nodes = [NodeSpec { node_id: 3, role: NodeRole::Duplex, clock: NodeClock::ideal() }];
        let s = build_schedule(&nodes, &ScanSchedule::omni(&cfg), 1e-3, 2).unwrap();
        assert_eq!(s.transmitter().node_id, s.receiver().node_id);
        assert_eq!(s.per_node[0].actions.len(), 2);
    }

    #[test]
    fn node_set_validation() {
        let cfg = SounderConfig::for_band(7.0).unwrap();
        let sweep = ScanSchedule::omni(&cfg);
        let only_tx = [NodeSpec { node_id: 0, role: NodeRole::Transmitter, clock: NodeClock::ideal() }];
        assert!(build_schedule(&only_tx, &sweep, 1e-3, 1).is_err());
        let mut dup = pair();
        dup[1].node_id = 0;
        assert!(build_schedule(&dup, &sweep, 1e-3, 1).is_err());
    }

    #[test]
    fn clock_margin_violation() {
        let cfg = SounderConfig::for_band(7.0).unwrap();
        let mut nodes = pair();
        nodes[1].clock.offset_s = 1e-6;
        let s = build_schedule(&nodes, &ScanSchedule::omni(&cfg), 1e-3, 1).unwrap();
        assert!(matches!(s.check_clock_margin(&cfg), Err(CampaignError::ClockMargin { .. })));
    }
}
