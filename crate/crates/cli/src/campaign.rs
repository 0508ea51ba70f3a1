//! Campaign description files and the bundled example inputs.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sounder_core::array::{build_beam_table, build_scan_schedule, ScanSchedule};
use sounder_core::campaign::{build_schedule, nodes_for_scene, NodeClock, ReceiverKind, Seeds, TxRxSchedule};
use sounder_core::channel::Scene;
use sounder_core::SounderConfig;

pub const BUNDLED: [(&str, &str); 3] = [
    ("default14g5.json", include_str!("../data/default14g5.json")),
    ("fspl_scene.json", include_str!("../data/fspl_scene.json")),
    ("fspl_campaign.json", include_str!("../data/fspl_campaign.json")),
];

/// Reads `path`, falling back to a bundled file of the same name.
pub fn read_input(path: &Path) -> Result<String> {
    match std::fs::read_to_string(path) {
        Ok(text) => Ok(text),
        Err(e) => {
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            match BUNDLED.iter().find(|(n, _)| *n == name && path.parent().is_none_or(|p| p.as_os_str().is_empty())) {
                Some((_, text)) => Ok(text.to_string()),
                None => Err(e).with_context(|| format!("reading {}", path.display())),
            }
        }
    }
}

pub fn load_config(path: &Path) -> Result<SounderConfig> {
    Ok(SounderConfig::from_json(&read_input(path)?)?)
}

pub fn load_scene(path: &Path) -> Result<Scene> {
    Ok(Scene::from_json(&read_input(path)?)?)
}

/// Either a path (relative to the campaign file) or the value inline.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source<T> {
    Path(PathBuf),
    Inline(T),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Clocks {
    #[serde(default)]
    pub tx: NodeClock,
    #[serde(default)]
    pub rx: NodeClock,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignFile {
    pub config: Source<SounderConfig>,
    pub scene: Source<Scene>,
    #[serde(default)]
    pub receiver: ReceiverKind,
    pub snapshot_period_s: f64,
    pub n_snapshots: u64,
    /// Gap between beam dwells, array receivers only.
    #[serde(default)]
    pub guard_s: f64,
    #[serde(default)]
    pub seeds: Seeds,
    /// Run the calibration procedure before the campaign.
    #[serde(default = "yes")]
    pub calibrate: bool,
    #[serde(default)]
    pub clocks: Clocks,
}

fn yes() -> bool {
    true
}

/// A campaign file with its config and scene resolved.
#[derive(Debug, Clone)]
pub struct Campaign {
    pub config: SounderConfig,
    pub scene: Scene,
    pub file: CampaignFile,
}

impl Campaign {
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_input(path)?;
        let file: CampaignFile =
            serde_json::from_str(&text).with_context(|| format!("parsing campaign {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let config = match &file.config {
            Source::Path(p) => load_config(&base.join(p))?,
            Source::Inline(c) => c.clone(),
        };
        let scene = match &file.scene {
            Source::Path(p) => load_scene(&base.join(p))?,
            Source::Inline(s) => s.clone(),
        };
        Ok(Self { config, scene, file })
    }

    pub fn sweep(&self) -> Result<ScanSchedule> {
        Ok(match self.file.receiver {
            ReceiverKind::Omni => ScanSchedule::omni(&self.config),
            ReceiverKind::Array => {
                let beams = build_beam_table(&self.config.band)?;
                build_scan_schedule(&beams, &self.config, self.file.guard_s)?
            }
        })
    }

    pub fn schedule(&self) -> Result<TxRxSchedule> {
        let nodes = nodes_for_scene(&self.scene, self.file.clocks.tx, self.file.clocks.rx);
        Ok(build_schedule(&nodes, &self.sweep()?, self.file.snapshot_period_s, self.file.n_snapshots)?)
    }
}
