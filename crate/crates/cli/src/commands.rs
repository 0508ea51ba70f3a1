use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use sounder_core::analysis::{
    build_padp, build_pap, estimate_rcs, fit_normal, fit_path_loss_with, isolate_target, link_budget,
    path_loss_from_capture, InterceptMode, PadpAxis, PathLossSample,
};
use sounder_core::array::build_beam_table;
use sounder_core::calibration::CalReport;
use sounder_core::campaign::{calibrate_system, run_campaign, CampaignError, ReceiverKind, ReceiverSetup, Seeds};
use sounder_core::channel::geometry::distance;
use sounder_core::channel::scene::interpolate;
use sounder_core::channel::{bistatic_delay_s, Scene, SensingGeometry};
use sounder_core::export::{write_csv, BeamTable, CsvTable, PdpTable};
use sounder_core::receiver::{dbm_to_mw, total_power_dbm, TotalPower, DEFAULT_MARGIN_DB};
use sounder_core::recording::write_recording;
use sounder_core::waveform::build_sounding_frame;
use sounder_core::{validate_config, SounderConfig};

use crate::artifact::{
    is_recording, load_processed, load_recording, process, read_artifact, Artifact, CalibrationFile, PathLossReport,
    TargetSample, TargetSeries,
};
use crate::campaign::{load_config, load_scene, Campaign};
use crate::{Cli, Command, Global, GridAxis, OutFormat, Receiver};

/// Marks an error as an input that failed validation (exit status 1).
#[derive(Debug)]
pub struct Invalid(anyhow::Error);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for Invalid {}

trait InvalidExt<T> {
    fn invalid(self) -> Result<T>;
}

impl<T, E: Into<anyhow::Error>> InvalidExt<T> for std::result::Result<T, E> {
    fn invalid(self) -> Result<T> {
        self.map_err(|e| anyhow::Error::new(Invalid(e.into())))
    }
}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Invalid(anyhow!(msg.into())))
}

pub fn exit_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|e| e.is::<Invalid>()) {
        1
    } else {
        2
    }
}

const DEFAULT_CONFIG: &str = "default14g5.json";

fn config(g: &Global) -> Result<SounderConfig> {
    let path = g.config.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_CONFIG));
    let cfg = load_config(&path).invalid()?;
    validate_config(cfg).invalid()
}

fn scene(g: &Global) -> Result<Scene> {
    let path = g.scene.as_ref().ok_or_else(|| invalid("--scene is required"))?;
    load_scene(path).invalid()
}

fn seeds_with(base: Seeds, seed: Option<u64>) -> Seeds {
    match seed {
        Some(s) => Seeds { noise: Some(s), rcs: s, front_end: Some(s) },
        None => base,
    }
}

fn out_path(g: &Global, default_name: Option<&str>) -> Option<PathBuf> {
    match (&g.out, default_name) {
        (Some(p), _) if p.is_relative() => Some(g.out_dir.as_ref().map_or_else(|| p.clone(), |d| d.join(p))),
        (Some(p), _) => Some(p.clone()),
        (None, Some(name)) => Some(g.out_dir.clone().unwrap_or_default().join(name)),
        (None, None) => None,
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn json_bytes(value: &impl Serialize) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Writes `json` or `table` depending on --format, to the output path or, when
/// there is none, to stdout.
fn emit(g: &Global, json: &impl Serialize, table: Option<&dyn CsvTable>, default_name: Option<&str>) -> Result<Option<PathBuf>> {
    let bytes = match (g.format, table) {
        (OutFormat::Json, _) => json_bytes(json)?,
        (OutFormat::Csv, Some(t)) => {
            let mut buf = Vec::new();
            write_csv(t, &mut buf)?;
            buf
        }
        (OutFormat::Csv, None) => return Err(invalid("this output has no CSV form; use --format json")),
    };
    match out_path(g, default_name) {
        Some(p) => {
            write_file(&p, &bytes)?;
            Ok(Some(p))
        }
        None => {
            std::io::stdout().write_all(&bytes)?;
            Ok(None)
        }
    }
}

/// Writes the artifact only when --out was given.
fn emit_optional(g: &Global, json: &impl Serialize, table: Option<&dyn CsvTable>) -> Result<()> {
    if g.out.is_some() {
        if let Some(p) = emit(g, json, table, None)? {
            println!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn campaign_invalid(e: CampaignError) -> anyhow::Error {
    match e {
        CampaignError::PeriodTooShort { .. }
        | CampaignError::ClockMargin { .. }
        | CampaignError::Nodes(_)
        | CampaignError::TimeRange { .. }
        | CampaignError::Setup(_) => anyhow::Error::new(Invalid(e.into())),
        other => other.into(),
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Validate => validate(g),
        Command::Waveform { root } => waveform(g, *root),
        Command::Simulate { campaign, calibration } => simulate(g, campaign.as_deref(), calibration.as_deref()),
        Command::Calibrate { campaign, receiver } => calibrate(g, campaign.as_deref(), *receiver),
        Command::Process { recording, margin_db } => process_cmd(g, recording, *margin_db),
        Command::FitPathloss { input, g_rx, d0, anchored } => fit_pathloss(g, input, *g_rx, *d0, *anchored),
        Command::Padp { input, axis, snapshot } => padp(g, input, *axis, *snapshot),
        Command::IsolateTarget { input, target, window_taps } => isolate(g, input, *target, *window_taps),
        Command::FitRcs { input, g_tx, g_rx } => fit_rcs(g, input, *g_tx, *g_rx),
        Command::LinkBudget { g_rx, snr_min } => link_budget_cmd(g, *g_rx, *snr_min),
        Command::Export { input } => export(g, input),
    }
}

fn validate(g: &Global) -> Result<()> {
    let path = g.config.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_CONFIG));
    let cfg = load_config(&path).invalid()?;
    match validate_config(cfg) {
        Ok(cfg) => println!("{}: valid ({} GHz, {} beams per array)", path.display(), cfg.center_ghz(), cfg.band.beams_per_array),
        Err(sounder_core::ConfigError::Invalid(violations)) => {
            for v in &violations {
                println!("violation: {v}");
            }
            return Err(invalid(format!("{}: {} violation(s)", path.display(), violations.len())));
        }
        Err(e) => return Err(e).invalid(),
    }
    if let Some(p) = &g.scene {
        let scene = load_scene(p).invalid()?;
        let (start, end) = scene.time_range();
        println!("{}: valid ({} environment taps, {} targets, t in [{start}, {end}] s)", p.display(), scene.environment.len(), scene.targets.len());
    }
    Ok(())
}

#[derive(Serialize)]
struct WaveformStats {
    center_ghz: f64,
    zc_root: u64,
    zc_length: usize,
    fft_size: usize,
    repetitions: usize,
    subcarrier_spacing_hz: f64,
    occupied_bandwidth_hz: f64,
    sample_rate_hz: f64,
    zc_period_s: f64,
    frame_duration_s: f64,
    frame_samples: usize,
    tap_spacing_s: f64,
    range_per_tap_m: f64,
    max_excess_delay_s: f64,
    processing_gain_db: f64,
    papr_db: f64,
}

impl CsvTable for WaveformStats {
    fn header(&self) -> Vec<String> {
        vec!["quantity".into(), "value".into()]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        let value = serde_json::to_value(self).expect("stats serialize");
        let serde_json::Value::Object(map) = value else { return Vec::new() };
        map.into_iter().map(|(k, v)| vec![k, v.to_string()]).collect()
    }
}

fn waveform(g: &Global, root: u64) -> Result<()> {
    let cfg = config(g)?;
    let frame = build_sounding_frame(&cfg, root).invalid()?;
    let samples = &frame.baseband.samples;
    let peak = samples.iter().map(|x| x.norm_sqr()).fold(0.0, f64::max);
    let stats = WaveformStats {
        center_ghz: cfg.center_ghz(),
        zc_root: root,
        zc_length: cfg.zc_length,
        fft_size: cfg.fft_size,
        repetitions: frame.repetitions,
        subcarrier_spacing_hz: cfg.subcarrier_spacing_hz,
        occupied_bandwidth_hz: cfg.occupied_bandwidth_hz(),
        sample_rate_hz: cfg.sample_rate_hz(),
        zc_period_s: cfg.zc_period_s(),
        frame_duration_s: cfg.frame_duration_s(),
        frame_samples: samples.len(),
        tap_spacing_s: cfg.tap_spacing_s(),
        range_per_tap_m: cfg.range_per_tap_m(),
        max_excess_delay_s: cfg.max_excess_delay_s,
        processing_gain_db: cfg.processing_gain_db(),
        papr_db: 10.0 * (peak / frame.baseband.mean_power()).log10(),
    };
    emit(g, &stats, Some(&stats), None)?;
    Ok(())
}

fn load_campaign(g: &Global, path: &Path) -> Result<Campaign> {
    let mut c = Campaign::load(path).invalid()?;
    if g.config.is_some() {
        c.config = config(g)?;
    }
    if g.scene.is_some() {
        c.scene = scene(g)?;
    }
    c.config = validate_config(c.config).invalid()?;
    c.file.seeds = seeds_with(c.file.seeds, g.seed);
    Ok(c)
}

fn print_report(report: &CalReport) {
    for s in &report.steps {
        let metrics: Vec<String> = s.metrics.iter().map(|(k, v)| format!("{k} {v:.4}")).collect();
        println!("step {} {:<24} {} {}", s.step, s.name, if s.passed { "pass" } else { "FAIL" }, metrics.join(", "));
    }
}

fn simulate(g: &Global, campaign: Option<&Path>, calibration: Option<&Path>) -> Result<()> {
    let campaign = campaign.ok_or_else(|| invalid("--campaign is required"))?;
    let c = load_campaign(g, campaign)?;
    let schedule = c.schedule().map_err(|e| match e.downcast::<CampaignError>() {
        Ok(ce) => campaign_invalid(ce),
        Err(e) => anyhow::Error::new(Invalid(e)),
    })?;
    let kind = c.file.receiver;
    let cal = match calibration {
        Some(p) => match read_artifact(p).invalid()? {
            Artifact::Calibration(f) => Some(f.calibration),
            other => return Err(invalid(format!("{} holds a {} artifact, expected calibration", p.display(), other.name()))),
        },
        None if c.file.calibrate => {
            let seeds = c.file.seeds;
            let (cal, report) =
                calibrate_system(&c.config, kind, &seeds.front_ends(&c.config, kind), seeds.noise.unwrap_or(1))?;
            if !report.passed() {
                print_report(&report);
                bail!("calibration failed");
            }
            Some(cal)
        }
        None => None,
    };
    let setup = ReceiverSetup { kind, calibration: cal };
    let rec = run_campaign(&schedule, &c.scene, &c.config, &c.file.seeds, &setup).map_err(campaign_invalid)?;
    let bytes = write_recording(&rec)?;
    let path = out_path(g, Some("recording.csnd")).expect("default name");
    write_file(&path, &bytes)?;
    println!(
        "wrote {} records ({} snapshots x {} captures, {} bytes) to {}",
        rec.records.len(),
        schedule.n_snapshots,
        schedule.captures_per_snapshot(),
        bytes.len(),
        path.display()
    );
    Ok(())
}

fn calibrate(g: &Global, campaign: Option<&Path>, receiver: Option<Receiver>) -> Result<()> {
    let (cfg, mut kind, seeds) = match campaign {
        Some(p) => {
            let c = load_campaign(g, p)?;
            (c.config, c.file.receiver, c.file.seeds)
        }
        None => (config(g)?, ReceiverKind::Omni, seeds_with(Seeds::default(), g.seed)),
    };
    if let Some(r) = receiver {
        kind = match r {
            Receiver::Omni => ReceiverKind::Omni,
            Receiver::Array => ReceiverKind::Array,
        };
    }
    let (calibration, report) =
        calibrate_system(&cfg, kind, &seeds.front_ends(&cfg, kind), seeds.noise.unwrap_or(1)).map_err(campaign_invalid)?;
    print_report(&report);
    let passed = report.passed();
    let file = Artifact::Calibration(CalibrationFile { calibration, report });
    let path = out_path(g, Some("calibration.json")).expect("default name");
    write_file(&path, &json_bytes(&file)?)?;
    println!("wrote {}", path.display());
    if !passed {
        bail!("calibration did not pass");
    }
    Ok(())
}

fn process_cmd(g: &Global, recording: &Path, margin_db: f64) -> Result<()> {
    let rec = load_recording(recording).invalid()?;
    let processed = process(&rec, margin_db)?;
    let pdps: Vec<_> = processed.snapshots.iter().flat_map(|s| s.beam_pdps.iter().cloned()).collect();
    let captures = pdps.len();
    let n = processed.snapshots.len();
    let artifact = Artifact::Processed(processed);
    let path = emit(g, &artifact, Some(&PdpTable(&pdps)), Some("processed.json"))?;
    println!(
        "processed {n} snapshots ({captures} captures, margin {margin_db} dB) into {}",
        path.map(|p| p.display().to_string()).unwrap_or_default()
    );
    Ok(())
}

fn fit_pathloss(g: &Global, input: &Path, g_rx: f64, d0: f64, anchored: bool) -> Result<()> {
    let scene = scene(g)?;
    let processed = load_processed(input, DEFAULT_MARGIN_DB).invalid()?;
    let cfg = &processed.config;
    let mut samples = Vec::new();
    for s in &processed.snapshots {
        let (rx, _) = scene.rx_at(s.timestamp_s).invalid()?;
        if let Some(pl) = path_loss_from_capture(cfg.tx_eirp_dbm, total_power_dbm(&s.omni), g_rx) {
            samples.push(PathLossSample {
                distance_m: distance(scene.tx.position, rx),
                path_loss_db: pl,
                run_id: 0,
                timestamp_s: s.timestamp_s,
            });
        }
    }
    let mode = if anchored { InterceptMode::anchored(cfg.center_ghz()) } else { InterceptMode::Free };
    let fit = fit_path_loss_with(&samples, d0, mode)?;
    println!(
        "PLE {:.2}, sigma_S {:.2} dB, intercept {:.2} dB at d0 = {} m, n = {} ({} snapshots without signal)",
        fit.ple,
        fit.sigma_s_db,
        fit.intercept_at_d0_db,
        fit.d0_m,
        fit.n_samples,
        processed.snapshots.len() - samples.len()
    );
    let report = PathLossReport { fit, samples };
    emit_optional(g, &Artifact::PathLoss(report.clone()), Some(&report))
}

fn padp(g: &Global, input: &Path, axis: GridAxis, snapshot: usize) -> Result<()> {
    let processed = load_processed(input, DEFAULT_MARGIN_DB).invalid()?;
    if processed.receiver != ReceiverKind::Array {
        return Err(invalid("angular grids need an array recording"));
    }
    let snap = processed
        .snapshots
        .get(snapshot)
        .ok_or_else(|| invalid(format!("snapshot {snapshot} out of range (0..{})", processed.snapshots.len())))?;
    let beams = build_beam_table(&processed.config.band)?;
    let grid = match axis {
        GridAxis::Pap => build_pap(&snap.beam_pdps, &beams)?,
        GridAxis::Azimuth => build_padp(&snap.beam_pdps, &beams, PadpAxis::Azimuth)?,
        GridAxis::Elevation => build_padp(&snap.beam_pdps, &beams, PadpAxis::Elevation)?,
    };
    match grid.argmax() {
        Some((r, c)) => println!(
            "{} x {} grid, peak {:.2} dBm at {} {} / {} {}",
            grid.angles_deg.len(),
            grid.columns.len(),
            grid.power_dbm(r, c).unwrap_or(f64::NAN),
            grid.row_label(),
            grid.angles_deg[r],
            grid.column_label(),
            grid.columns[c]
        ),
        None => println!("{} x {} grid, no signal", grid.angles_deg.len(), grid.columns.len()),
    }
    emit_optional(g, &Artifact::Grid(grid.clone()), Some(&grid))
}

fn isolate(g: &Global, input: &Path, target: usize, window_taps: f64) -> Result<()> {
    let scene = scene(g)?;
    let spec = scene
        .targets
        .get(target)
        .ok_or_else(|| invalid(format!("scene has {} target(s), no index {target}", scene.targets.len())))?;
    let processed = load_processed(input, DEFAULT_MARGIN_DB).invalid()?;
    let cfg = &processed.config;
    let tx = scene.tx.position;
    let mut delays = Vec::new();
    let mut geometry = Vec::new();
    for s in &processed.snapshots {
        let t = s.timestamp_s;
        let (rx, _) = scene.rx_at(t).invalid()?;
        let (pos, _) = interpolate(&spec.track, t).ok_or_else(|| invalid(format!("target track undefined at t = {t} s")))?;
        delays.push(bistatic_delay_s(tx, rx, pos).invalid()?);
        geometry.push(SensingGeometry::new(tx, rx, pos).invalid()?);
    }
    let window_s = window_taps * cfg.tap_spacing_s();
    let omni: Vec<_> = processed.snapshots.iter().map(|s| s.omni.clone()).collect();
    let powers = isolate_target(&omni, &delays, window_s).invalid()?;
    let samples: Vec<TargetSample> = processed
        .snapshots
        .iter()
        .zip(delays.iter().zip(geometry))
        .zip(&powers)
        .map(|((s, (&expected_delay_s, geometry)), p)| TargetSample {
            snapshot: s.snapshot,
            timestamp_s: s.timestamp_s,
            expected_delay_s,
            power_dbm: p.dbm(),
            geometry,
        })
        .collect();
    let detected = samples.iter().filter(|s| s.power_dbm.is_some()).count();
    println!("{} snapshots, {detected} with target power, window ±{:.2} ns", samples.len(), window_s * 1e9);
    let series = TargetSeries {
        f_ghz: cfg.center_ghz(),
        tx_eirp_dbm: cfg.tx_eirp_dbm,
        target_class: spec.class,
        mode: spec.mode,
        window_s,
        samples,
    };
    emit_optional(g, &Artifact::Target(series.clone()), Some(&series))
}

fn fit_rcs(g: &Global, input: &Path, g_tx: f64, g_rx: f64) -> Result<()> {
    let series = match read_artifact(input).invalid()? {
        Artifact::Target(t) => t,
        other => return Err(invalid(format!("{} holds a {} artifact, expected target", input.display(), other.name()))),
    };
    let powers: Vec<TotalPower> =
        series.samples.iter().map(|s| s.power_dbm.map_or(TotalPower::NoSignal, |p| TotalPower::from_mw(dbm_to_mw(p)))).collect();
    let geometry: Vec<SensingGeometry> = series.samples.iter().map(|s| s.geometry).collect();
    let est = estimate_rcs(&powers, &geometry, series.f_ghz, series.tx_eirp_dbm, g_tx, g_rx)?;
    let fit = fit_normal(&est.gamma_dbsm, series.target_class, series.mode)?;
    let label = serde_json::to_value((fit.target_class, fit.mode))?;
    println!(
        "{}/{}: mu {:.2} dBsm, sigma {:.2} dBsm, n = {}, excluded {}",
        label[0].as_str().unwrap_or_default(),
        label[1].as_str().unwrap_or_default(),
        fit.mu_dbsm,
        fit.sigma_dbsm,
        fit.n_samples,
        est.excluded
    );
    emit_optional(g, &Artifact::RcsFit(fit), Some(&fit))
}

#[derive(Serialize)]
struct LinkBudget {
    max_path_loss_db: f64,
    g_rx_dbi: f64,
    snr_min_db: f64,
    noise_figure_db: f64,
    processing_gain_db: f64,
    tx_eirp_dbm: f64,
}

fn link_budget_cmd(g: &Global, g_rx: f64, snr_min: f64) -> Result<()> {
    let cfg = config(g)?;
    let pl = link_budget(&cfg, g_rx, snr_min);
    let nf = if g_rx == 0.0 { cfg.rx_noise_figure_omni_db } else { cfg.rx_noise_figure_array_db };
    println!("max measurable path loss {pl:.1} dB (g_rx {g_rx} dBi, snr_min {snr_min} dB, NF {nf} dB)");
    let report = LinkBudget {
        max_path_loss_db: pl,
        g_rx_dbi: g_rx,
        snr_min_db: snr_min,
        noise_figure_db: nf,
        processing_gain_db: cfg.processing_gain_db(),
        tx_eirp_dbm: cfg.tx_eirp_dbm,
    };
    if g.out.is_some() {
        emit(g, &report, None, None)?;
    }
    Ok(())
}

fn export(g: &Global, input: &Path) -> Result<()> {
    if input.as_os_str() == "beams" && !input.exists() {
        let cfg = config(g)?;
        let beams = build_beam_table(&cfg.band).invalid()?;
        emit(g, &beams, Some(&BeamTable(&beams)), None)?;
        return Ok(());
    }
    let bytes = std::fs::read(input).with_context(|| format!("reading {}", input.display())).invalid()?;
    let artifact = if is_recording(&bytes) {
        Artifact::Processed(load_processed(input, DEFAULT_MARGIN_DB)?)
    } else {
        read_artifact(input).invalid()?
    };
    match &artifact {
        Artifact::Processed(p) => {
            let pdps: Vec<_> = p.snapshots.iter().flat_map(|s| s.beam_pdps.iter().cloned()).collect();
            emit(g, &artifact, Some(&PdpTable(&pdps)), None)?
        }
        Artifact::PathLoss(r) => emit(g, &artifact, Some(r), None)?,
        Artifact::Grid(grid) => emit(g, &artifact, Some(grid), None)?,
        Artifact::Target(t) => emit(g, &artifact, Some(t), None)?,
        Artifact::RcsFit(f) => emit(g, &artifact, Some(f), None)?,
        Artifact::Calibration(_) => emit(g, &artifact, None, None)?,
    };
    Ok(())
}
