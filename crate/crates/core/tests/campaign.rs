use sounder_core::analysis::{process_recording, residual_peak_trace, DEFAULT_PROMINENCE_DB};
use sounder_core::array::{build_beam_table, build_scan_schedule, ScanSchedule};
use sounder_core::campaign::{
    build_schedule, calibrate_system, nodes_for_scene, reference_scene, run_campaign, CampaignError, ClockSource,
    NodeClock, ReceiverKind, ReceiverSetup, Seeds,
};
use sounder_core::channel::{bistatic_delay_s, RcsPolicy, Scene, SensingMode, TargetClass, TargetSpec, Waypoint};
use sounder_core::receiver::{local_maxima, total_power_dbm, DEFAULT_MARGIN_DB};
use sounder_core::recording::write_recording;
use sounder_core::{BandPlan, SounderConfig};

fn omni_run(cfg: &SounderConfig, scene: &Scene, rx_clock: NodeClock, period: f64, n: u64, seeds: &Seeds) -> Result<sounder_core::recording::Recording, CampaignError> {
    let nodes = nodes_for_scene(scene, NodeClock::ideal(), rx_clock);
    let schedule = build_schedule(&nodes, &ScanSchedule::omni(cfg), period, n)?;
    run_campaign(&schedule, scene, cfg, seeds, &ReceiverSetup::default())
}

#[test]
fn identical_seeds_identical_bytes() {
    let cfg = SounderConfig::for_band(8.3).unwrap();
    let scene = reference_scene(20.0);
    let a = write_recording(&omni_run(&cfg, &scene, NodeClock::ideal(), 1e-3, 4, &Seeds::default()).unwrap()).unwrap();
    let b = write_recording(&omni_run(&cfg, &scene, NodeClock::ideal(), 1e-3, 4, &Seeds::default()).unwrap()).unwrap();
    assert_eq!(a, b);
    let other = Seeds { noise: Some(2), ..Seeds::default() };
    let c = write_recording(&omni_run(&cfg, &scene, NodeClock::ideal(), 1e-3, 4, &other).unwrap()).unwrap();
    assert_ne!(a, c);
}

#[test]
fn array_sweep_records_are_time_ordered() {
    let cfg = SounderConfig::for_band(14.5).unwrap();
    let scene = reference_scene(15.0);
    let beams = build_beam_table(&BandPlan::for_ghz(14.5).unwrap()).unwrap();
    let sweep = build_scan_schedule(&beams, &cfg, 0.0).unwrap();
    let nodes = nodes_for_scene(&scene, NodeClock::ideal(), NodeClock::ideal());
    let schedule = build_schedule(&nodes, &sweep, 1e-3, 2).unwrap();
    let setup = ReceiverSetup { kind: ReceiverKind::Array, calibration: None };
    let rec = run_campaign(&schedule, &scene, &cfg, &Seeds::default(), &setup).unwrap();
    assert_eq!(rec.records.len(), 2 * beams.len());
    for w in rec.records.windows(2) {
        assert!((w[0].timestamp_ns, w[0].node_id, w[0].array_id) <= (w[1].timestamp_ns, w[1].node_id, w[1].array_id));
    }
    let processed = process_recording(&rec, DEFAULT_MARGIN_DB).unwrap();
    assert_eq!(processed.len(), 2);
    assert_eq!(processed[0].beam_pdps.len(), 80);
}

#[test]
fn calibrated_reference_scene_reads_expected_power() {
    let cfg = SounderConfig::for_band(7.0).unwrap();
    let seeds = Seeds::default();
    let fe = seeds.front_ends(&cfg, ReceiverKind::Omni);
    let (cal, report) = calibrate_system(&cfg, ReceiverKind::Omni, &fe, 11).unwrap();
    assert!(report.passed());
    let scene = reference_scene(3.0);
    let nodes = nodes_for_scene(&scene, NodeClock::ideal(), NodeClock::ideal());
    let schedule = build_schedule(&nodes, &ScanSchedule::omni(&cfg), 1e-3, 3).unwrap();
    let setup = ReceiverSetup { kind: ReceiverKind::Omni, calibration: Some(cal) };
    let rec = run_campaign(&schedule, &scene, &cfg, &seeds, &setup).unwrap();
    for snap in process_recording(&rec, DEFAULT_MARGIN_DB).unwrap() {
        let p = total_power_dbm(&snap.omni).dbm().unwrap();
        assert!((p + 15.88).abs() <= 0.1, "{p}");
    }
}

#[test]
fn clock_drift_shifts_peak_by_whole_bins() {
    let cfg = SounderConfig::for_band(7.0).unwrap();
    // LOS delay of exactly 10 tap spacings
    let scene = reference_scene(10.0 * cfg.range_per_tap_m());
    let noiseless = Seeds { noise: None, front_end: None, ..Seeds::default() };
    let peaks = |clock: NodeClock| -> Vec<Vec<usize>> {
        let rec = omni_run(&cfg, &scene, clock, 30.0, 2, &noiseless).unwrap();
        process_recording(&rec, DEFAULT_MARGIN_DB).unwrap().iter().map(|s| local_maxima(&s.omni)).collect()
    };
    let ideal = peaks(NodeClock::ideal());
    assert_eq!(ideal[0], vec![10]);
    assert_eq!(ideal[1], vec![10]);

    let drifting = NodeClock { drift: 1e-9, ..NodeClock::ideal() };
    let d = peaks(drifting);
    assert_eq!(d[0], vec![10]);
    assert_eq!(d[1], vec![22], "30 ns at t = 30 s is 12 bins");

    // well under half a tap spacing: bins unchanged
    let small = NodeClock { drift: 1e-11, offset_s: 0.2e-9, ..NodeClock::ideal() };
    assert_eq!(peaks(small), ideal);
}

#[test]
fn skew_beyond_margin_rejected() {
    let cfg = SounderConfig::for_band(7.0).unwrap();
    let scene = reference_scene(10.0);
    let bad = NodeClock { offset_s: 9e-6, ..NodeClock::ideal() };
    assert!(matches!(omni_run(&cfg, &scene, bad, 1e-3, 1, &Seeds::default()), Err(CampaignError::ClockMargin { .. })));
    let ok = NodeClock::preset(ClockSource::Gnss, 3);
    assert!(omni_run(&cfg, &scene, ok, 1e-3, 1, &Seeds::default()).is_ok());
}

#[test]
fn scene_time_range_enforced() {
    let cfg = SounderConfig::for_band(7.0).unwrap();
    let mut scene = reference_scene(10.0);
    scene.targets.push(TargetSpec {
        class: TargetClass::Pedestrian,
        mode: SensingMode::Bistatic,
        track: vec![Waypoint { t: 0.0, position: [5.0, 3.0, 1.0], excess_loss_db: 0.0 }, Waypoint { t: 1.0, position: [5.0, 4.0, 1.0], excess_loss_db: 0.0 }],
        rcs_policy: RcsPolicy::PerSnapshot,
        blocked: false,
    });
    assert!(omni_run(&cfg, &scene, NodeClock::ideal(), 0.5, 2, &Seeds::default()).is_ok());
    assert!(matches!(omni_run(&cfg, &scene, NodeClock::ideal(), 0.5, 3, &Seeds::default()), Err(CampaignError::TimeRange { .. })));
}

#[test]
fn receding_car_traces_a_rising_delay() {
    let cfg = SounderConfig::for_band(7.0).unwrap();
    let tx = [0.0, 0.0, 10.0];
    // LOS on the tap grid (35 spacings, about 25 m ground range) so its
    // delay-domain leakage does not lift the tail noise estimate
    let los = 35.0 * cfg.range_per_tap_m();
    let rx = [(los * los - 64.0).sqrt(), 0.0, 2.0];
    let start = [26.0, 0.0, 1.5];
    let end = [226.0, 0.0, 1.5];
    let mut scene = Scene::line_of_sight(tx, rx);
    scene.targets.push(TargetSpec {
        class: TargetClass::PassengerCar,
        mode: SensingMode::Bistatic,
        track: vec![Waypoint { t: 0.0, position: start, excess_loss_db: 0.0 }, Waypoint { t: 30.0, position: end, excess_loss_db: 0.0 }],
        rcs_policy: RcsPolicy::PerSnapshot,
        blocked: false,
    });
    let seeds = Seeds::default();
    let (cal, _) = calibrate_system(&cfg, ReceiverKind::Omni, &seeds.front_ends(&cfg, ReceiverKind::Omni), 7).unwrap();
    let n = 60;
    let nodes = nodes_for_scene(&scene, NodeClock::ideal(), NodeClock::ideal());
    let schedule = build_schedule(&nodes, &ScanSchedule::omni(&cfg), 0.5, n).unwrap();
    let rec = run_campaign(&schedule, &scene, &cfg, &seeds, &ReceiverSetup { kind: ReceiverKind::Omni, calibration: Some(cal) }).unwrap();
    let omni: Vec<_> = process_recording(&rec, DEFAULT_MARGIN_DB).unwrap().into_iter().map(|s| s.omni).collect();
    let trace = residual_peak_trace(&omni, DEFAULT_PROMINENCE_DB);
    let spacing = cfg.tap_spacing_s();
    let mut detected = Vec::new();
    for (k, tau) in trace.iter().enumerate() {
        let u = k as f64 * 0.5 / 30.0;
        let pos = [start[0] + u * (end[0] - start[0]), 0.0, 1.5];
        let expected = bistatic_delay_s(tx, rx, pos).unwrap();
        if let Some(tau) = tau {
            assert!((tau - expected).abs() <= 1.5 * spacing, "snapshot {k}: {tau} vs {expected}");
            detected.push(*tau);
        }
    }
    assert!(detected.len() >= 54, "{} of {n} detected", detected.len());
    assert!(detected.windows(2).all(|w| w[1] > w[0]));
}
