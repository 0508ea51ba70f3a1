use sounder_core::calibration::REFERENCE_DISTANCE_M;
use sounder_core::campaign::{calibrate_system, reference_scene, FrontEnds, ReceiverKind, Simulator};
use sounder_core::channel::{fspl_db, realize_channel, Direction};
use sounder_core::receiver::{noise_threshold, pdp_from_cir, synthesize_omni_pdp, total_power_dbm, DEFAULT_MARGIN_DB};
use sounder_core::SounderConfig;

fn measured_total(sim: &Simulator, d: f64, orientation: f64, seed: u64) -> f64 {
    let cfg = &sim.cfg;
    let scene = reference_scene(d);
    let ch = realize_channel(&scene, 0.0, cfg, 0, 0).unwrap();
    let pdps: Vec<_> = sim
        .acquire(&ch, orientation, Some(seed))
        .unwrap()
        .iter()
        .map(|c| noise_threshold(&pdp_from_cir(c), DEFAULT_MARGIN_DB).unwrap())
        .collect();
    total_power_dbm(&synthesize_omni_pdp(&pdps).unwrap()).dbm().unwrap()
}

#[test]
fn omni_calibration_reproduces_fspl_in_every_band() {
    for f in [7.0, 8.3, 11.3, 14.5] {
        let cfg = SounderConfig::for_band(f).unwrap();
        let fe = FrontEnds::seeded(&cfg, ReceiverKind::Omni, 21);
        let (cal, report) = calibrate_system(&cfg, ReceiverKind::Omni, &fe, 5).unwrap();
        assert!(report.passed(), "{report:?}");
        let sim = Simulator::new(&cfg, ReceiverKind::Omni, fe, cal).unwrap();
        for d in [REFERENCE_DISTANCE_M, 76.0] {
            let expected = cfg.tx_eirp_dbm - fspl_db(d, f, 0.0, 0.0).unwrap();
            let got = measured_total(&sim, d, 0.0, 99);
            assert!((got - expected).abs() <= 0.1, "{f} GHz {d} m: {got} vs {expected}");
        }
    }
}

#[test]
fn uncalibrated_front_end_is_visibly_off() {
    let cfg = SounderConfig::for_band(8.3).unwrap();
    let fe = FrontEnds::seeded(&cfg, ReceiverKind::Omni, 21).ports[0].clone().with_gain_offset(7.0);
    let fes = FrontEnds { tx_ripple: FrontEnds::ideal(&cfg, ReceiverKind::Omni).tx_ripple, ports: vec![fe] };
    let sim = Simulator::new(&cfg, ReceiverKind::Omni, fes.clone(), Default::default()).unwrap();
    let expected = cfg.tx_eirp_dbm - fspl_db(3.0, 8.3, 0.0, 0.0).unwrap();
    assert!((measured_total(&sim, 3.0, 0.0, 1) - expected - 7.0).abs() < 1.0);
    let (cal, _) = calibrate_system(&cfg, ReceiverKind::Omni, &fes, 2).unwrap();
    let off = cal.port(0).unwrap().offset_db;
    assert!((off + 7.0).abs() < 1.0, "offset {off}");
}

#[test]
fn step3_offset_independent_of_ripple_seed() {
    let cfg = SounderConfig::for_band(11.3).unwrap();
    let offsets: Vec<f64> = [1u64, 2, 3]
        .iter()
        .map(|&s| {
            let mut fe = FrontEnds::seeded(&cfg, ReceiverKind::Omni, s);
            fe.ports[0].rx_gain_offset_db = 2.0;
            calibrate_system(&cfg, ReceiverKind::Omni, &fe, 4).unwrap().0.port(0).unwrap().offset_db
        })
        .collect();
    for o in &offsets {
        assert!((o - offsets[0]).abs() < 0.05, "{offsets:?}");
    }
}

#[test]
fn array_calibration_and_omni_vs_beams() {
    let cfg = SounderConfig::for_band(14.5).unwrap();
    let fe = FrontEnds::seeded(&cfg, ReceiverKind::Array, 31);
    let (cal, report) = calibrate_system(&cfg, ReceiverKind::Array, &fe, 6).unwrap();
    println!("{}", report.to_json_pretty());
    assert!(report.passed(), "{report:?}");
    let sim = Simulator::new(&cfg, ReceiverKind::Array, fe, cal).unwrap();
    // 76 m, 20° off face-0 boresight
    let scene = reference_scene(76.0);
    let az_to_tx = Direction::between(scene.rx.position, scene.tx.position).az_deg;
    let got = measured_total(&sim, 76.0, az_to_tx - 20.0, 7);
    let expected = cfg.tx_eirp_dbm - fspl_db(76.0, 14.5, 0.0, 0.0).unwrap();
    assert!((got - expected).abs() <= 0.2, "{got} vs {expected}");
}
