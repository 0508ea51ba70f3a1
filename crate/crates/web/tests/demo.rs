use sounder_web::{beam_grid, max_path_loss_db, simulate_pdp};

#[test]
fn link_budget_matches_cli_default() {
    let pl = max_path_loss_db(14.5, 15.0, 3.0).unwrap();
    assert!((pl - 175.9).abs() < 0.05, "{pl}");
    assert!(max_path_loss_db(9.0, 15.0, 3.0).is_err());
}

#[test]
fn simulated_profile_reads_free_space_power() {
    let view = simulate_pdp(14.5, 30.0, 0.0, f64::NAN, 3).unwrap();
    let expected = 43.0 - view.fspl_db();
    assert!((view.total_dbm() - expected).abs() < 0.2, "{} vs {expected}", view.total_dbm());
    assert_eq!(view.delays_ns().len(), 3343);
    assert!(view.threshold_dbm() < expected);
}

#[test]
fn reflector_shows_as_second_peak() {
    let view = simulate_pdp(8.3, 20.0, 300.0, 95.0, 1).unwrap();
    let delays = view.delays_ns();
    let peaks: Vec<f64> = view.peaks().iter().map(|&i| delays[i as usize]).collect();
    assert!(peaks.iter().any(|d| (d - 300.0).abs() < 3.0), "{peaks:?}");
}

#[test]
fn beam_grid_covers_four_faces() {
    let grid = beam_grid(8.3, 0.0).unwrap();
    assert_eq!(grid.az_deg().len(), 60);
    assert!((grid.sweep_ms() - 0.5).abs() < 1e-9);
    assert!(beam_grid(7.0, 0.0).is_err());
}
