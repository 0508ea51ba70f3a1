//! Link geometry, free-space loss and the bistatic target path-loss model.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::ChannelError;
use crate::units::{rad2deg, wavelength_m, SPEED_OF_LIGHT};

pub type Vec3 = [f64; 3];

pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn norm(v: Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub fn distance(a: Vec3, b: Vec3) -> f64 {
    norm(sub(a, b))
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Azimuth/elevation pair in degrees. Azimuth is measured counter-clockwise
/// from +x, elevation up from the horizontal plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Direction {
    pub az_deg: f64,
    pub el_deg: f64,
}

impl Direction {
    pub fn new(az_deg: f64, el_deg: f64) -> Self {
        Self { az_deg, el_deg }
    }

    /// Direction of `to` as seen from `from`.
    pub fn between(from: Vec3, to: Vec3) -> Self {
        let d = sub(to, from);
        let horiz = (d[0] * d[0] + d[1] * d[1]).sqrt();
        Self { az_deg: rad2deg(d[1].atan2(d[0])), el_deg: rad2deg(d[2].atan2(horiz)) }
    }
}

fn check_positive(what: &'static str, v: f64) -> Result<(), ChannelError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ChannelError::NonPositive { what, value: v })
    }
}

/// Free-space path loss in dB with antenna gains subtracted:
/// 20·log10(d·f) + 32.44 − g_tx − g_rx, d in meters, f in GHz.
pub fn fspl_db(d_m: f64, f_ghz: f64, g_tx_dbi: f64, g_rx_dbi: f64) -> Result<f64, ChannelError> {
    check_positive("distance", d_m)?;
    check_positive("frequency", f_ghz)?;
    Ok(20.0 * (d_m * f_ghz).log10() + 32.44 - g_tx_dbi - g_rx_dbi)
}

/// Scattering gain of incident power for an RCS γ (dBsm): γ + 10·log10(4π/λ²).
pub fn scattering_gain_db(gamma_dbsm: f64, f_ghz: f64) -> Result<f64, ChannelError> {
    check_positive("frequency", f_ghz)?;
    let lambda = wavelength_m(f_ghz).map_err(|_| ChannelError::NonPositive { what: "frequency", value: f_ghz })?;
    Ok(gamma_dbsm + 10.0 * (4.0 * PI / (lambda * lambda)).log10())
}

/// TX, RX and target placement for one sensing snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensingGeometry {
    pub tx_position: Vec3,
    pub rx_position: Vec3,
    pub target_position: Vec3,
    /// TX → target.
    pub d1: f64,
    /// Target → RX.
    pub d2: f64,
    pub theta_heading_deg: f64,
    /// Angle at the target between the TX and RX lines of sight. Metadata only.
    pub theta_b_deg: f64,
}

impl SensingGeometry {
    pub fn new(tx: Vec3, rx: Vec3, target: Vec3) -> Result<Self, ChannelError> {
        for v in [tx, rx, target] {
            if v.iter().any(|c| !c.is_finite()) {
                return Err(ChannelError::NonFinitePosition);
            }
        }
        let d1 = distance(target, tx);
        let d2 = distance(rx, target);
        if d1 <= 0.0 || d2 <= 0.0 {
            return Err(ChannelError::DegenerateGeometry { d1, d2 });
        }
        let a = sub(tx, target);
        let b = sub(rx, target);
        let cos_b = (dot(a, b) / (d1 * d2)).clamp(-1.0, 1.0);
        Ok(Self {
            tx_position: tx,
            rx_position: rx,
            target_position: target,
            d1,
            d2,
            theta_heading_deg: 0.0,
            theta_b_deg: rad2deg(cos_b.acos()),
        })
    }

    pub fn with_heading(mut self, heading_deg: f64) -> Self {
        self.theta_heading_deg = heading_deg;
        self
    }

    pub fn bistatic_range_m(&self) -> f64 {
        self.d1 + self.d2
    }
}

/// Target path loss PL_1 − G_s + PL_2 in dB.
pub fn target_path_loss_db(
    geom: &SensingGeometry,
    gamma_dbsm: f64,
    f_ghz: f64,
    g_tx_dbi: f64,
    g_rx_dbi: f64,
) -> Result<f64, ChannelError> {
    if geom.d1 <= 0.0 || geom.d2 <= 0.0 {
        return Err(ChannelError::DegenerateGeometry { d1: geom.d1, d2: geom.d2 });
    }
    let pl1 = fspl_db(geom.d1, f_ghz, g_tx_dbi, 0.0)?;
    let pl2 = fspl_db(geom.d2, f_ghz, 0.0, g_rx_dbi)?;
    Ok(pl1 - scattering_gain_db(gamma_dbsm, f_ghz)? + pl2)
}

/// Propagation delay TX → target → RX.
pub fn bistatic_delay_s(tx: Vec3, rx: Vec3, target: Vec3) -> Result<f64, ChannelError> {
    for v in [tx, rx, target] {
        if v.iter().any(|c| !c.is_finite()) {
            return Err(ChannelError::NonFinitePosition);
        }
    }
    Ok((distance(target, tx) + distance(rx, target)) / SPEED_OF_LIGHT)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Hand-evaluated oracle values, independent of the functions above.
    fn by_hand_fspl(d: f64, f: f64) -> f64 {
        20.0 * (d * f).log10() + 32.44
    }

    #[test]
    fn fspl_examples() {
        assert!((fspl_db(1.0, 1.0, 0.0, 0.0).unwrap() - 32.44).abs() < 1e-12);
        assert!((fspl_db(3.0, 7.0, 0.0, 0.0).unwrap() - 58.8844).abs() < 1e-3);
        assert!((fspl_db(76.0, 14.5, 0.0, 0.0).unwrap() - 93.2838).abs() < 1e-3);
        assert!(fspl_db(0.0, 7.0, 0.0, 0.0).is_err());
        assert!(fspl_db(1.0, -7.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn scattering_gain_examples() {
        assert!((scattering_gain_db(0.0, 7.0).unwrap() - 38.358).abs() < 5e-3);
        assert!((scattering_gain_db(0.0, 14.5).unwrap() - 44.682).abs() < 5e-3);
        let a = scattering_gain_db(0.0, 7.0).unwrap();
        assert!((scattering_gain_db(10.0, 7.0).unwrap() - a - 10.0).abs() < 1e-12);
        assert!(scattering_gain_db(0.0, 0.0).is_err());
    }

    #[test]
    fn target_path_loss_example() {
        let g = SensingGeometry::new([0.0, 0.0, 10.0], [25.0, 0.0, 2.0], [50.0, 0.0, 1.0]).unwrap();
        assert!((g.d1 - 50.8035).abs() < 1e-3);
        assert!((g.d2 - 25.02).abs() < 1e-3);
        let pl = target_path_loss_db(&g, 0.0, 7.0, 0.0, 0.0).unwrap();
        let lambda = 0.299_792_458 / 7.0;
        let oracle = by_hand_fspl(g.d1, 7.0) + by_hand_fspl(g.d2, 7.0)
            - 10.0 * (4.0 * std::f64::consts::PI / (lambda * lambda)).log10();
        assert!((pl - oracle).abs() < 1e-9);
        assert!((pl - 122.41).abs() < 0.01);

        let pl_gamma = target_path_loss_db(&g, 7.5, 7.0, 0.0, 0.0).unwrap();
        assert!((pl - pl_gamma - 7.5).abs() < 1e-9);
        let pl_gt = target_path_loss_db(&g, 0.0, 7.0, 10.0, 0.0).unwrap();
        assert!((pl - pl_gt - 10.0).abs() < 1e-9);
    }

    #[test]
    fn swap_symmetry() {
        let g = SensingGeometry::new([0.0, 0.0, 10.0], [25.0, 0.0, 2.0], [50.0, 0.0, 1.0]).unwrap();
        let swapped = SensingGeometry { d1: g.d2, d2: g.d1, ..g };
        let a = target_path_loss_db(&g, 3.0, 11.3, 4.0, 9.0).unwrap();
        let b = target_path_loss_db(&swapped, 3.0, 11.3, 9.0, 4.0).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn degenerate_geometry_rejected() {
        assert!(SensingGeometry::new([0.0; 3], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]).is_err());
        assert!(SensingGeometry::new([0.0; 3], [1.0, 0.0, 0.0], [0.0; 3]).is_err());
    }

    #[test]
    fn bistatic_delay_examples() {
        let tx = [0.0, 0.0, 10.0];
        let rx = [25.0, 0.0, 2.0];
        let d = bistatic_delay_s(tx, rx, rx).unwrap();
        assert!((d * 1e9 - 87.56).abs() < 0.01);
        let mid = [12.5, 0.0, 6.0];
        let los = distance(tx, rx) / SPEED_OF_LIGHT;
        assert!((bistatic_delay_s(tx, rx, mid).unwrap() - los).abs() < 1e-18);
        let mut last = 0.0;
        for k in 1..50 {
            let t = [25.0 + 4.0 * k as f64, 0.0, 1.5];
            let d = bistatic_delay_s(tx, rx, t).unwrap();
            assert!(d > last);
            last = d;
        }
        assert!(bistatic_delay_s(tx, rx, [f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn monostatic_delay_is_round_trip() {
        let tx = [0.0, 0.0, 10.0];
        let t = [40.0, 30.0, 1.0];
        let g = SensingGeometry::new(tx, tx, t).unwrap();
        assert_eq!(g.d1, g.d2);
        let d = bistatic_delay_s(tx, tx, t).unwrap();
        assert!((d - 2.0 * g.d1 / SPEED_OF_LIGHT).abs() < 1e-18);
        assert!(g.theta_b_deg.abs() < 1e-6);
    }

    #[test]
    fn direction_between() {
        let d = Direction::between([0.0; 3], [1.0, 1.0, 0.0]);
        assert!((d.az_deg - 45.0).abs() < 1e-12);
        assert!(d.el_deg.abs() < 1e-12);
        let up = Direction::between([0.0; 3], [1.0, 0.0, 1.0]);
        assert!((up.el_deg - 45.0).abs() < 1e-12);
    }
}
