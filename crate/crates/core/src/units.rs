//! Decibel bookkeeping and physical constants.
//!
//! Three tagged level types keep ratio, absolute power and antenna gain apart:
//!
//! | lhs   | op | rhs   | result |
//! |-------|----|-------|--------|
//! | `Dbm` | +  | `Db`  | `Dbm`  |
//! | `Dbm` | +  | `Dbi` | `Dbm`  |
//! | `Dbm` | -  | `Dbm` | `Db`   |
//! | `Db`  | ±  | `Db`  | `Db`   |
//! | `Dbi` | +  | `Db`  | `Dbi`  |
//!
//! `Dbm + Dbm` has no meaning and does not compile.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Thermal noise density at 290 K, dBm/Hz.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UnitError {
    #[error("non-finite value {0}")]
    NonFinite(f64),
    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },
}

macro_rules! level {
    ($name:ident, $unit:literal) => {
        #[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub f64);

        impl $name {
            pub fn value(self) -> f64 {
                self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{:.2} {}", self.0, $unit)
            }
        }
    };
}

level!(Db, "dB");
level!(Dbm, "dBm");
level!(Dbi, "dBi");

impl Add for Db {
    type Output = Db;
    fn add(self, rhs: Db) -> Db {
        Db(self.0 + rhs.0)
    }
}

impl Sub for Db {
    type Output = Db;
    fn sub(self, rhs: Db) -> Db {
        Db(self.0 - rhs.0)
    }
}

impl Neg for Db {
    type Output = Db;
    fn neg(self) -> Db {
        Db(-self.0)
    }
}

impl Add<Db> for Dbm {
    type Output = Dbm;
    fn add(self, rhs: Db) -> Dbm {
        Dbm(self.0 + rhs.0)
    }
}

impl Sub<Db> for Dbm {
    type Output = Dbm;
    fn sub(self, rhs: Db) -> Dbm {
        Dbm(self.0 - rhs.0)
    }
}

impl Add<Dbi> for Dbm {
    type Output = Dbm;
    fn add(self, rhs: Dbi) -> Dbm {
        Dbm(self.0 + rhs.0)
    }
}

impl Sub<Dbi> for Dbm {
    type Output = Dbm;
    fn sub(self, rhs: Dbi) -> Dbm {
        Dbm(self.0 - rhs.0)
    }
}

impl Sub for Dbm {
    type Output = Db;
    fn sub(self, rhs: Dbm) -> Db {
        Db(self.0 - rhs.0)
    }
}

impl Add<Db> for Dbi {
    type Output = Dbi;
    fn add(self, rhs: Db) -> Dbi {
        Dbi(self.0 + rhs.0)
    }
}

impl Sub<Db> for Dbi {
    type Output = Dbi;
    fn sub(self, rhs: Db) -> Dbi {
        Dbi(self.0 - rhs.0)
    }
}

impl Dbm {
    /// Linear power in milliwatts.
    pub fn to_mw(self) -> f64 {
        10f64.powf(self.0 / 10.0)
    }

    pub fn from_mw(mw: f64) -> Dbm {
        Dbm(10.0 * mw.log10())
    }
}

/// Power ratio for a dB value.
pub fn db_to_linear(x: f64) -> Result<f64, UnitError> {
    if !x.is_finite() {
        return Err(UnitError::NonFinite(x));
    }
    Ok(10f64.powf(x / 10.0))
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Wavelength in meters for a frequency in GHz.
pub fn wavelength_m(f_ghz: f64) -> Result<f64, UnitError> {
    if !f_ghz.is_finite() {
        return Err(UnitError::NonFinite(f_ghz));
    }
    if f_ghz <= 0.0 {
        return Err(UnitError::NonPositive { what: "frequency", value: f_ghz });
    }
    Ok(SPEED_OF_LIGHT / (f_ghz * 1e9))
}

/// Thermal noise power in dBm over `bandwidth_hz`, before any noise figure.
pub fn thermal_noise_dbm(bandwidth_hz: f64) -> Dbm {
    Dbm(THERMAL_NOISE_DBM_PER_HZ + 10.0 * bandwidth_hz.log10())
}

/// Wraps an angle in degrees into [-180, 180).
pub fn wrap_deg(a: f64) -> f64 {
    let w = (a + 180.0).rem_euclid(360.0) - 180.0;
    if w >= 180.0 {
        w - 360.0
    } else {
        w
    }
}

pub fn deg2rad(d: f64) -> f64 {
    d * PI / 180.0
}

pub fn rad2deg(r: f64) -> f64 {
    r * 180.0 / PI
}
