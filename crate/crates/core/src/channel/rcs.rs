//! Log-normal radar cross section models for the two measured target classes.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetClass {
    PassengerCar,
    Pedestrian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensingMode {
    Bistatic,
    Monostatic,
}

/// RCS in dBsm drawn from N(mu, sigma).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RcsModel {
    pub target_class: TargetClass,
    pub mode: SensingMode,
    pub mu: f64,
    pub sigma: f64,
}

impl RcsModel {
    /// Measured (mu, sigma) for a class/mode pair.
    pub fn catalog(target_class: TargetClass, mode: SensingMode) -> Self {
        let (mu, sigma) = match (target_class, mode) {
            (TargetClass::PassengerCar, SensingMode::Bistatic) => (-0.1, 6.1),
            (TargetClass::PassengerCar, SensingMode::Monostatic) => (7.7, 8.4),
            (TargetClass::Pedestrian, SensingMode::Bistatic) => (-14.4, 6.7),
            (TargetClass::Pedestrian, SensingMode::Monostatic) => (-6.2, 10.0),
        };
        Self { target_class, mode, mu, sigma }
    }

    pub fn all() -> [RcsModel; 4] {
        use SensingMode::*;
        use TargetClass::*;
        [
            Self::catalog(PassengerCar, Bistatic),
            Self::catalog(PassengerCar, Monostatic),
            Self::catalog(Pedestrian, Bistatic),
            Self::catalog(Pedestrian, Monostatic),
        ]
    }
}

pub fn rcs_sample_dbsm<R: Rng + ?Sized>(model: &RcsModel, rng: &mut R) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    model.mu + model.sigma * z
}
