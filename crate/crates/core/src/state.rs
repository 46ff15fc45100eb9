use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Position and coordinate velocity of a body at time `t`, Sun-rest frame, SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialState {
    pub t: f64,
    pub x: Vector3<f64>,
    pub v: Vector3<f64>,
}

impl SpatialState {
    pub fn new(t: f64, x: Vector3<f64>, v: Vector3<f64>) -> Self {
        Self { t, x, v }
    }

    /// Builds the state from the spatial part of the four-velocity, u = γv.
    pub fn from_momentum(t: f64, x: Vector3<f64>, u: Vector3<f64>, c: f64) -> Self {
        Self {
            t,
            x,
            v: velocity_from_momentum(&u, c),
        }
    }

    /// Lorentz factor (1 − |v|²/c²)^(−1/2).
    pub fn lorentz_factor(&self, c: f64) -> f64 {
        lorentz_factor(&self.v, c)
    }

    /// u = γv.
    pub fn momentum(&self, c: f64) -> Vector3<f64> {
        self.v * self.lorentz_factor(c)
    }

    pub fn check_subluminal(&self, c: f64) -> Result<()> {
        let speed = self.v.norm();
        if !(speed < c) {
            return Err(Error::Domain(format!(
                "speed {speed} m/s at t = {} s is not below c = {c} m/s",
                self.t
            )));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.x.iter().all(|c| c.is_finite()) && self.v.iter().all(|c| c.is_finite())
    }
}

pub fn lorentz_factor(v: &Vector3<f64>, c: f64) -> f64 {
    let beta2 = v.norm_squared() / (c * c);
    1.0 / (1.0 - beta2).sqrt()
}

/// Exact inversion v = u / √(1 + |u|²/c²).
pub fn velocity_from_momentum(u: &Vector3<f64>, c: f64) -> Vector3<f64> {
    u / (1.0 + u.norm_squared() / (c * c)).sqrt()
}
