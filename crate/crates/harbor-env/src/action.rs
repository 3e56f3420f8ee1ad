use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::EnvError;

pub const N_ACTIONS: usize = 5;

pub const ACTION_NAMES: [&str; N_ACTIONS] = ["f1", "f2", "f3", "alpha1", "alpha2"];

/// Closed interval for one action component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionBounds {
    pub min: f64,
    pub max: f64,
}

impl ActionBounds {
    pub fn width(&self) -> f64 {
        self.max - self.min
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }
}

/// Physical ranges: azimuth forces in kN, tunnel force in kN, azimuth angles in rad.
pub const ACTION_BOUNDS: [ActionBounds; N_ACTIONS] = [
    ActionBounds { min: -70.0, max: 100.0 },
    ActionBounds { min: -70.0, max: 100.0 },
    ActionBounds { min: -50.0, max: 50.0 },
    ActionBounds { min: -FRAC_PI_2, max: FRAC_PI_2 },
    ActionBounds { min: -FRAC_PI_2, max: FRAC_PI_2 },
];

/// Control input: two aft azimuth thrusters (force, angle) and one bow tunnel thruster.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Action {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl Action {
    pub const ZERO: Action = Action {
        f1: 0.0,
        f2: 0.0,
        f3: 0.0,
        alpha1: 0.0,
        alpha2: 0.0,
    };

    pub fn from_array(a: [f64; N_ACTIONS]) -> Self {
        Action {
            f1: a[0],
            f2: a[1],
            f3: a[2],
            alpha1: a[3],
            alpha2: a[4],
        }
    }

    pub fn to_array(self) -> [f64; N_ACTIONS] {
        [self.f1, self.f2, self.f3, self.alpha1, self.alpha2]
    }

    pub fn forces(&self) -> [f64; 3] {
        [self.f1, self.f2, self.f3]
    }

    /// Component-wise clip to the physical ranges. NaN components map to the lower bound.
    pub fn clamp(self) -> Self {
        let mut a = self.to_array();
        for (v, b) in a.iter_mut().zip(ACTION_BOUNDS.iter()) {
            *v = if v.is_nan() { b.min } else { v.clamp(b.min, b.max) };
        }
        Action::from_array(a)
    }

    pub fn is_within_bounds(&self) -> bool {
        self.to_array()
            .iter()
            .zip(ACTION_BOUNDS.iter())
            .all(|(v, b)| b.contains(*v))
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        for ((v, b), name) in self
            .to_array()
            .iter()
            .zip(ACTION_BOUNDS.iter())
            .zip(ACTION_NAMES)
        {
            if !b.contains(*v) {
                return Err(EnvError::RangeViolation {
                    name,
                    value: *v,
                    min: b.min,
                    max: b.max,
                });
            }
        }
        Ok(())
    }
}
