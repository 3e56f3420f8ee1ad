use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use crate::EnvError;

/// Weights and widths of the four docking reward terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardParams {
    pub c_obs_terminal: f64,
    pub c_obs: f64,
    pub c_dd: f64,
    pub c_psi: f64,
    pub c_ddot: f64,
    pub sigma_obs: f64,
    pub sigma_dd: f64,
    pub sigma_psi: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        RewardParams {
            c_obs_terminal: -600.0,
            c_obs: -2.5,
            c_dd: 2.5,
            c_psi: 2.5,
            c_ddot: 1.0,
            sigma_obs: 1.0,
            sigma_dd: 10.0,
            sigma_psi: 0.17,
        }
    }
}

impl RewardParams {
    pub fn validate(&self) -> Result<(), EnvError> {
        let fields = [
            self.c_obs_terminal,
            self.c_obs,
            self.c_dd,
            self.c_psi,
            self.c_ddot,
            self.sigma_obs,
            self.sigma_dd,
            self.sigma_psi,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(EnvError::Reward("non-finite parameter".into()));
        }
        if self.sigma_obs <= 0.0 || self.sigma_dd <= 0.0 || self.sigma_psi <= 0.0 {
            return Err(EnvError::Reward("all sigmas must be positive".into()));
        }
        Ok(())
    }

    /// Heading-reward gate threshold; identified with the peak of the distance term.
    pub fn c_dock(&self) -> f64 {
        self.c_dd
    }

    pub fn load(path: &Path) -> Result<Self, EnvError> {
        let p: RewardParams = crate::read_json(path)?;
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardComponents {
    pub r_dd: f64,
    pub r_psi: f64,
    pub r_obs: f64,
    pub r_ddot: f64,
}

impl RewardComponents {
    pub fn total(&self) -> f64 {
        self.r_dd + self.r_psi + self.r_obs + self.r_ddot
    }
}

/// `c * exp(-(s^2)^2 / (2 sigma^2))`
fn quartic_bell(c: f64, s: f64, sigma: f64) -> f64 {
    let s2 = s * s;
    c * (-(s2 * s2) / (2.0 * sigma * sigma)).exp()
}

/// Docking reward for one step. `d_dot` is the rate of change of the berth distance.
pub fn reward(
    x_tilde: f64,
    y_tilde: f64,
    psi_tilde: f64,
    l: f64,
    d_obs: f64,
    d_dot: f64,
    params: &RewardParams,
) -> (f64, RewardComponents) {
    let free = l == 0.0;
    let facing = psi_tilde.abs() < FRAC_PI_2;
    let d_d = x_tilde.hypot(y_tilde);

    let r_dd = if free && facing {
        quartic_bell(params.c_dd, d_d, params.sigma_dd)
    } else {
        0.0
    };
    // heading reward only once the distance term is at least half its peak
    let r_psi = if free && r_dd >= params.c_dock() / 2.0 {
        quartic_bell(params.c_psi, psi_tilde, params.sigma_psi)
    } else {
        0.0
    };
    let r_obs = if free && facing {
        quartic_bell(params.c_obs, d_obs, params.sigma_obs)
    } else {
        params.c_obs_terminal
    };
    let r_ddot = if d_dot > 0.0 && facing {
        0.0
    } else {
        // the two remaining printed cases coincide
        params.c_ddot * d_dot
    };
    let c = RewardComponents {
        r_dd,
        r_psi,
        r_obs,
        r_ddot,
    };
    (c.total(), c)
}
