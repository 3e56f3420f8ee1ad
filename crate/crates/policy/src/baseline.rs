//! Scripted proportional-derivative docking controller.
//!
//! Guidance: the vessel is steered towards the berthing point, but while its heading
//! is still far from the berth heading the target is moved `standoff` metres to the
//! berth's starboard side, away from a quay on the port side. Saturated PD laws on
//! the body-frame position error, heading error and body velocities give the desired
//! surge force, sway force and yaw moment.
//!
//! Allocation: the two aft azimuths are toed out symmetrically (`+beta`, `-beta`),
//! with `beta` growing smoothly from `min_angle` when surge dominates to `max_angle`
//! when sway and moment dominate. For that geometry the three thruster forces follow
//! from an exact 3x3 solve; if any exceeds its range all three are scaled down
//! together so the direction of the demand is kept.

use serde::{Deserialize, Serialize};
use std::path::Path;

use harbor_env::ACTION_BOUNDS;

use crate::{check_finite, Action, Policy, PolicyError, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineGains {
    /// kN per m of surge offset.
    pub kp_surge: f64,
    /// kN per m/s of surge speed.
    pub kd_surge: f64,
    pub kp_sway: f64,
    pub kd_sway: f64,
    /// kN m per rad of heading error.
    pub kp_yaw: f64,
    /// kN m per rad/s of yaw rate.
    pub kd_yaw: f64,
    pub max_surge: f64,
    pub max_sway: f64,
    pub max_moment: f64,
    /// Lateral offset (m) of the approach target while the heading is unaligned.
    pub standoff: f64,
    /// Heading error (rad) below which no standoff is applied.
    pub standoff_align: f64,
    /// Additional heading error (rad) over which the standoff ramps to full size.
    pub standoff_ramp: f64,
    /// Longitudinal positions (m) of the bow tunnel and the aft azimuths.
    pub bow_arm: f64,
    pub stern_arm: f64,
    /// Half the transverse spacing of the azimuths (m).
    pub azimuth_spacing: f64,
    /// Toe-out angle range of the azimuths (rad).
    pub min_angle: f64,
    pub max_angle: f64,
    /// +1 turns towards the berth heading; -1 flips the moment sign.
    pub moment_sign: f64,
}

impl Default for BaselineGains {
    fn default() -> Self {
        BaselineGains {
            kp_surge: 4.0,
            kd_surge: 180.0,
            kp_sway: 6.0,
            kd_sway: 140.0,
            kp_yaw: 900.0,
            kd_yaw: 50_000.0,
            max_surge: 150.0,
            max_sway: 120.0,
            max_moment: 2000.0,
            standoff: 40.0,
            standoff_align: 0.05,
            standoff_ramp: 0.25,
            bow_arm: 30.0,
            stern_arm: 35.0,
            azimuth_spacing: 5.0,
            min_angle: 0.35,
            max_angle: 1.2,
            moment_sign: 1.0,
        }
    }
}

impl BaselineGains {
    pub fn validate(&self) -> Result<(), PolicyError> {
        let positive = [
            ("kp_surge", self.kp_surge),
            ("kp_sway", self.kp_sway),
            ("kp_yaw", self.kp_yaw),
            ("max_surge", self.max_surge),
            ("max_sway", self.max_sway),
            ("max_moment", self.max_moment),
            ("standoff_ramp", self.standoff_ramp),
            ("bow_arm", self.bow_arm),
            ("stern_arm", self.stern_arm),
            ("azimuth_spacing", self.azimuth_spacing),
            ("min_angle", self.min_angle),
            ("max_angle", self.max_angle),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PolicyError::Gains(format!("{name} must be positive")));
            }
        }
        for (name, v) in [
            ("kd_surge", self.kd_surge),
            ("kd_sway", self.kd_sway),
            ("kd_yaw", self.kd_yaw),
            ("standoff", self.standoff),
            ("standoff_align", self.standoff_align),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(PolicyError::Gains(format!("{name} must be non-negative")));
            }
        }
        if self.moment_sign != 1.0 && self.moment_sign != -1.0 {
            return Err(PolicyError::Gains("moment_sign must be +1 or -1".into()));
        }
        if self.max_angle >= std::f64::consts::FRAC_PI_2 || self.min_angle > self.max_angle {
            return Err(PolicyError::Gains(
                "need 0 < min_angle <= max_angle < pi/2".into(),
            ));
        }
        // the allocation matrix is singular where tan(beta) = spacing / (bow + stern arm)
        let singular = (self.azimuth_spacing / (self.bow_arm + self.stern_arm)).atan();
        if self.min_angle < 2.0 * singular {
            return Err(PolicyError::Gains(format!(
                "min_angle must be at least {:.3} rad for a well-conditioned allocation",
                2.0 * singular
            )));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, PolicyError> {
        let text = std::fs::read_to_string(path)?;
        let g: BaselineGains =
            serde_json::from_str(&text).map_err(|e| PolicyError::Gains(e.to_string()))?;
        g.validate()?;
        Ok(g)
    }
}

#[derive(Debug, Clone)]
pub struct BaselineController {
    gains: BaselineGains,
}

impl Default for BaselineController {
    fn default() -> Self {
        BaselineController {
            gains: BaselineGains::default(),
        }
    }
}

fn sat(v: f64, limit: f64) -> f64 {
    v.clamp(-limit, limit)
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

impl BaselineController {
    pub fn new(gains: BaselineGains) -> Result<Self, PolicyError> {
        gains.validate()?;
        Ok(BaselineController { gains })
    }

    pub fn gains(&self) -> &BaselineGains {
        &self.gains
    }

    /// Body-frame position error (m) towards the current approach target.
    pub fn position_error(&self, x: &StateVector) -> [f64; 2] {
        let g = &self.gains;
        let (s, c) = x.psi_tilde.sin_cos();
        // berth offset expressed in the berth frame
        let bx = c * x.x_tilde + s * x.y_tilde;
        let by = -s * x.x_tilde + c * x.y_tilde;
        let ramp = ((x.psi_tilde.abs() - g.standoff_align) / g.standoff_ramp).clamp(0.0, 1.0);
        let by = by + g.standoff * ramp;
        [c * bx - s * by, s * bx + c * by]
    }

    /// Saturated (surge kN, sway kN, moment kN m) demand before allocation.
    pub fn demand(&self, x: &StateVector) -> [f64; 3] {
        let g = &self.gains;
        let [ex, ey] = self.position_error(x);
        [
            sat(g.kp_surge * ex - g.kd_surge * x.u, g.max_surge),
            sat(g.kp_sway * ey - g.kd_sway * x.v, g.max_sway),
            g.moment_sign * sat(g.kp_yaw * x.psi_tilde - g.kd_yaw * x.r, g.max_moment),
        ]
    }

    fn allocate(&self, demand: [f64; 3]) -> Action {
        let g = &self.gains;
        let [fx, fy, moment] = demand;
        let lateral = fy.abs() + moment.abs() / g.stern_arm;
        let share = lateral / (lateral + fx.abs() + 1.0);
        let beta = g.min_angle + (g.max_angle - g.min_angle) * share;
        let (sb, cb) = beta.sin_cos();
        // moment arm of each azimuth at its toe-out angle
        let arm = -g.stern_arm * sb + g.azimuth_spacing * cb;
        let m = [[cb, cb, 0.0], [sb, -sb, 1.0], [arm, -arm, g.bow_arm]];
        let det = det3(m);
        let mut f = [0.0; 3];
        for (k, fk) in f.iter_mut().enumerate() {
            let mut mk = m;
            for (row, d) in mk.iter_mut().zip(demand) {
                row[k] = d;
            }
            *fk = det3(mk) / det;
        }
        let mut scale: f64 = 1.0;
        for (v, b) in f.iter().zip(&ACTION_BOUNDS[..3]) {
            if *v > b.max {
                scale = scale.min(b.max / v);
            } else if *v < b.min {
                scale = scale.min(b.min / v);
            }
        }
        Action {
            f1: scale * f[0],
            f2: scale * f[1],
            f3: scale * f[2],
            alpha1: beta,
            alpha2: -beta,
        }
        .clamp()
    }
}

impl Policy for BaselineController {
    fn name(&self) -> &str {
        "baseline"
    }

    fn predict(&self, x: &StateVector) -> Result<Action, PolicyError> {
        check_finite(x)?;
        Ok(self.allocate(self.demand(x)))
    }
}
