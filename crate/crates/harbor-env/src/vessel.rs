use nalgebra::{Matrix2, Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use crate::{wrap_angle, Action, EnvError, ACTION_BOUNDS};

/// NED position (m) and heading (rad, wrapped to `(-pi, pi]`).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, psi: f64) -> Self {
        Pose {
            x,
            y,
            psi: wrap_angle(psi),
        }
    }

    pub fn xy(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.psi)
    }
}

/// Body-frame surge (m/s), sway (m/s) and yaw rate (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Velocity {
    pub u: f64,
    pub v: f64,
    pub r: f64,
}

impl Velocity {
    pub const ZERO: Velocity = Velocity {
        u: 0.0,
        v: 0.0,
        r: 0.0,
    };

    pub fn new(u: f64, v: f64, r: f64) -> Self {
        Velocity { u, v, r }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite() && self.r.is_finite()
    }

    fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.u, self.v, self.r)
    }

    fn from_vector(v: &Vector3<f64>) -> Self {
        Velocity::new(v[0], v[1], v[2])
    }
}

/// One thruster: mounting point in the body frame (m), force range (kN) and an
/// optional fixed angle (rad) for non-rotating thrusters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThrusterSpec {
    pub lx: f64,
    pub ly: f64,
    pub fmin: f64,
    pub fmax: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle_fixed: Option<f64>,
}

/// Rigid-body and damping matrices plus thruster layout.
///
/// `M` is in kg (kg m^2 in the yaw slot) and `D` in N s/m (N m s in the yaw slot).
/// Thruster forces are in kN and converted to N before integration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VesselModel {
    #[serde(rename = "M")]
    pub mass: [[f64; 3]; 3],
    #[serde(rename = "D")]
    pub damping: [[f64; 3]; 3],
    pub thrusters: Vec<ThrusterSpec>,
    /// Ocean current in NED (north, east), m/s.
    #[serde(default)]
    pub current: [f64; 2],
}

/// Total force and moment in kN and kN m.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Forces {
    pub fx: f64,
    pub fy: f64,
    pub torque: f64,
}

impl Forces {
    pub fn sub(self, other: Forces) -> Forces {
        Forces {
            fx: self.fx - other.fx,
            fy: self.fy - other.fy,
            torque: self.torque - other.torque,
        }
    }
}

fn mat3(m: &[[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| m[i][j])
}

impl VesselModel {
    /// Diagonal model of an ~84 m supply vessel. These values are plausible
    /// placeholders, not identified from a real hull.
    pub fn default_vessel() -> Self {
        VesselModel {
            mass: [[6e6, 0.0, 0.0], [0.0, 6e6, 0.0], [0.0, 0.0, 1e9]],
            damping: [[1e5, 0.0, 0.0], [0.0, 2e5, 0.0], [0.0, 0.0, 1e7]],
            thrusters: vec![
                ThrusterSpec {
                    lx: -35.0,
                    ly: -5.0,
                    fmin: -70.0,
                    fmax: 100.0,
                    angle_fixed: None,
                },
                ThrusterSpec {
                    lx: -35.0,
                    ly: 5.0,
                    fmin: -70.0,
                    fmax: 100.0,
                    angle_fixed: None,
                },
                ThrusterSpec {
                    lx: 30.0,
                    ly: 0.0,
                    fmin: -50.0,
                    fmax: 50.0,
                    angle_fixed: Some(FRAC_PI_2),
                },
            ],
            current: [0.0, 0.0],
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let m = mat3(&self.mass);
        if (m - m.transpose()).abs().max() > 1e-9 * m.abs().max() {
            return Err(EnvError::Model("M is not symmetric".into()));
        }
        if m.cholesky().is_none() {
            return Err(EnvError::Model("M is not positive definite".into()));
        }
        if self.damping.iter().flatten().any(|v| !v.is_finite()) {
            return Err(EnvError::Model("D has non-finite entries".into()));
        }
        if self.thrusters.len() != 3 {
            return Err(EnvError::Model(format!(
                "expected 3 thrusters, got {}",
                self.thrusters.len()
            )));
        }
        for (i, t) in self.thrusters.iter().enumerate() {
            let b = ACTION_BOUNDS[i];
            if t.fmin != b.min || t.fmax != b.max {
                return Err(EnvError::Model(format!(
                    "thruster {} range [{}, {}] differs from [{}, {}]",
                    i + 1,
                    t.fmin,
                    t.fmax,
                    b.min,
                    b.max
                )));
            }
        }
        if self.thrusters[2].angle_fixed != Some(FRAC_PI_2) {
            return Err(EnvError::Model("tunnel thruster angle must be fixed at pi/2".into()));
        }
        if self.thrusters[..2].iter().any(|t| t.angle_fixed.is_some()) {
            return Err(EnvError::Model("azimuth thrusters must not have a fixed angle".into()));
        }
        if !(self.current[0].is_finite() && self.current[1].is_finite()) {
            return Err(EnvError::Model("non-finite current".into()));
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self, EnvError> {
        let m: VesselModel =
            serde_json::from_str(s).map_err(|e| EnvError::Config(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, EnvError> {
        let m: VesselModel = crate::read_json(path)?;
        m.validate()?;
        Ok(m)
    }
}

/// Planar rotation from body to NED with the yaw slot left untouched.
pub fn rotation(psi: f64) -> Matrix3<f64> {
    let (s, c) = psi.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Upper-left 2x2 block of [`rotation`].
pub fn rotation2(psi: f64) -> Matrix2<f64> {
    let (s, c) = psi.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Maps thruster forces and angles to body-frame surge force, sway force and yaw moment.
pub fn thrust_allocation(action: &Action, layout: &[ThrusterSpec]) -> Result<Forces, EnvError> {
    action.validate()?;
    Ok(thrust_allocation_unchecked(action, layout))
}

pub(crate) fn thrust_allocation_unchecked(action: &Action, layout: &[ThrusterSpec]) -> Forces {
    let angles = [action.alpha1, action.alpha2, FRAC_PI_2];
    let mut out = Forces::default();
    for ((f, spec), commanded) in action.forces().iter().zip(layout).zip(angles) {
        let alpha = spec.angle_fixed.unwrap_or(commanded);
        let (s, c) = alpha.sin_cos();
        out.fx += f * c;
        out.fy += f * s;
        out.torque += f * (spec.lx * s - spec.ly * c);
    }
    out
}

/// One explicit Euler step of the 3-DOF equations of motion.
///
/// The pose advances with the velocity at the start of the step; the
/// current-relative velocity is advanced with the damped rigid-body equation.
pub fn step(
    pose: &Pose,
    vel: &Velocity,
    action: &Action,
    h: f64,
    model: &VesselModel,
) -> Result<(Pose, Velocity), EnvError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(EnvError::Model(format!("step size {h} must be positive")));
    }
    let m_inv = mat3(&model.mass)
        .try_inverse()
        .ok_or_else(|| EnvError::Model("M is singular".into()))?;
    let forces = thrust_allocation(action, &model.thrusters)?;
    let tau = Vector3::new(forces.fx, forces.fy, forces.torque) * 1e3;
    let damping = mat3(&model.damping);

    let current_ned = Vector3::new(model.current[0], model.current[1], 0.0);
    let nu = vel.as_vector();
    let nu_r = nu - rotation(pose.psi).transpose() * current_ned;

    let eta = rotation(pose.psi) * nu * h + pose.as_vector();
    let nu_r_next = m_inv * (tau - damping * nu_r) * h + nu_r;

    let next_pose = Pose::new(eta[0], eta[1], eta[2]);
    let nu_next = nu_r_next + rotation(next_pose.psi).transpose() * current_ned;
    Ok((next_pose, Velocity::from_vector(&nu_next)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn rotation_examples() {
        assert_eq!(rotation(0.0), Matrix3::identity());
        let q = rotation(FRAC_PI_2);
        let expected = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert!((q - expected).abs().max() < 1e-15);
        let r = rotation(0.3);
        assert!(close(r[(0, 0)], 0.955_336_489_125_606, 1e-15));
        assert!(close(r[(1, 0)], 0.295_520_206_661_339_6, 1e-15));
        assert!(close(r[(0, 1)], -0.295_520_206_661_339_6, 1e-15));
    }

    #[test]
    fn zero_force_allocation() {
        let layout = VesselModel::default_vessel().thrusters;
        let a = Action {
            alpha1: 0.7,
            alpha2: -1.2,
            ..Action::ZERO
        };
        assert_eq!(thrust_allocation(&a, &layout).unwrap(), Forces::default());
    }

    #[test]
    fn symmetric_azimuths_cancel_torque() {
        let layout = VesselModel::default_vessel().thrusters;
        let a = Action {
            f1: 100.0,
            f2: 100.0,
            ..Action::ZERO
        };
        let f = thrust_allocation(&a, &layout).unwrap();
        assert!(close(f.fx, 200.0, 1e-12));
        assert!(close(f.fy, 0.0, 1e-12));
        assert!(close(f.torque, 0.0, 1e-12));
    }

    #[test]
    fn tunnel_torque() {
        let layout = VesselModel::default_vessel().thrusters;
        let a = Action {
            f3: 50.0,
            ..Action::ZERO
        };
        let f = thrust_allocation(&a, &layout).unwrap();
        assert!(close(f.fx, 0.0, 1e-12));
        assert!(close(f.fy, 50.0, 1e-12));
        assert!(close(f.torque, 1500.0, 1e-9));
    }

    #[test]
    fn allocation_rejects_out_of_range() {
        let layout = VesselModel::default_vessel().thrusters;
        let a = Action {
            f1: 120.0,
            ..Action::ZERO
        };
        assert!(matches!(
            thrust_allocation(&a, &layout),
            Err(EnvError::RangeViolation { name: "f1", .. })
        ));
    }

    #[test]
    fn force_free_motion() {
        let mut model = VesselModel::default_vessel();
        model.damping = [[0.0; 3]; 3];
        let (p, v) = step(
            &Pose::new(0.0, 0.0, 0.0),
            &Velocity::new(1.0, 0.0, 0.0),
            &Action::ZERO,
            0.5,
            &model,
        )
        .unwrap();
        assert_eq!(p, Pose::new(0.5, 0.0, 0.0));
        assert_eq!(v, Velocity::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn equilibrium_is_fixed_point() {
        let model = VesselModel::default_vessel();
        let pose = Pose::new(12.0, -3.0, 1.0);
        let (p, v) = step(&pose, &Velocity::ZERO, &Action::ZERO, 0.5, &model).unwrap();
        assert_eq!(p, pose);
        assert_eq!(v, Velocity::ZERO);
    }

    #[test]
    fn diagonal_damping_recursion() {
        let model = VesselModel::default_vessel();
        let h = 0.5;
        let (_, v) = step(
            &Pose::default(),
            &Velocity::new(1.0, 1.0, 1.0),
            &Action::ZERO,
            h,
            &model,
        )
        .unwrap();
        let got = [v.u, v.v, v.r];
        for i in 0..3 {
            let expected = 1.0 - h * model.damping[i][i] / model.mass[i][i];
            assert!(close(got[i], expected, 1e-12), "{i}: {} vs {expected}", got[i]);
        }
    }

    #[test]
    fn heading_is_wrapped() {
        let model = VesselModel::default_vessel();
        let (p, _) = step(
            &Pose::new(0.0, 0.0, 3.1),
            &Velocity::new(0.0, 0.0, 0.2),
            &Action::ZERO,
            0.5,
            &model,
        )
        .unwrap();
        assert!(p.psi < 0.0 && p.psi > -std::f64::consts::PI);
    }

    #[test]
    fn current_only_changes_relative_velocity() {
        let mut model = VesselModel::default_vessel();
        model.current = [0.5, 0.0];
        // drifting with the current at zero relative speed is an equilibrium
        let (_, v) = step(
            &Pose::default(),
            &Velocity::new(0.5, 0.0, 0.0),
            &Action::ZERO,
            0.5,
            &model,
        )
        .unwrap();
        assert!(close(v.u, 0.5, 1e-15));
    }

    #[test]
    fn model_validation() {
        let mut m = VesselModel::default_vessel();
        m.validate().unwrap();
        m.mass[0][0] = -1.0;
        assert!(m.validate().is_err());
        let mut m = VesselModel::default_vessel();
        m.thrusters.pop();
        assert!(m.validate().is_err());
        let mut m = VesselModel::default_vessel();
        m.thrusters[2].angle_fixed = None;
        assert!(m.validate().is_err());
        let mut m = VesselModel::default_vessel();
        m.mass[0][1] = 5.0;
        assert!(m.validate().is_err());
    }

    #[test]
    fn singular_mass_rejected_by_step() {
        let mut m = VesselModel::default_vessel();
        m.mass = [[0.0; 3]; 3];
        let r = step(&Pose::default(), &Velocity::ZERO, &Action::ZERO, 0.5, &m);
        assert!(matches!(r, Err(EnvError::Model(_))));
    }

    #[test]
    fn vessel_json_round_trip() {
        let m = VesselModel::default_vessel();
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"M\"") && s.contains("\"angle_fixed\""));
        assert_eq!(VesselModel::from_json_str(&s).unwrap(), m);
    }
}
