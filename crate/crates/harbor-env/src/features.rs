use serde::{Deserialize, Serialize};

use crate::{rotation2, wrap_angle, HarborGeometry, Pose, Velocity};

pub const N_FEATURES: usize = 9;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "x_tilde", "y_tilde", "psi_tilde", "u", "v", "r", "l", "d_obs", "psi_obs",
];

/// A hull vertex farther than this outside a dock plane counts as contact (m).
pub const COLLISION_TOLERANCE: f64 = 1e-9;

/// Observation seen by the controller and the surrogate, in feature order.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StateVector {
    pub x_tilde: f64,
    pub y_tilde: f64,
    pub psi_tilde: f64,
    pub u: f64,
    pub v: f64,
    pub r: f64,
    pub l: f64,
    pub d_obs: f64,
    pub psi_obs: f64,
}

impl StateVector {
    pub fn to_array(&self) -> [f64; N_FEATURES] {
        [
            self.x_tilde,
            self.y_tilde,
            self.psi_tilde,
            self.u,
            self.v,
            self.r,
            self.l,
            self.d_obs,
            self.psi_obs,
        ]
    }

    pub fn from_array(a: [f64; N_FEATURES]) -> Self {
        StateVector {
            x_tilde: a[0],
            y_tilde: a[1],
            psi_tilde: a[2],
            u: a[3],
            v: a[4],
            r: a[5],
            l: a[6],
            d_obs: a[7],
            psi_obs: a[8],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// Euclidean distance to the berthing point.
    pub fn berth_distance(&self) -> f64 {
        self.x_tilde.hypot(self.y_tilde)
    }

    pub fn in_contact(&self) -> bool {
        self.l != 0.0
    }
}

/// Enlarged hull corners in NED for the given pose.
pub fn hull_vertices(pose: &Pose, geom: &HarborGeometry) -> Vec<[f64; 2]> {
    let rot = rotation2(pose.psi);
    geom.enlarged_hull()
        .vertices()
        .into_iter()
        .map(|v| {
            let p = rot * nalgebra::Vector2::new(v[0], v[1]);
            [p[0] + pose.x, p[1] + pose.y]
        })
        .collect()
}

/// 1 if any enlarged-hull vertex lies outside the docking area, else 0.
pub fn collision(pose: &Pose, geom: &HarborGeometry) -> u8 {
    let outside = hull_vertices(pose, geom)
        .into_iter()
        .any(|p| !geom.dock.contains(p, COLLISION_TOLERANCE));
    u8::from(outside)
}

/// Distance from the vessel origin to the nearest docking-area boundary and the
/// body-frame bearing of the corresponding foot point.
///
/// If the origin is outside the area the distance is 0 and the bearing points to
/// the foot point on the most violated plane.
pub fn nearest_obstacle(pose: &Pose, geom: &HarborGeometry) -> (f64, f64) {
    let p = pose.xy();
    let dock = &geom.dock;
    let (mut best, mut best_d) = (0, f64::INFINITY);
    for i in 0..dock.len() {
        let d = -dock.plane_excess(i, p);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    let n = dock.a[best];
    let norm = n[0].hypot(n[1]);
    // foot point lies along +normal when inside, -normal when outside
    let sign = if best_d >= 0.0 { 1.0 } else { -1.0 };
    let bearing = (sign * n[1] / norm).atan2(sign * n[0] / norm);
    (best_d.max(0.0), wrap_angle(bearing - pose.psi))
}

/// Builds the controller observation from the raw pose and body velocity.
pub fn featurize(pose: &Pose, vel: &Velocity, geom: &HarborGeometry) -> StateVector {
    let bp = geom.berth_point;
    let offset = nalgebra::Vector2::new(bp.x - pose.x, bp.y - pose.y);
    let body = rotation2(pose.psi).transpose() * offset;
    let (d_obs, psi_obs) = nearest_obstacle(pose, geom);
    StateVector {
        x_tilde: body[0],
        y_tilde: body[1],
        psi_tilde: wrap_angle(bp.psi - pose.psi),
        u: vel.u,
        v: vel.v,
        r: vel.r,
        l: f64::from(collision(pose, geom)),
        d_obs,
        psi_obs,
    }
}
