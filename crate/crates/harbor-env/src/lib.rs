//! Simulated harbor for autonomous docking.
//!
//! The vessel is a 3-DOF rigid body (surge, sway, yaw) integrated with
//! explicit Euler steps. The harbor, the hull and the berth are convex
//! polygons given as half-plane sets `{p : A p <= b}`.

mod action;
mod angle;
mod error;
mod features;
mod geometry;
mod reward;
mod vessel;

pub use action::{Action, ActionBounds, ACTION_BOUNDS, ACTION_NAMES, N_ACTIONS};
pub use angle::wrap_angle;
pub use error::EnvError;
pub use features::{
    collision, featurize, hull_vertices, nearest_obstacle, StateVector, COLLISION_TOLERANCE,
    FEATURE_NAMES, N_FEATURES,
};
pub use geometry::{berth_overlap_area, clip_polygon, shoelace_area, HalfPlaneSet, HarborGeometry};
pub use reward::{reward, RewardComponents, RewardParams};
pub use vessel::{
    rotation, rotation2, step, thrust_allocation, Forces, Pose, ThrusterSpec, Velocity,
    VesselModel,
};

use std::path::Path;

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, EnvError> {
    let text = std::fs::read_to_string(path).map_err(|source| EnvError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| EnvError::Config(format!("{}: {e}", path.display())))
}
