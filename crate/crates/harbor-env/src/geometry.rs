use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::{EnvError, Pose};

/// Vertices closer than this are merged during enumeration.
const VERTEX_MERGE_TOL: f64 = 1e-9;

/// Convex polygon `{p : A p <= b}` in the plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfPlaneSet {
    #[serde(rename = "A")]
    pub a: Vec<[f64; 2]>,
    pub b: Vec<f64>,
}

impl HalfPlaneSet {
    pub fn new(a: Vec<[f64; 2]>, b: Vec<f64>) -> Result<Self, EnvError> {
        let set = HalfPlaneSet { a, b };
        set.validate()?;
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    /// Checks shape, finiteness, boundedness and non-emptiness.
    pub fn validate(&self) -> Result<(), EnvError> {
        if self.a.len() != self.b.len() {
            return Err(EnvError::Geometry(format!(
                "A has {} rows but b has {} entries",
                self.a.len(),
                self.b.len()
            )));
        }
        if self.a.len() < 3 {
            return Err(EnvError::Geometry("fewer than 3 half-planes".into()));
        }
        for (row, b) in self.a.iter().zip(&self.b) {
            if !(row[0].is_finite() && row[1].is_finite() && b.is_finite()) {
                return Err(EnvError::Geometry("non-finite half-plane".into()));
            }
            if row[0] == 0.0 && row[1] == 0.0 {
                return Err(EnvError::Geometry("zero normal in A".into()));
            }
        }
        if !self.is_bounded() {
            return Err(EnvError::Geometry("half-plane set is unbounded".into()));
        }
        if self.vertices().len() < 3 {
            return Err(EnvError::Geometry("half-plane set is empty or degenerate".into()));
        }
        Ok(())
    }

    /// Bounded iff the outward normals are not contained in any closed half-plane,
    /// i.e. the largest angular gap between consecutive normals is below pi.
    pub fn is_bounded(&self) -> bool {
        let mut angles: Vec<f64> = self.a.iter().map(|n| n[1].atan2(n[0])).collect();
        if angles.len() < 3 {
            return false;
        }
        angles.sort_by(f64::total_cmp);
        let mut max_gap = angles[0] + 2.0 * std::f64::consts::PI - angles[angles.len() - 1];
        for w in angles.windows(2) {
            max_gap = max_gap.max(w[1] - w[0]);
        }
        max_gap < std::f64::consts::PI - 1e-12
    }

    /// Signed distance of `p` past plane `i` (positive means outside).
    pub fn plane_excess(&self, i: usize, p: [f64; 2]) -> f64 {
        let n = self.a[i];
        (n[0] * p[0] + n[1] * p[1] - self.b[i]) / n[0].hypot(n[1])
    }

    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        (0..self.len()).all(|i| self.plane_excess(i, p) <= tol)
    }

    /// Vertices of the polygon in counter-clockwise order.
    pub fn vertices(&self) -> Vec<[f64; 2]> {
        let mut pts: Vec<[f64; 2]> = Vec::new();
        let n = self.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let [a11, a12] = self.a[i];
                let [a21, a22] = self.a[j];
                let det = a11 * a22 - a12 * a21;
                let scale = a11.hypot(a12) * a21.hypot(a22);
                if det.abs() <= 1e-12 * scale {
                    continue;
                }
                let p = [
                    (self.b[i] * a22 - a12 * self.b[j]) / det,
                    (a11 * self.b[j] - self.b[i] * a21) / det,
                ];
                let tol = 1e-9 * (1.0 + p[0].abs().max(p[1].abs()));
                if !self.contains(p, tol) {
                    continue;
                }
                let merge = VERTEX_MERGE_TOL * (1.0 + p[0].abs().max(p[1].abs()));
                if pts
                    .iter()
                    .all(|q| (q[0] - p[0]).abs() > merge || (q[1] - p[1]).abs() > merge)
                {
                    pts.push(p);
                }
            }
        }
        sort_ccw(&mut pts);
        pts
    }

    /// The same polygon scaled by `factor` about the origin.
    pub fn scaled(&self, factor: f64) -> HalfPlaneSet {
        HalfPlaneSet {
            a: self.a.clone(),
            b: self.b.iter().map(|b| b * factor).collect(),
        }
    }

    pub fn area(&self) -> f64 {
        shoelace_area(&self.vertices())
    }
}

fn sort_ccw(pts: &mut [[f64; 2]]) {
    if pts.is_empty() {
        return;
    }
    let n = pts.len() as f64;
    let cx = pts.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = pts.iter().map(|p| p[1]).sum::<f64>() / n;
    pts.sort_by(|p, q| {
        let ap = (p[1] - cy).atan2(p[0] - cx);
        let aq = (q[1] - cy).atan2(q[0] - cx);
        ap.total_cmp(&aq)
    });
}

/// Absolute polygon area from ordered vertices.
pub fn shoelace_area(poly: &[[f64; 2]]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for (i, p) in poly.iter().enumerate() {
        let q = poly[(i + 1) % poly.len()];
        twice += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * twice.abs()
}

/// Sutherland-Hodgman clip of a convex polygon against every half-plane of `set`.
pub fn clip_polygon(poly: &[[f64; 2]], set: &HalfPlaneSet) -> Vec<[f64; 2]> {
    let mut out: Vec<[f64; 2]> = poly.to_vec();
    for (n, &b) in set.a.iter().zip(&set.b) {
        if out.is_empty() {
            break;
        }
        let input = std::mem::take(&mut out);
        let side = |p: &[f64; 2]| n[0] * p[0] + n[1] * p[1] - b;
        for (i, cur) in input.iter().enumerate() {
            let prev = &input[(i + input.len() - 1) % input.len()];
            let (sc, sp) = (side(cur), side(prev));
            if sc <= 0.0 {
                if sp > 0.0 {
                    out.push(intersect(prev, cur, sp, sc));
                }
                out.push(*cur);
            } else if sp <= 0.0 {
                out.push(intersect(prev, cur, sp, sc));
            }
        }
    }
    out
}

fn intersect(p: &[f64; 2], q: &[f64; 2], sp: f64, sq: f64) -> [f64; 2] {
    let t = sp / (sp - sq);
    [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
}

/// Docking area, hull and berth polygons plus the berthing pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarborGeometry {
    /// Navigable water in NED coordinates.
    pub dock: HalfPlaneSet,
    /// Hull pentagon in the body frame (x forward, y starboard).
    pub hull: HalfPlaneSet,
    /// Berth rectangle in NED coordinates.
    pub berth: HalfPlaneSet,
    pub berth_point: Pose,
    #[serde(default = "default_margin")]
    pub hull_margin: f64,
}

fn default_margin() -> f64 {
    1.10
}

impl HarborGeometry {
    pub fn validate(&self) -> Result<(), EnvError> {
        self.dock.validate()?;
        self.hull.validate()?;
        self.berth.validate()?;
        if !(self.hull_margin >= 1.0 && self.hull_margin.is_finite()) {
            return Err(EnvError::Geometry(format!(
                "hull_margin {} must be >= 1",
                self.hull_margin
            )));
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self, EnvError> {
        let g: HarborGeometry =
            serde_json::from_str(s).map_err(|e| EnvError::Config(e.to_string()))?;
        g.validate()?;
        Ok(g)
    }

    pub fn load(path: &Path) -> Result<Self, EnvError> {
        let g: HarborGeometry = crate::read_json(path)?;
        g.validate()?;
        Ok(g)
    }

    /// Hull polygon in the body frame after applying the safety margin.
    pub fn enlarged_hull(&self) -> HalfPlaneSet {
        self.hull.scaled(self.hull_margin)
    }

    /// Quay-side harbor used by the default scenario.
    ///
    /// The first five dock planes are the published harbor boundary; the last three
    /// close the set to the north, south and east so that it is bounded. The hull
    /// pentagon is an 83.8 m x 15.4 m vessel with the bow on +x. The berth sits 20 m
    /// off the quay line `y = -120`.
    pub fn default_harbor() -> Self {
        let dock = HalfPlaneSet {
            a: vec![
                [-8.57, -1.0],
                [0.0, -1.0],
                [-0.51, -1.0],
                [-2.77, -1.0],
                [0.0, -1.0],
                [1.0, 0.0],
                [-1.0, 0.0],
                [0.0, 1.0],
            ],
            b: vec![5163.85, 1242.0, 1503.91, 2846.56, 120.0, 400.0, 400.0, 300.0],
        };
        let hull = HalfPlaneSet {
            a: vec![
                [0.0, 1.0],
                [0.0, -1.0],
                [1.0, 2.72],
                [1.0, -2.72],
                [-1.0, 0.0],
            ],
            b: vec![7.7, 7.7, 41.91, 41.91, 41.91],
        };
        let berth = HalfPlaneSet {
            a: vec![[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]],
            b: vec![50.0, 50.0, -90.0, 110.0],
        };
        HarborGeometry {
            dock,
            hull,
            berth,
            berth_point: Pose::new(0.0, -100.0, 0.0),
            hull_margin: 1.10,
        }
    }
}

/// Area of the enlarged hull at `pose` intersected with the berth rectangle.
pub fn berth_overlap_area(pose: &Pose, geom: &HarborGeometry) -> f64 {
    let hull = crate::hull_vertices(pose, geom);
    shoelace_area(&clip_polygon(&hull, &geom.berth))
}
