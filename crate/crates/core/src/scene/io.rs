//! JSON scene format.
//!
//! ```json
//! {
//!   "vertices": [[x, y, z], ...],
//!   "triangles": [[i, j, k, material], ...],
//!   "materials": [{"eps_re": 5, "eps_im": -0.1, "mu_re": 1, "mu_im": 0}, ...],
//!   "boundaries": {
//!     "C1": [[x, y], ...],
//!     "C2": {"origin": [x, y], "Lx": 100, "Ly": 50},
//!     "C3": [[x, y], ...]
//!   },
//!   "interferers": [[x, y, z], ...],
//!   "zones": {"streets": [[[x, y], ...], ...]}
//! }
//! ```
//!
//! Units are meters, right-handed, z up. Triangle winding defines the
//! outward normal (counter-clockwise seen from outside). `C3` and `zones`
//! are optional.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Material, Rect, Scene, Zones};
use crate::error::{Error, Result};
use crate::geometry::{Vec2, Vec3};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RectFile {
    pub origin: [f64; 2],
    #[serde(rename = "Lx")]
    pub lx: f64,
    #[serde(rename = "Ly")]
    pub ly: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryFile {
    #[serde(rename = "C1")]
    pub c1: Vec<[f64; 2]>,
    #[serde(rename = "C2")]
    pub c2: RectFile,
    #[serde(rename = "C3", default, skip_serializing_if = "Option::is_none")]
    pub c3: Option<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ZonesFile {
    #[serde(default)]
    pub streets: Vec<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SceneFile {
    #[serde(default)]
    pub vertices: Vec<[f64; 3]>,
    #[serde(default)]
    pub triangles: Vec<[usize; 4]>,
    #[serde(default)]
    pub materials: Vec<Material>,
    pub boundaries: BoundaryFile,
    #[serde(default)]
    pub interferers: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zones: Option<ZonesFile>,
}

fn v2(p: &[f64; 2]) -> Vec2 {
    Vec2::new(p[0], p[1])
}

fn poly(ps: &[[f64; 2]]) -> Vec<Vec2> {
    ps.iter().map(v2).collect()
}

impl SceneFile {
    pub fn into_scene(self) -> Result<Scene> {
        let b = self.boundaries;
        Scene::new(
            self.vertices.iter().map(|v| Vec3::new(v[0], v[1], v[2])).collect(),
            self.triangles,
            self.materials,
            poly(&b.c1),
            Rect {
                origin: v2(&b.c2.origin),
                lx: b.c2.lx,
                ly: b.c2.ly,
            },
            b.c3.as_deref().map(poly),
            self.interferers.iter().map(|v| Vec3::new(v[0], v[1], v[2])).collect(),
            Zones {
                streets: self.zones.unwrap_or_default().streets.iter().map(|s| poly(s)).collect(),
            },
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }
}

impl Scene {
    pub fn from_json_str(text: &str) -> Result<Scene> {
        let file: SceneFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        file.into_scene()
    }

    /// Read, validate and index a scene file.
    pub fn load(path: impl AsRef<Path>) -> Result<Scene> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Scene::from_json_str(&text)
    }
}

/// Free-function form of [`Scene::load`].
pub fn load_scene(path: impl AsRef<Path>) -> Result<Scene> {
    Scene::load(path)
}
