//! Ray-launching propagation and EMF exposure minimization for urban
//! base-station placement.

// `!(x > 0.0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod channel;
pub mod coverage;
pub mod emfield;
pub mod error;
pub mod geometry;
pub mod mobility;
pub mod netmodel;
pub mod optimizer;
pub mod raylaunch;
pub mod scene;
pub mod study;
pub mod units;

pub use emfield::{AntennaSpec, Carrier, FieldVector, Pattern, PolarizedField};
pub use error::{Error, Result};
pub use geometry::{Vec2, Vec3};
pub use raylaunch::{compute_multipath, LaunchConfig, PathKind, RayPath, Tracer};
pub use scene::{load_scene, Material, Scene, SceneBuilder};
pub use study::{resolve_scene, RunConfig, Study};
