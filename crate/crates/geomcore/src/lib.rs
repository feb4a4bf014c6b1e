//! Surface geometry core: mesh ingestion, signed distance grids,
//! principal-curvature frames, straightest geodesics and groupwise rigid
//! alignment.
//!
//! All operations are pure given their inputs; meshes and grids are never
//! mutated after construction, so they can be shared across threads.

pub mod bvh;
pub mod error;
pub mod frame;
pub mod geodesic;
pub mod io;
pub mod mesh;
pub mod primitives;
pub mod procrustes;
pub mod sdf;

pub use bvh::{SurfaceHit, TriBvh};
pub use error::{GeomError, Result};
pub use frame::{estimate_local_frame, LocalFrame};
pub use geodesic::{trace_geodesic, trace_geodesic_full, GeodesicTrace};
pub use io::{load_mesh, write_obj};
pub use mesh::{max_shape_diameter, TriangleMesh};
pub use procrustes::{gauge_to_first, kabsch, procrustes_align, RigidTransform};
pub use sdf::{mesh_to_sdf, project_to_surface, SignedDistanceGrid};
