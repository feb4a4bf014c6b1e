//! Signed distance grids sampled from watertight triangle meshes.
//!
//! Values are exact point-to-surface distances with a ray-parity sign:
//! negative inside, positive outside.

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

use crate::bvh::TriBvh;
use crate::error::{GeomError, Result};
use crate::mesh::TriangleMesh;

/// Dense axis-aligned signed distance samples. x varies fastest in `values`.
#[derive(Debug, Clone)]
pub struct SignedDistanceGrid {
    pub origin: Point3<f64>,
    pub spacing: f64,
    pub dims: [usize; 3],
    pub values: Vec<f64>,
}

/// JSON sidecar stored next to the flat binary payload.
#[derive(Debug, Serialize, Deserialize)]
struct GridSidecar {
    origin: [f64; 3],
    spacing: f64,
    dims: [usize; 3],
}

impl SignedDistanceGrid {
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.dims[1] + j) * self.dims[0] + i
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)]
    }

    pub fn grid_point(&self, i: usize, j: usize, k: usize) -> Point3<f64> {
        Point3::new(
            self.origin.x + i as f64 * self.spacing,
            self.origin.y + j as f64 * self.spacing,
            self.origin.z + k as f64 * self.spacing,
        )
    }

    pub fn contains(&self, p: &Point3<f64>) -> bool {
        let g = (p - self.origin) / self.spacing;
        (0..3).all(|k| g[k] >= 0.0 && g[k] <= (self.dims[k] - 1) as f64)
    }

    fn cell_of(&self, p: &Point3<f64>) -> Result<([usize; 3], [f64; 3])> {
        if !self.contains(p) {
            return Err(GeomError::OutOfBounds {
                point: [p.x, p.y, p.z],
            });
        }
        let g = (p - self.origin) / self.spacing;
        let mut cell = [0usize; 3];
        let mut frac = [0f64; 3];
        for k in 0..3 {
            let c = (g[k].floor() as usize).min(self.dims[k] - 2);
            cell[k] = c;
            frac[k] = g[k] - c as f64;
        }
        Ok((cell, frac))
    }

    /// Trilinear interpolation of the signed distance.
    pub fn interpolate(&self, p: &Point3<f64>) -> Result<f64> {
        let ([i, j, k], [fx, fy, fz]) = self.cell_of(p)?;
        let c = |di: usize, dj: usize, dk: usize| self.value(i + di, j + dj, k + dk);
        let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
        let v00 = lerp(c(0, 0, 0), c(1, 0, 0), fx);
        let v10 = lerp(c(0, 1, 0), c(1, 1, 0), fx);
        let v01 = lerp(c(0, 0, 1), c(1, 0, 1), fx);
        let v11 = lerp(c(0, 1, 1), c(1, 1, 1), fx);
        let v0 = lerp(v00, v10, fy);
        let v1 = lerp(v01, v11, fy);
        Ok(lerp(v0, v1, fz))
    }

    /// Analytic gradient of the trilinear interpolant.
    pub fn gradient(&self, p: &Point3<f64>) -> Result<Vector3<f64>> {
        let ([i, j, k], [fx, fy, fz]) = self.cell_of(p)?;
        let c = |di: usize, dj: usize, dk: usize| self.value(i + di, j + dj, k + dk);
        let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;

        // d/dx: difference along x, interpolated over y,z.
        let dx00 = c(1, 0, 0) - c(0, 0, 0);
        let dx10 = c(1, 1, 0) - c(0, 1, 0);
        let dx01 = c(1, 0, 1) - c(0, 0, 1);
        let dx11 = c(1, 1, 1) - c(0, 1, 1);
        let gx = lerp(lerp(dx00, dx10, fy), lerp(dx01, dx11, fy), fz);

        let dy00 = c(0, 1, 0) - c(0, 0, 0);
        let dy10 = c(1, 1, 0) - c(1, 0, 0);
        let dy01 = c(0, 1, 1) - c(0, 0, 1);
        let dy11 = c(1, 1, 1) - c(1, 0, 1);
        let gy = lerp(lerp(dy00, dy10, fx), lerp(dy01, dy11, fx), fz);

        let dz00 = c(0, 0, 1) - c(0, 0, 0);
        let dz10 = c(1, 0, 1) - c(1, 0, 0);
        let dz01 = c(0, 1, 1) - c(0, 1, 0);
        let dz11 = c(1, 1, 1) - c(1, 1, 0);
        let gz = lerp(lerp(dz00, dz10, fx), lerp(dz01, dz11, fx), fy);

        Ok(Vector3::new(gx, gy, gz) / self.spacing)
    }

    /// Central-difference gradient with step = one voxel, used for the
    /// near-surface |grad| sanity invariant.
    pub fn central_gradient(&self, i: usize, j: usize, k: usize) -> Option<Vector3<f64>> {
        if i == 0
            || j == 0
            || k == 0
            || i + 1 >= self.dims[0]
            || j + 1 >= self.dims[1]
            || k + 1 >= self.dims[2]
        {
            return None;
        }
        Some(Vector3::new(
            (self.value(i + 1, j, k) - self.value(i - 1, j, k)) / (2.0 * self.spacing),
            (self.value(i, j + 1, k) - self.value(i, j - 1, k)) / (2.0 * self.spacing),
            (self.value(i, j, k + 1) - self.value(i, j, k - 1)) / (2.0 * self.spacing),
        ))
    }

    /// Writes the flat little-endian f32 payload (x fastest) plus a JSON
    /// sidecar at `path.json`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let io_err = |source| GeomError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut file = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
        for v in &self.values {
            file.write_all(&(*v as f32).to_le_bytes()).map_err(io_err)?;
        }
        file.flush().map_err(io_err)?;

        let sidecar = GridSidecar {
            origin: [self.origin.x, self.origin.y, self.origin.z],
            spacing: self.spacing,
            dims: self.dims,
        };
        let sidecar_path = sidecar_path(path);
        let json = serde_json::to_string_pretty(&sidecar)
            .map_err(|e| GeomError::Invalid(format!("sidecar serialization: {e}")))?;
        std::fs::write(&sidecar_path, json).map_err(|source| GeomError::Io {
            path: sidecar_path.display().to_string(),
            source,
        })?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let sidecar_path = sidecar_path(path);
        let json = std::fs::read_to_string(&sidecar_path).map_err(|source| GeomError::Io {
            path: sidecar_path.display().to_string(),
            source,
        })?;
        let sidecar: GridSidecar = serde_json::from_str(&json)
            .map_err(|e| GeomError::Invalid(format!("sidecar parse: {e}")))?;
        let io_err = |source| GeomError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .map_err(io_err)?
            .read_to_end(&mut bytes)
            .map_err(io_err)?;
        let expected = sidecar.dims[0] * sidecar.dims[1] * sidecar.dims[2];
        if bytes.len() != expected * 4 {
            return Err(GeomError::Invalid(format!(
                "grid payload has {} bytes, expected {}",
                bytes.len(),
                expected * 4
            )));
        }
        let values = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        Ok(Self {
            origin: Point3::new(sidecar.origin[0], sidecar.origin[1], sidecar.origin[2]),
            spacing: sidecar.spacing,
            dims: sidecar.dims,
            values,
        })
    }
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".json");
    std::path::PathBuf::from(os)
}

/// Fixed direction sequence for parity casts; retried in order when a ray
/// grazes an edge.
const PARITY_DIRS: [[f64; 3]; 8] = [
    [0.5381, 0.6793, 0.4989],
    [-0.3162, 0.8375, 0.4459],
    [0.7152, -0.2189, 0.6637],
    [0.1953, 0.4842, -0.8528],
    [-0.6431, -0.5247, 0.5577],
    [0.8643, 0.3127, -0.3934],
    [-0.2517, -0.3861, -0.8874],
    [0.4479, -0.8352, 0.3194],
];

/// Samples the signed distance field of a watertight mesh.
///
/// The grid covers the bounding box plus `padding` voxels on each side.
/// Distances are exact point-to-triangle distances; the sign comes from
/// ray-crossing parity.
pub fn mesh_to_sdf(mesh: &TriangleMesh, spacing: f64, padding: usize) -> Result<SignedDistanceGrid> {
    if spacing <= 0.0 {
        return Err(GeomError::Invalid(format!("spacing must be > 0, got {spacing}")));
    }
    let offending = mesh.offending_edge_count();
    if offending > 0 {
        return Err(GeomError::NotWatertight {
            offending_edges: offending,
        });
    }

    let (lo, hi) = mesh.bounding_box();
    let pad = padding as f64 * spacing;
    let origin = Point3::new(lo.x - pad, lo.y - pad, lo.z - pad);
    let dims = [
        ((hi.x - lo.x + 2.0 * pad) / spacing).ceil() as usize + 1,
        ((hi.y - lo.y + 2.0 * pad) / spacing).ceil() as usize + 1,
        ((hi.z - lo.z + 2.0 * pad) / spacing).ceil() as usize + 1,
    ];

    let bvh = TriBvh::build(mesh);
    let slab = dims[0] * dims[1];
    let values: Vec<f64> = (0..dims[2])
        .into_par_iter()
        .flat_map_iter(|k| {
            let bvh = &bvh;
            let grid_origin = origin;
            (0..slab).map(move |idx| {
                let i = idx % dims[0];
                let j = idx / dims[0];
                let p = Point3::new(
                    grid_origin.x + i as f64 * spacing,
                    grid_origin.y + j as f64 * spacing,
                    grid_origin.z + k as f64 * spacing,
                );
                let d = bvh.closest(&p).distance;
                if parity_inside(bvh, &p) {
                    -d
                } else {
                    d
                }
            })
        })
        .collect();

    Ok(SignedDistanceGrid {
        origin,
        spacing,
        dims,
        values,
    })
}

fn parity_inside(bvh: &TriBvh, p: &Point3<f64>) -> bool {
    let mut last = 0usize;
    for d in PARITY_DIRS {
        let dir = Vector3::new(d[0], d[1], d[2]);
        match bvh.ray_parity(p, &dir) {
            Some(count) => return count % 2 == 1,
            None => {
                last = last.max(1);
            }
        }
    }
    // Every direction grazed an edge; at this point the point is essentially
    // on the surface and the sign is immaterial.
    last % 2 == 1
}

/// Newton projection of `point` onto the zero level set.
///
/// Iterates p <- p - D(p) * grad / |grad|^2 and stops when
/// |D(p)| < 1e-3 * spacing.
pub fn project_to_surface(grid: &SignedDistanceGrid, point: &Point3<f64>) -> Result<Point3<f64>> {
    const MAX_ITERS: usize = 20;
    let tol = 1e-3 * grid.spacing;
    let mut p = *point;
    let mut residual = grid.interpolate(&p)?;
    for _ in 0..MAX_ITERS {
        if residual.abs() < tol {
            return Ok(p);
        }
        let g = grid.gradient(&p)?;
        let g2 = g.norm_squared();
        if g2 < 1e-12 {
            return Err(GeomError::DegenerateGradient {
                point: [p.x, p.y, p.z],
                magnitude: g2.sqrt(),
            });
        }
        p -= g * (residual / g2);
        if !grid.contains(&p) {
            return Err(GeomError::OutOfBounds { point: [p.x, p.y, p.z] });
        }
        residual = grid.interpolate(&p)?;
    }
    if residual.abs() < tol {
        Ok(p)
    } else {
        Err(GeomError::ProjectionDiverged {
            iterations: MAX_ITERS,
            residual,
        })
    }
}
