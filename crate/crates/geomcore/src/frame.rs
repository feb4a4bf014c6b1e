//! Principal-curvature frames from weighted quadric fits.

use nalgebra::{Matrix3, Point3, Vector3};

use crate::error::{GeomError, Result};
use crate::mesh::TriangleMesh;

/// Orthonormal right-handed surface frame with principal curvatures.
///
/// `u` is the first principal direction (kappa1 >= kappa2) and
/// u x v = normal. A sphere with outward normals has positive curvature.
#[derive(Debug, Clone, Copy)]
pub struct LocalFrame {
    pub point: Point3<f64>,
    pub normal: Vector3<f64>,
    pub u: Vector3<f64>,
    pub v: Vector3<f64>,
    pub kappa1: f64,
    pub kappa2: f64,
}

impl LocalFrame {
    /// Applies a rigid motion to the frame.
    pub fn transformed(&self, rotation: &Matrix3<f64>, translation: &Vector3<f64>) -> Self {
        Self {
            point: Point3::from(rotation * self.point.coords + translation),
            normal: rotation * self.normal,
            u: rotation * self.u,
            v: rotation * self.v,
            kappa1: self.kappa1,
            kappa2: self.kappa2,
        }
    }
}

/// Fits the quadric height function z = (a x^2 + 2 b xy + c y^2)/2 over a
/// vertex neighborhood of the containing triangle and eigen-decomposes the
/// shape matrix to recover principal curvatures and directions.
///
/// The neighborhood starts at the two-ring of the containing triangle and
/// grows ring by ring until at least 8 usable samples exist. Samples are
/// Gaussian-weighted by distance so the innermost ring dominates.
pub fn estimate_local_frame(mesh: &TriangleMesh, point: &Point3<f64>) -> Result<LocalFrame> {
    let hit = mesh.locate(point);
    let p = hit.point;
    let normal = mesh.interpolated_normal(&hit);

    let neighbors = gather_neighborhood(mesh, hit.triangle, 8)?;

    // Tangent basis from the smallest normal component axis.
    let e1 = pick_tangent(&normal);
    let e2 = normal.cross(&e1);

    // Collect (x, y, z, r) tuples in the frame at p.
    let mut samples = Vec::with_capacity(neighbors.len());
    for &vi in &neighbors {
        let d = mesh.vertices()[vi as usize] - p;
        let r = d.norm();
        if r < 1e-12 {
            continue;
        }
        samples.push((d.dot(&e1), d.dot(&e2), d.dot(&normal), r));
    }
    if samples.len() < 5 {
        return Err(GeomError::RankDeficientNeighborhood {
            neighbors: samples.len(),
        });
    }

    let h = samples.iter().map(|s| s.3).sum::<f64>() / samples.len() as f64;
    let inv_h2 = 1.0 / (h * h);

    // Weighted normal equations for [a, b, c].
    let mut ata = Matrix3::zeros();
    let mut atz = Vector3::zeros();
    for &(x, y, z, r) in &samples {
        let w = (-r * r * inv_h2).exp();
        let row = Vector3::new(0.5 * x * x, x * y, 0.5 * y * y);
        ata += w * row * row.transpose();
        atz += w * row * z;
    }
    let coeffs = ata.lu().solve(&atz).ok_or(GeomError::RankDeficientNeighborhood {
        neighbors: samples.len(),
    })?;
    let (a, b, c) = (coeffs[0], coeffs[1], coeffs[2]);

    // Shape operator sign convention: height decreases away from the tangent
    // plane on a convex surface with outward normals, so kappa = -eigenvalue.
    let (ev1, ev2, dir) = sym2x2_eigen(-a, -b, -c);
    let u = (e1 * dir.0 + e2 * dir.1).normalize();
    let v = normal.cross(&u);

    Ok(LocalFrame {
        point: p,
        normal,
        u,
        v,
        kappa1: ev1,
        kappa2: ev2,
    })
}

fn pick_tangent(normal: &Vector3<f64>) -> Vector3<f64> {
    let abs = normal.map(f64::abs);
    let axis = if abs.x <= abs.y && abs.x <= abs.z {
        Vector3::x()
    } else if abs.y <= abs.z {
        Vector3::y()
    } else {
        Vector3::z()
    };
    (axis - normal * normal.dot(&axis)).normalize()
}

/// Eigen-decomposition of [[m11, m12], [m12, m22]]; returns eigenvalues in
/// descending order plus the 2-D eigenvector of the larger one.
fn sym2x2_eigen(m11: f64, m12: f64, m22: f64) -> (f64, f64, (f64, f64)) {
    let tr = m11 + m22;
    let diff = m11 - m22;
    let disc = (diff * diff + 4.0 * m12 * m12).sqrt();
    let l1 = 0.5 * (tr + disc);
    let l2 = 0.5 * (tr - disc);
    // Eigenvector for l1; fall back to axes when the matrix is (near) isotropic.
    let v = if m12.abs() > 1e-300 {
        (l1 - m22, m12)
    } else if m11 >= m22 {
        (1.0, 0.0)
    } else {
        (0.0, 1.0)
    };
    let norm = (v.0 * v.0 + v.1 * v.1).sqrt();
    (l1, l2, (v.0 / norm, v.1 / norm))
}

/// Vertices within `min_rings` rings of the containing triangle, extended
/// ring by ring until at least `min_samples` are collected.
fn gather_neighborhood(mesh: &TriangleMesh, triangle: usize, min_samples: usize) -> Result<Vec<u32>> {
    let mut collected: Vec<u32> = mesh.triangles()[triangle].to_vec();
    let mut seen: std::collections::HashSet<u32> = collected.iter().copied().collect();
    let mut frontier = collected.clone();
    let mut rings = 0usize;
    loop {
        rings += 1;
        let mut next = Vec::new();
        for &v in &frontier {
            for &w in mesh.vertex_ring(v as usize) {
                if seen.insert(w) {
                    next.push(w);
                    collected.push(w);
                }
            }
        }
        if rings >= 2 && collected.len() >= min_samples {
            break;
        }
        if next.is_empty() {
            // Exhausted the component.
            if collected.len() < min_samples {
                return Err(GeomError::RankDeficientNeighborhood {
                    neighbors: collected.len(),
                });
            }
            break;
        }
        frontier = next;
    }
    Ok(collected)
}
