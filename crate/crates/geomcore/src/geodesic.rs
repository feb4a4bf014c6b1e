//! Straightest geodesics by successive triangle unfolding.
//!
//! A geodesic is walked triangle by triangle: inside each (flat) triangle it
//! is a straight segment; crossing an edge rotates the direction about the
//! edge axis by the dihedral angle, which is exactly the unfolding map.

use nalgebra::{Point3, Vector3};

use crate::error::{GeomError, Result};
use crate::mesh::TriangleMesh;

/// Result of a geodesic walk.
#[derive(Debug, Clone)]
pub struct GeodesicTrace {
    /// Point reached after walking `traveled` arc length.
    pub end: Point3<f64>,
    /// Parallel-transported tangent direction at `end`.
    pub end_dir: Vector3<f64>,
    /// Arc length actually traversed (== requested unless `boundary`).
    pub traveled: f64,
    /// True if the walk stopped at an open boundary edge.
    pub boundary: bool,
    /// Positions at the requested sample radii (ascending); truncated when
    /// the walk hits a boundary first.
    pub samples: Vec<Point3<f64>>,
}

/// Walks a straightest geodesic of the given arc length and returns the end
/// point. Open boundaries are an error carrying the distance traveled.
pub fn trace_geodesic(
    mesh: &TriangleMesh,
    start: &Point3<f64>,
    tangent_dir: &Vector3<f64>,
    length: f64,
) -> Result<Point3<f64>> {
    let trace = trace_geodesic_full(mesh, start, tangent_dir, length, &[])?;
    if trace.boundary {
        return Err(GeomError::BoundaryReached {
            traveled: trace.traveled,
            requested: length,
        });
    }
    Ok(trace.end)
}

/// Full geodesic walk collecting intermediate positions at `sample_radii`
/// (must be ascending). Boundary hits stop the walk and are reported in the
/// trace instead of failing.
pub fn trace_geodesic_full(
    mesh: &TriangleMesh,
    start: &Point3<f64>,
    tangent_dir: &Vector3<f64>,
    length: f64,
    sample_radii: &[f64],
) -> Result<GeodesicTrace> {
    debug_assert!(sample_radii.windows(2).all(|w| w[0] <= w[1]));

    let hit = mesh.locate(start);
    let mut tri = pick_start_triangle(mesh, hit.triangle, &hit.barycentric, tangent_dir);
    let mut p = hit.point;
    let mut n = mesh.triangle_normal(tri);
    let mut d = project_unit(tangent_dir, &n);

    let mut samples = Vec::with_capacity(sample_radii.len());
    let mut next_sample = 0usize;
    let mut traveled = 0.0f64;
    let mut remaining = length;
    let mut entry_edge: Option<usize> = None;

    if length <= 0.0 {
        while next_sample < sample_radii.len() && sample_radii[next_sample] <= 0.0 {
            samples.push(p);
            next_sample += 1;
        }
        return Ok(GeodesicTrace {
            end: p,
            end_dir: d,
            traveled: 0.0,
            boundary: false,
            samples,
        });
    }

    let min_edge = mesh.mean_edge_length() * 1e-3;
    let max_steps = 64 + (16.0 * length / min_edge.max(1e-12)) as usize;

    for _ in 0..max_steps {
        // Distance to the exit edge.
        let verts = mesh.triangle_vertices(tri);
        let mut best: Option<(f64, usize, f64)> = None; // (tau, edge, u)
        for k in 0..3 {
            if entry_edge == Some(k) {
                continue;
            }
            let a = verts[k];
            let b = verts[(k + 1) % 3];
            let e = b - a;
            let m = e.cross(&n); // in-plane normal of the edge line
            let denom = d.dot(&m);
            if denom.abs() < 1e-15 {
                continue;
            }
            let tau = (a - p).dot(&m) / denom;
            if tau < -1e-12 {
                continue;
            }
            let q = p + d * tau;
            let u = (q - a).dot(&e) / e.norm_squared();
            if !(-1e-9..=1.0 + 1e-9).contains(&u) {
                continue;
            }
            if best.map_or(true, |(t, _, _)| tau < t) {
                best = Some((tau.max(0.0), k, u));
            }
        }

        let (tau, edge, u) = match best {
            Some(b) => b,
            None => {
                // Numerical corner (ray exits through a vertex); nudge toward
                // the centroid and retry next iteration.
                let centroid =
                    (verts[0].coords + verts[1].coords + verts[2].coords) / 3.0;
                p += (Point3::from(centroid) - p) * 1e-9;
                entry_edge = None;
                continue;
            }
        };

        if remaining <= tau {
            while next_sample < sample_radii.len() && sample_radii[next_sample] <= traveled + remaining
            {
                let s = (sample_radii[next_sample] - traveled).max(0.0);
                samples.push(p + d * s);
                next_sample += 1;
            }
            let end = p + d * remaining;
            return Ok(GeodesicTrace {
                end,
                end_dir: d,
                traveled: length,
                boundary: false,
                samples,
            });
        }

        while next_sample < sample_radii.len() && sample_radii[next_sample] <= traveled + tau {
            let s = (sample_radii[next_sample] - traveled).max(0.0);
            samples.push(p + d * s);
            next_sample += 1;
        }

        let a = verts[edge];
        let b = verts[(edge + 1) % 3];
        let e = b - a;
        // Snap off the vertices so the next triangle lookup stays on this edge.
        let u = u.clamp(1e-9, 1.0 - 1e-9);
        p = a + e * u;
        traveled += tau;
        remaining -= tau;

        let neighbor = match mesh.neighbor_across(tri, edge) {
            Some(t) => t as usize,
            None => {
                return Ok(GeodesicTrace {
                    end: p,
                    end_dir: d,
                    traveled,
                    boundary: true,
                    samples,
                });
            }
        };

        // Rotate the direction about the shared edge by the dihedral angle.
        let n2 = mesh.triangle_normal(neighbor);
        let axis = e.normalize();
        let cos_t = n.dot(&n2).clamp(-1.0, 1.0);
        let sin_t = n.cross(&n2).dot(&axis);
        d = rodrigues(&d, &axis, cos_t, sin_t);
        d = project_unit(&d, &n2);
        n = n2;

        entry_edge = local_edge_of(mesh, neighbor, mesh.triangles()[tri][edge], mesh.triangles()[tri][(edge + 1) % 3]);
        tri = neighbor;
    }

    Err(GeomError::WalkerStuck { steps: max_steps })
}

fn rodrigues(v: &Vector3<f64>, axis: &Vector3<f64>, cos_t: f64, sin_t: f64) -> Vector3<f64> {
    v * cos_t + axis.cross(v) * sin_t + axis * (axis.dot(v)) * (1.0 - cos_t)
}

fn project_unit(v: &Vector3<f64>, n: &Vector3<f64>) -> Vector3<f64> {
    let t = v - n * v.dot(n);
    let len = t.norm();
    if len < 1e-15 {
        // Degenerate: direction parallel to the normal. Pick any tangent.
        let alt = if n.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        return (alt - n * n.dot(&alt)).normalize();
    }
    t / len
}

/// Local edge index of (a, b) in triangle `t`, regardless of orientation.
fn local_edge_of(mesh: &TriangleMesh, t: usize, a: u32, b: u32) -> Option<usize> {
    let tri = mesh.triangles()[t];
    (0..3).find(|&k| {
        let p = tri[k];
        let q = tri[(k + 1) % 3];
        (p == a && q == b) || (p == b && q == a)
    })
}

/// Chooses the incident triangle whose interior the direction points into when
/// the start lies on a vertex or edge. Scores candidates by how strongly the
/// projected direction moves the zero barycentric coordinates inward.
fn pick_start_triangle(
    mesh: &TriangleMesh,
    hit_triangle: usize,
    barycentric: &[f64; 3],
    dir: &Vector3<f64>,
) -> usize {
    const BARY_EPS: f64 = 1e-9;
    let zeros: Vec<usize> = (0..3).filter(|&k| barycentric[k] <= BARY_EPS).collect();
    if zeros.is_empty() {
        return hit_triangle;
    }

    let tri = mesh.triangles()[hit_triangle];
    let candidates: Vec<usize> = if zeros.len() >= 2 {
        // Vertex start: all triangles around the nonzero-coordinate vertex.
        let v = (0..3)
            .max_by(|&i, &j| barycentric[i].partial_cmp(&barycentric[j]).unwrap())
            .unwrap();
        mesh.vertex_triangles(tri[v] as usize)
            .iter()
            .map(|&t| t as usize)
            .collect()
    } else {
        // Edge start: this triangle and the one across the edge.
        let opposite = zeros[0];
        let edge = (opposite + 1) % 3; // edge (v[o+1], v[o+2]) excludes vertex o
        let mut c = vec![hit_triangle];
        if let Some(t) = mesh.neighbor_across(hit_triangle, edge) {
            c.push(t as usize);
        }
        c
    };

    let mut best = (hit_triangle, f64::NEG_INFINITY);
    for t in candidates {
        let n = mesh.triangle_normal(t);
        let dt = project_unit(dir, &n);
        let verts = mesh.triangle_vertices(t);
        // Inward margin: minimum directional derivative of the barycentric
        // coordinates that vanish at the start point.
        let mut margin = f64::INFINITY;
        for k in 0..3 {
            let a = verts[k];
            let opp_a = verts[(k + 1) % 3];
            let opp_b = verts[(k + 2) % 3];
            let m = n.cross(&(opp_b - opp_a)); // inward-ish normal of opposite edge
            let denom = (a - opp_a).dot(&m);
            if denom.abs() < 1e-18 {
                continue;
            }
            let grad = m / denom; // gradient of barycentric k
            // Distance of start to this coordinate's zero line: only count
            // coordinates that are zero at the start.
            let lam = (mesh.locate_bary(t, &verts, &start_point_of(mesh, hit_triangle, barycentric)))[k];
            if lam <= BARY_EPS {
                margin = margin.min(dt.dot(&grad));
            }
        }
        if margin == f64::INFINITY {
            margin = 0.0;
        }
        if margin > best.1 {
            best = (t, margin);
        }
    }
    best.0
}

fn start_point_of(mesh: &TriangleMesh, t: usize, bary: &[f64; 3]) -> Point3<f64> {
    let verts = mesh.triangle_vertices(t);
    Point3::from(
        verts[0].coords * bary[0] + verts[1].coords * bary[1] + verts[2].coords * bary[2],
    )
}

impl TriangleMesh {
    /// Barycentric coordinates of `p` with respect to triangle vertices.
    pub(crate) fn locate_bary(&self, _t: usize, verts: &[Point3<f64>; 3], p: &Point3<f64>) -> [f64; 3] {
        let v0 = verts[1] - verts[0];
        let v1 = verts[2] - verts[0];
        let v2 = p - verts[0];
        let d00 = v0.dot(&v0);
        let d01 = v0.dot(&v1);
        let d11 = v1.dot(&v1);
        let d20 = v2.dot(&v0);
        let d21 = v2.dot(&v1);
        let denom = d00 * d11 - d01 * d01;
        let v = (d11 * d20 - d01 * d21) / denom;
        let w = (d00 * d21 - d01 * d20) / denom;
        [1.0 - v - w, v, w]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives;

    #[test]
    fn zero_length_returns_start() {
        let mesh = primitives::plane_grid(11, 2.0);
        let start = Point3::new(0.13, 0.21, 0.0);
        let end = trace_geodesic(&mesh, &start, &Vector3::x(), 0.0).unwrap();
        assert!((end - start).norm() < 1e-12);
    }

    #[test]
    fn plane_geodesics_are_straight_lines() {
        let mesh = primitives::plane_grid(41, 2.0);
        let start = Point3::new(-1.5, -1.5, 0.0);
        let dir = Vector3::new(1.0, 0.0, 0.0);
        let end = trace_geodesic(&mesh, &start, &dir, 3.0).unwrap();
        assert!(
            (end - Point3::new(1.5, -1.5, 0.0)).norm() < 1e-6,
            "end = {end:?}"
        );

        // Oblique direction, away from the edge lattice.
        let dir = Vector3::new(0.8, 0.6, 0.0);
        let end = trace_geodesic(&mesh, &start, &dir, 2.5).unwrap();
        assert!(
            (end - Point3::new(-1.5 + 2.0, -1.5 + 1.5, 0.0)).norm() < 1e-6,
            "end = {end:?}"
        );
    }

    #[test]
    fn sphere_geodesic_reaches_antipode() {
        let mesh = primitives::icosphere(4);
        let pi = std::f64::consts::PI;
        for (vi, dir) in [(0usize, Vector3::x()), (100, Vector3::new(0.3, -0.8, 0.52))] {
            let start = mesh.vertices()[vi];
            let end = trace_geodesic(&mesh, &start, &dir, pi).unwrap();
            let err = (end.coords + start.coords).norm();
            assert!(err < 0.02 * pi, "antipode error {err} from vertex {vi}");
        }
    }

    #[test]
    fn open_boundary_reports_distance() {
        let mesh = primitives::plane_grid(11, 1.0);
        let start = Point3::new(0.0, 0.0, 0.0);
        match trace_geodesic(&mesh, &start, &Vector3::x(), 5.0) {
            Err(GeomError::BoundaryReached { traveled, .. }) => {
                assert!((traveled - 1.0).abs() < 1e-9, "traveled {traveled}");
            }
            other => panic!("expected BoundaryReached, got {other:?}"),
        }
    }

    #[test]
    fn path_length_additivity_with_transport() {
        let mesh = primitives::icosphere(3);
        let start = mesh.vertices()[37];
        let dir = Vector3::new(0.2, 0.5, -0.3);
        let (a, b) = (0.7, 0.9);

        let full = trace_geodesic_full(&mesh, &start, &dir, a + b, &[]).unwrap();
        let first = trace_geodesic_full(&mesh, &start, &dir, a, &[]).unwrap();
        let second = trace_geodesic_full(&mesh, &first.end, &first.end_dir, b, &[]).unwrap();
        let err = (second.end - full.end).norm();
        assert!(err < 1e-3 * (a + b), "additivity error {err}");
    }

    #[test]
    fn samples_lie_on_the_path() {
        let mesh = primitives::plane_grid(41, 3.0);
        let start = Point3::new(-2.0, 0.1, 0.0);
        let radii = [0.5, 1.0, 1.5, 2.0];
        let trace =
            trace_geodesic_full(&mesh, &start, &Vector3::new(1.0, 0.2, 0.0), 2.5, &radii).unwrap();
        assert_eq!(trace.samples.len(), 4);
        let d = Vector3::new(1.0, 0.2, 0.0).normalize();
        for (r, s) in radii.iter().zip(&trace.samples) {
            assert!((s - (start + d * *r)).norm() < 1e-9);
        }
    }
}
