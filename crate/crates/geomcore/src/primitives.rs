//! Analytic test meshes: icosphere, cube, plane grid, cylinder.
//!
//! These double as templates for synthetic ensemble generation.

use nalgebra::Point3;
use std::collections::HashMap;

use crate::mesh::TriangleMesh;

/// Regular icosahedron inscribed in the unit sphere.
pub fn icosahedron() -> TriangleMesh {
    let (verts, tris) = icosahedron_raw();
    TriangleMesh::new(verts, tris).expect("icosahedron is valid")
}

fn icosahedron_raw() -> (Vec<Point3<f64>>, Vec<[u32; 3]>) {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let scale = 1.0 / (1.0 + phi * phi).sqrt();
    let a = scale;
    let b = phi * scale;
    let verts = vec![
        Point3::new(-a, b, 0.0),
        Point3::new(a, b, 0.0),
        Point3::new(-a, -b, 0.0),
        Point3::new(a, -b, 0.0),
        Point3::new(0.0, -a, b),
        Point3::new(0.0, a, b),
        Point3::new(0.0, -a, -b),
        Point3::new(0.0, a, -b),
        Point3::new(b, 0.0, -a),
        Point3::new(b, 0.0, a),
        Point3::new(-b, 0.0, -a),
        Point3::new(-b, 0.0, a),
    ];
    let tris = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    (verts, tris)
}

/// Unit-radius icosphere: `level` subdivisions of the icosahedron with all
/// vertices projected to the sphere. Vertex count is 10*4^level + 2.
pub fn icosphere(level: usize) -> TriangleMesh {
    let (mut verts, mut tris) = icosahedron_raw();
    for _ in 0..level {
        let mut midpoint_cache: HashMap<(u32, u32), u32> = HashMap::new();
        let mut next = Vec::with_capacity(tris.len() * 4);
        for tri in &tris {
            let mut mids = [0u32; 3];
            for k in 0..3 {
                let a = tri[k];
                let b = tri[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                mids[k] = *midpoint_cache.entry(key).or_insert_with(|| {
                    let m = (verts[a as usize].coords + verts[b as usize].coords) / 2.0;
                    verts.push(Point3::from(m.normalize()));
                    (verts.len() - 1) as u32
                });
            }
            let [a, b, c] = *tri;
            let [ab, bc, ca] = mids;
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        tris = next;
    }
    TriangleMesh::new(verts, tris).expect("icosphere is valid")
}

/// Unit cube [0,1]^3 with triangulated faces.
pub fn cube() -> TriangleMesh {
    let verts = vec![
        Point3::new(0.0, 0.0, 0.0),
        Point3::new(1.0, 0.0, 0.0),
        Point3::new(1.0, 1.0, 0.0),
        Point3::new(0.0, 1.0, 0.0),
        Point3::new(0.0, 0.0, 1.0),
        Point3::new(1.0, 0.0, 1.0),
        Point3::new(1.0, 1.0, 1.0),
        Point3::new(0.0, 1.0, 1.0),
    ];
    let quads: [[u32; 4]; 6] = [
        [3, 2, 1, 0],
        [4, 5, 6, 7],
        [0, 1, 5, 4],
        [2, 3, 7, 6],
        [1, 2, 6, 5],
        [3, 0, 4, 7],
    ];
    let mut tris = Vec::new();
    for q in quads {
        tris.push([q[0], q[1], q[2]]);
        tris.push([q[0], q[2], q[3]]);
    }
    TriangleMesh::new(verts, tris).expect("cube is valid")
}

/// Flat triangulated grid in the z=0 plane spanning [-half, half]^2 with
/// `n` vertices per side.
pub fn plane_grid(n: usize, half: f64) -> TriangleMesh {
    assert!(n >= 2);
    let mut verts = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let x = -half + 2.0 * half * i as f64 / (n - 1) as f64;
            let y = -half + 2.0 * half * j as f64 / (n - 1) as f64;
            verts.push(Point3::new(x, y, 0.0));
        }
    }
    let mut tris = Vec::new();
    let idx = |i: usize, j: usize| (j * n + i) as u32;
    for j in 0..n - 1 {
        for i in 0..n - 1 {
            tris.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            tris.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    TriangleMesh::new(verts, tris).expect("plane grid is valid")
}

/// Open cylinder of given radius about the z axis, z in [-half_height, half_height].
/// `segments` around, `rows` along the axis. Boundary rings stay open.
pub fn cylinder(radius: f64, half_height: f64, segments: usize, rows: usize) -> TriangleMesh {
    assert!(segments >= 3 && rows >= 2);
    let mut verts = Vec::new();
    for r in 0..rows {
        let z = -half_height + 2.0 * half_height * r as f64 / (rows - 1) as f64;
        for s in 0..segments {
            let theta = 2.0 * std::f64::consts::PI * s as f64 / segments as f64;
            verts.push(Point3::new(radius * theta.cos(), radius * theta.sin(), z));
        }
    }
    let mut tris = Vec::new();
    let idx = |s: usize, r: usize| (r * segments + s % segments) as u32;
    for r in 0..rows - 1 {
        for s in 0..segments {
            tris.push([idx(s, r), idx(s + 1, r), idx(s + 1, r + 1)]);
            tris.push([idx(s, r), idx(s + 1, r + 1), idx(s, r + 1)]);
        }
    }
    TriangleMesh::new(verts, tris).expect("cylinder is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_vertex_counts() {
        assert_eq!(icosphere(0).vertex_count(), 12);
        assert_eq!(icosphere(2).vertex_count(), 162);
        assert_eq!(icosphere(4).vertex_count(), 2562);
    }

    #[test]
    fn icosphere_vertices_on_unit_sphere() {
        let m = icosphere(2);
        for v in m.vertices() {
            assert!((v.coords.norm() - 1.0).abs() < 1e-12);
        }
    }
}
