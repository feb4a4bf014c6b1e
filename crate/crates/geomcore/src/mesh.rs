use nalgebra::{Point3, Vector3};
use std::sync::OnceLock;

use crate::bvh::{SurfaceHit, TriBvh};
use crate::error::{GeomError, Result};

/// Indexed triangle surface with per-vertex normals and precomputed topology.
///
/// Construction cleans up degenerate triangles, drops unused vertices and
/// rejects meshes that are not edge-connected. Vertex normals are the
/// area-weighted average of incident triangle normals.
#[derive(Debug)]
pub struct TriangleMesh {
    vertices: Vec<Point3<f64>>,
    triangles: Vec<[u32; 3]>,
    vertex_normals: Vec<Vector3<f64>>,
    /// Neighbor triangle across edge k = (v[k], v[k+1 mod 3]), if any.
    tri_adjacency: Vec<[Option<u32>; 3]>,
    /// Incident triangles per vertex.
    vertex_tris: Vec<Vec<u32>>,
    /// One-ring vertex adjacency.
    vertex_neighbors: Vec<Vec<u32>>,
    /// Lazily built acceleration structure for point location.
    bvh: OnceLock<TriBvh>,
}

impl Clone for TriangleMesh {
    fn clone(&self) -> Self {
        Self {
            vertices: self.vertices.clone(),
            triangles: self.triangles.clone(),
            vertex_normals: self.vertex_normals.clone(),
            tri_adjacency: self.tri_adjacency.clone(),
            vertex_tris: self.vertex_tris.clone(),
            vertex_neighbors: self.vertex_neighbors.clone(),
            bvh: OnceLock::new(),
        }
    }
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Point3<f64>>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        for tri in &triangles {
            for &i in tri {
                if i as usize >= vertices.len() {
                    return Err(GeomError::IndexOutOfRange {
                        index: i as usize,
                        vertices: vertices.len(),
                    });
                }
            }
        }

        let scale = bbox_diagonal(&vertices);
        let area_floor = 1e-12 * scale * scale;

        // Drop degenerate triangles, then compact away unused vertices.
        let mut kept: Vec<[u32; 3]> = Vec::with_capacity(triangles.len());
        for tri in &triangles {
            let [a, b, c] = *tri;
            if a == b || b == c || a == c {
                continue;
            }
            let area = triangle_area(
                &vertices[a as usize],
                &vertices[b as usize],
                &vertices[c as usize],
            );
            if area > area_floor {
                kept.push(*tri);
            }
        }
        if kept.is_empty() {
            return Err(GeomError::EmptyMesh);
        }

        let mut remap = vec![u32::MAX; vertices.len()];
        let mut new_vertices = Vec::new();
        for tri in &mut kept {
            for idx in tri.iter_mut() {
                let old = *idx as usize;
                if remap[old] == u32::MAX {
                    remap[old] = new_vertices.len() as u32;
                    new_vertices.push(vertices[old]);
                }
                *idx = remap[old];
            }
        }

        let mesh = Self::from_clean(new_vertices, kept)?;
        mesh.check_connected()?;
        Ok(mesh)
    }

    /// Builds topology and normals for already-cleaned data.
    fn from_clean(vertices: Vec<Point3<f64>>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        let nv = vertices.len();
        let nt = triangles.len();

        let mut vertex_tris = vec![Vec::new(); nv];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                vertex_tris[v as usize].push(t as u32);
            }
        }

        let mut vertex_neighbors: Vec<Vec<u32>> = vec![Vec::new(); nv];
        for tri in &triangles {
            for k in 0..3 {
                let a = tri[k] as usize;
                let b = tri[(k + 1) % 3];
                if !vertex_neighbors[a].contains(&b) {
                    vertex_neighbors[a].push(b);
                }
                let b = b as usize;
                let a = tri[k];
                if !vertex_neighbors[b].contains(&a) {
                    vertex_neighbors[b].push(a);
                }
            }
        }

        // Edge map keyed on sorted vertex pair -> (triangle, local edge) pairs.
        let mut edge_map: std::collections::HashMap<(u32, u32), Vec<(u32, u8)>> =
            std::collections::HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let a = tri[k];
                let b = tri[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                edge_map.entry(key).or_default().push((t as u32, k as u8));
            }
        }
        let mut tri_adjacency = vec![[None; 3]; nt];
        for entries in edge_map.values() {
            if entries.len() == 2 {
                let (t0, e0) = entries[0];
                let (t1, e1) = entries[1];
                tri_adjacency[t0 as usize][e0 as usize] = Some(t1);
                tri_adjacency[t1 as usize][e1 as usize] = Some(t0);
            }
        }

        let mut normals = vec![Vector3::zeros(); nv];
        for tri in &triangles {
            let [a, b, c] = tri.map(|i| i as usize);
            // Cross product magnitude is twice the area, so summing raw cross
            // products gives the area weighting directly.
            let n = (vertices[b] - vertices[a]).cross(&(vertices[c] - vertices[a]));
            normals[a] += n;
            normals[b] += n;
            normals[c] += n;
        }
        for (i, n) in normals.iter_mut().enumerate() {
            let len = n.norm();
            if len <= f64::EPSILON {
                return Err(GeomError::Invalid(format!(
                    "zero normal at vertex {i}: incident triangles cancel"
                )));
            }
            *n /= len;
        }

        Ok(Self {
            vertices,
            triangles,
            vertex_normals: normals,
            tri_adjacency,
            vertex_tris,
            vertex_neighbors,
            bvh: OnceLock::new(),
        })
    }

    pub fn bvh(&self) -> &TriBvh {
        self.bvh.get_or_init(|| TriBvh::build(self))
    }

    /// Nearest surface point with triangle and barycentric coordinates.
    pub fn locate(&self, point: &Point3<f64>) -> SurfaceHit {
        self.bvh().closest(point)
    }

    /// Normal interpolated from vertex normals at a surface location.
    pub fn interpolated_normal(&self, hit: &SurfaceHit) -> Vector3<f64> {
        let tri = self.triangles[hit.triangle];
        let mut n = Vector3::zeros();
        for k in 0..3 {
            n += self.vertex_normals[tri[k] as usize] * hit.barycentric[k];
        }
        n.normalize()
    }

    fn check_connected(&self) -> Result<()> {
        let components = self.component_count();
        if components != 1 {
            return Err(GeomError::MultiComponent { components });
        }
        Ok(())
    }

    fn component_count(&self) -> usize {
        let nv = self.vertices.len();
        let mut visited = vec![false; nv];
        let mut components = 0;
        let mut stack = Vec::new();
        for start in 0..nv {
            if visited[start] {
                continue;
            }
            components += 1;
            visited[start] = true;
            stack.push(start);
            while let Some(v) = stack.pop() {
                for &w in &self.vertex_neighbors[v] {
                    let w = w as usize;
                    if !visited[w] {
                        visited[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        components
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn vertex_normals(&self) -> &[Vector3<f64>] {
        &self.vertex_normals
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_vertices(&self, t: usize) -> [Point3<f64>; 3] {
        self.triangles[t].map(|i| self.vertices[i as usize])
    }

    pub fn triangle_normal(&self, t: usize) -> Vector3<f64> {
        let [a, b, c] = self.triangle_vertices(t);
        (b - a).cross(&(c - a)).normalize()
    }

    /// Neighbor triangle across local edge k = (v[k], v[k+1]).
    pub fn neighbor_across(&self, t: usize, edge: usize) -> Option<u32> {
        self.tri_adjacency[t][edge]
    }

    pub fn vertex_triangles(&self, v: usize) -> &[u32] {
        &self.vertex_tris[v]
    }

    pub fn vertex_ring(&self, v: usize) -> &[u32] {
        &self.vertex_neighbors[v]
    }

    /// Axis-aligned bounding box as (min, max).
    pub fn bounding_box(&self) -> (Point3<f64>, Point3<f64>) {
        bounding_box(&self.vertices)
    }

    pub fn bbox_diagonal(&self) -> f64 {
        bbox_diagonal(&self.vertices)
    }

    /// Area-weighted centroid of the surface.
    pub fn surface_centroid(&self) -> Point3<f64> {
        let mut acc = Vector3::zeros();
        let mut total = 0.0;
        for t in 0..self.triangle_count() {
            let [a, b, c] = self.triangle_vertices(t);
            let area = triangle_area(&a, &b, &c);
            let centroid = (a.coords + b.coords + c.coords) / 3.0;
            acc += centroid * area;
            total += area;
        }
        Point3::from(acc / total)
    }

    pub fn mean_edge_length(&self) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for tri in &self.triangles {
            for k in 0..3 {
                let a = tri[k] as usize;
                let b = tri[(k + 1) % 3] as usize;
                if a < b {
                    sum += (self.vertices[a] - self.vertices[b]).norm();
                    count += 1;
                }
            }
        }
        sum / count as f64
    }

    /// Offending (boundary or non-manifold) edge count; 0 means watertight.
    pub fn offending_edge_count(&self) -> usize {
        let mut edge_counts: std::collections::HashMap<(u32, u32), usize> =
            std::collections::HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let a = tri[k];
                let b = tri[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                *edge_counts.entry(key).or_insert(0) += 1;
            }
        }
        edge_counts.values().filter(|&&c| c != 2).count()
    }

    /// Applies a rigid motion, returning a new mesh. Topology is unchanged.
    pub fn transformed(&self, rotation: &nalgebra::Matrix3<f64>, translation: &Vector3<f64>) -> Self {
        let vertices = self
            .vertices
            .iter()
            .map(|p| Point3::from(rotation * p.coords + translation))
            .collect();
        let vertex_normals = self.vertex_normals.iter().map(|n| rotation * n).collect();
        Self {
            vertices,
            triangles: self.triangles.clone(),
            vertex_normals,
            tri_adjacency: self.tri_adjacency.clone(),
            vertex_tris: self.vertex_tris.clone(),
            vertex_neighbors: self.vertex_neighbors.clone(),
            bvh: OnceLock::new(),
        }
    }

    /// Displaces every vertex and rebuilds normals; topology is kept.
    pub fn displaced(&self, new_vertices: Vec<Point3<f64>>) -> Result<Self> {
        if new_vertices.len() != self.vertices.len() {
            return Err(GeomError::Invalid(format!(
                "displaced(): expected {} vertices, got {}",
                self.vertices.len(),
                new_vertices.len()
            )));
        }
        Self::from_clean(new_vertices, self.triangles.clone())
    }
}

pub(crate) fn triangle_area(a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

pub(crate) fn bounding_box(points: &[Point3<f64>]) -> (Point3<f64>, Point3<f64>) {
    let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

pub(crate) fn bbox_diagonal(points: &[Point3<f64>]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let (lo, hi) = bounding_box(points);
    (hi - lo).norm()
}

/// Largest bounding-box diagonal over an ensemble; the geodesic patch radius
/// is conventionally 5% of this value.
pub fn max_shape_diameter(meshes: &[TriangleMesh]) -> Result<f64> {
    if meshes.is_empty() {
        return Err(GeomError::EmptyList);
    }
    Ok(meshes
        .iter()
        .map(|m| m.bbox_diagonal())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives;

    #[test]
    fn icosahedron_normals_are_radial() {
        let mesh = primitives::icosahedron();
        assert_eq!(mesh.vertex_count(), 12);
        assert_eq!(mesh.triangle_count(), 20);
        for (p, n) in mesh.vertices().iter().zip(mesh.vertex_normals()) {
            let radial = p.coords.normalize();
            assert!((radial - n).norm() < 1e-9, "normal {n:?} vs radial {radial:?}");
        }
    }

    #[test]
    fn unit_sphere_normals_near_radial() {
        let mesh = primitives::icosphere(3);
        assert_eq!(mesh.vertex_count(), 642);
        for (p, n) in mesh.vertices().iter().zip(mesh.vertex_normals()) {
            let radial = p.coords.normalize();
            let angle = radial.dot(n).clamp(-1.0, 1.0).acos();
            assert!(angle < 1e-2, "angular error {angle}");
        }
    }

    #[test]
    fn degenerate_triangles_are_dropped() {
        let verts = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
        ];
        let tris = vec![[0, 1, 2], [1, 3, 2], [1, 1, 2]];
        let mesh = TriangleMesh::new(verts, tris).unwrap();
        assert_eq!(mesh.triangle_count(), 2);
        assert_eq!(mesh.vertex_count(), 4);
    }

    #[test]
    fn multi_component_rejected() {
        let mut verts = Vec::new();
        let mut tris = Vec::new();
        for shift in [0.0, 10.0] {
            let base = verts.len() as u32;
            verts.push(Point3::new(shift, 0.0, 0.0));
            verts.push(Point3::new(shift + 1.0, 0.0, 0.0));
            verts.push(Point3::new(shift, 1.0, 0.0));
            tris.push([base, base + 1, base + 2]);
        }
        match TriangleMesh::new(verts, tris) {
            Err(GeomError::MultiComponent { components }) => assert_eq!(components, 2),
            other => panic!("expected MultiComponent, got {other:?}"),
        }
    }

    #[test]
    fn diameter_of_cube_ensemble() {
        let cube = primitives::cube();
        let d = max_shape_diameter(std::slice::from_ref(&cube)).unwrap();
        assert!((d - 3.0f64.sqrt()).abs() < 1e-9);

        let big = cube.transformed(&(nalgebra::Matrix3::identity() * 1.0), &Vector3::zeros());
        let scaled = big
            .displaced(big.vertices().iter().map(|p| Point3::from(p.coords * 2.0)).collect())
            .unwrap();
        let d2 = max_shape_diameter(&[cube, scaled]).unwrap();
        assert!((d2 - 2.0 * 3.0f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn watertight_check_counts_open_edges() {
        let verts = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ];
        let mesh = TriangleMesh::new(verts, vec![[0, 1, 2]]).unwrap();
        assert_eq!(mesh.offending_edge_count(), 3);
        assert_eq!(primitives::icosphere(1).offending_edge_count(), 0);
    }
}
