//! Axis-aligned bounding-box tree over mesh triangles.
//!
//! Supports nearest-triangle queries (with closest point and barycentric
//! coordinates) and parity ray casts for inside/outside classification.

use nalgebra::{Point3, Vector3};

use crate::mesh::TriangleMesh;

#[derive(Debug, Clone, Copy)]
struct Node {
    lo: [f64; 3],
    hi: [f64; 3],
    /// Leaf: start/count into `order`. Interior: left child is `start`,
    /// right child is `start + 1` in `nodes`, count == 0.
    start: u32,
    count: u32,
}

#[derive(Debug, Clone)]
pub struct TriBvh {
    nodes: Vec<Node>,
    order: Vec<u32>,
    tris: Vec<[Point3<f64>; 3]>,
}

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone, Copy)]
pub struct SurfaceHit {
    pub triangle: usize,
    pub point: Point3<f64>,
    pub barycentric: [f64; 3],
    pub distance: f64,
}

impl TriBvh {
    pub fn build(mesh: &TriangleMesh) -> Self {
        let tris: Vec<[Point3<f64>; 3]> = (0..mesh.triangle_count())
            .map(|t| mesh.triangle_vertices(t))
            .collect();
        let centroids: Vec<Point3<f64>> = tris
            .iter()
            .map(|t| Point3::from((t[0].coords + t[1].coords + t[2].coords) / 3.0))
            .collect();
        let mut order: Vec<u32> = (0..tris.len() as u32).collect();
        let mut nodes = Vec::with_capacity(2 * tris.len() / LEAF_SIZE + 2);
        nodes.push(Node {
            lo: [0.0; 3],
            hi: [0.0; 3],
            start: 0,
            count: 0,
        });
        let mut bvh = Self { nodes, order: Vec::new(), tris };
        bvh.build_node(0, &mut order, 0, centroids.len(), &centroids);
        bvh.order = order;
        bvh
    }

    fn build_node(
        &mut self,
        node: usize,
        order: &mut [u32],
        start: usize,
        end: usize,
        centroids: &[Point3<f64>],
    ) {
        let (mut lo, mut hi) = ([f64::INFINITY; 3], [f64::NEG_INFINITY; 3]);
        for &t in &order[start..end] {
            for v in &self.tris[t as usize] {
                for k in 0..3 {
                    lo[k] = lo[k].min(v[k]);
                    hi[k] = hi[k].max(v[k]);
                }
            }
        }
        self.nodes[node].lo = lo;
        self.nodes[node].hi = hi;

        let len = end - start;
        if len <= LEAF_SIZE {
            self.nodes[node].start = start as u32;
            self.nodes[node].count = len as u32;
            return;
        }

        let mut axis = 0;
        for k in 1..3 {
            if hi[k] - lo[k] > hi[axis] - lo[axis] {
                axis = k;
            }
        }
        let mid = start + len / 2;
        order[start..end].select_nth_unstable_by(len / 2, |&a, &b| {
            centroids[a as usize][axis]
                .partial_cmp(&centroids[b as usize][axis])
                .unwrap()
        });

        let left = self.nodes.len();
        self.nodes.push(Node { lo: [0.0; 3], hi: [0.0; 3], start: 0, count: 0 });
        self.nodes.push(Node { lo: [0.0; 3], hi: [0.0; 3], start: 0, count: 0 });
        self.nodes[node].start = left as u32;
        self.nodes[node].count = 0;
        self.build_node(left, order, start, mid, centroids);
        self.build_node(left + 1, order, mid, end, centroids);
    }

    fn box_sq_distance(node: &Node, p: &Point3<f64>) -> f64 {
        let mut d2 = 0.0;
        for k in 0..3 {
            let v = if p[k] < node.lo[k] {
                node.lo[k] - p[k]
            } else if p[k] > node.hi[k] {
                p[k] - node.hi[k]
            } else {
                0.0
            };
            d2 += v * v;
        }
        d2
    }

    /// Nearest point on the surface to `p`.
    pub fn closest(&self, p: &Point3<f64>) -> SurfaceHit {
        let mut best = SurfaceHit {
            triangle: usize::MAX,
            point: *p,
            barycentric: [0.0; 3],
            distance: f64::INFINITY,
        };
        self.closest_rec(0, p, &mut best);
        best
    }

    fn closest_rec(&self, node: usize, p: &Point3<f64>, best: &mut SurfaceHit) {
        let n = &self.nodes[node];
        if Self::box_sq_distance(n, p) >= best.distance * best.distance {
            return;
        }
        if n.count > 0 {
            for &t in &self.order[n.start as usize..(n.start + n.count) as usize] {
                let tri = &self.tris[t as usize];
                let (q, bary) = closest_point_on_triangle(p, &tri[0], &tri[1], &tri[2]);
                let d = (q - p).norm();
                if d < best.distance {
                    *best = SurfaceHit {
                        triangle: t as usize,
                        point: q,
                        barycentric: bary,
                        distance: d,
                    };
                }
            }
            return;
        }
        let left = n.start as usize;
        let dl = Self::box_sq_distance(&self.nodes[left], p);
        let dr = Self::box_sq_distance(&self.nodes[left + 1], p);
        if dl <= dr {
            self.closest_rec(left, p, best);
            self.closest_rec(left + 1, p, best);
        } else {
            self.closest_rec(left + 1, p, best);
            self.closest_rec(left, p, best);
        }
    }

    /// Counts ray/surface crossings from `origin` along `dir`.
    ///
    /// Returns None when any intersection is numerically suspect (grazing a
    /// triangle edge or near-parallel), in which case the caller should retry
    /// with a different direction.
    pub fn ray_parity(&self, origin: &Point3<f64>, dir: &Vector3<f64>) -> Option<usize> {
        let mut count = 0usize;
        let inv = [1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z];
        let mut stack = vec![0usize];
        while let Some(node) = stack.pop() {
            let n = &self.nodes[node];
            if !ray_box_hits(origin, &inv, &n.lo, &n.hi) {
                continue;
            }
            if n.count > 0 {
                for &t in &self.order[n.start as usize..(n.start + n.count) as usize] {
                    let tri = &self.tris[t as usize];
                    match ray_triangle(origin, dir, &tri[0], &tri[1], &tri[2]) {
                        RayHit::Clean(t_hit) => {
                            if t_hit > 0.0 {
                                count += 1;
                            }
                        }
                        RayHit::Miss => {}
                        RayHit::Dirty => return None,
                    }
                }
            } else {
                stack.push(n.start as usize);
                stack.push(n.start as usize + 1);
            }
        }
        Some(count)
    }
}

fn ray_box_hits(origin: &Point3<f64>, inv_dir: &[f64; 3], lo: &[f64; 3], hi: &[f64; 3]) -> bool {
    let mut tmin = 0.0f64;
    let mut tmax = f64::INFINITY;
    for k in 0..3 {
        let t1 = (lo[k] - origin[k]) * inv_dir[k];
        let t2 = (hi[k] - origin[k]) * inv_dir[k];
        let (t1, t2) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        tmin = tmin.max(t1);
        tmax = tmax.min(t2);
        if tmin > tmax {
            return false;
        }
    }
    true
}

enum RayHit {
    Clean(f64),
    Miss,
    Dirty,
}

/// Moller-Trumbore with explicit edge-grazing detection.
fn ray_triangle(
    origin: &Point3<f64>,
    dir: &Vector3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> RayHit {
    const EDGE_EPS: f64 = 1e-9;
    let e1 = b - a;
    let e2 = c - a;
    let pvec = dir.cross(&e2);
    let det = e1.dot(&pvec);
    let scale = e1.norm() * e2.norm();
    if det.abs() < 1e-12 * scale {
        // Near-parallel: either a miss or a graze; treat any bbox overlap as
        // suspect only if the ray passes close to the plane.
        return RayHit::Miss;
    }
    let inv_det = 1.0 / det;
    let tvec = origin - a;
    let u = tvec.dot(&pvec) * inv_det;
    if u < -EDGE_EPS || u > 1.0 + EDGE_EPS {
        return RayHit::Miss;
    }
    let qvec = tvec.cross(&e1);
    let v = dir.dot(&qvec) * inv_det;
    if v < -EDGE_EPS || u + v > 1.0 + EDGE_EPS {
        return RayHit::Miss;
    }
    let w = 1.0 - u - v;
    if u < EDGE_EPS || v < EDGE_EPS || w < EDGE_EPS {
        return RayHit::Dirty;
    }
    let t = e2.dot(&qvec) * inv_det;
    if t <= 0.0 {
        RayHit::Miss
    } else {
        RayHit::Clean(t)
    }
}

/// Closest point on triangle abc to p, with barycentric coordinates (for a, b, c).
pub fn closest_point_on_triangle(
    p: &Point3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> (Point3<f64>, [f64; 3]) {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;

    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (*a, [1.0, 0.0, 0.0]);
    }

    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (*b, [0.0, 1.0, 0.0]);
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + ab * v, [1.0 - v, v, 0.0]);
    }

    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (*c, [0.0, 0.0, 1.0]);
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + ac * w, [1.0 - w, 0.0, w]);
    }

    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, [0.0, 1.0 - w, w]);
    }

    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, [1.0 - v - w, v, w])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives;
    use rand::{Rng, SeedableRng};

    #[test]
    fn closest_point_matches_brute_force() {
        let mesh = primitives::icosphere(2);
        let bvh = TriBvh::build(&mesh);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let p = Point3::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            let hit = bvh.closest(&p);
            let mut brute = f64::INFINITY;
            for t in 0..mesh.triangle_count() {
                let [a, b, c] = mesh.triangle_vertices(t);
                let (q, _) = closest_point_on_triangle(&p, &a, &b, &c);
                brute = brute.min((q - p).norm());
            }
            assert!((hit.distance - brute).abs() < 1e-12);
        }
    }

    #[test]
    fn parity_classifies_sphere_interior() {
        let mesh = primitives::icosphere(2);
        let bvh = TriBvh::build(&mesh);
        let dir = Vector3::new(0.2314, 0.7431, 0.6281).normalize();
        let inside = bvh.ray_parity(&Point3::new(0.1, 0.05, -0.02), &dir).unwrap();
        assert_eq!(inside % 2, 1);
        let outside = bvh.ray_parity(&Point3::new(1.8, 0.3, 0.1), &dir).unwrap();
        assert_eq!(outside % 2, 0);
    }
}
