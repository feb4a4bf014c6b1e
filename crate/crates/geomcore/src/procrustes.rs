//! Generalized Procrustes alignment (rigid, optional uniform scale).

use nalgebra::{Matrix3, Point3, Vector3, SVD};

use crate::error::{GeomError, Result};

/// Rotation + translation mapping shape-local coordinates to world space.
#[derive(Debug, Clone, Copy)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    #[inline]
    pub fn apply(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    #[inline]
    pub fn apply_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// self âˆ˜ other: applies `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    /// Checks det = +1 and orthonormality within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        let det_ok = (self.rotation.determinant() - 1.0).abs() <= tol;
        let ortho = self.rotation.transpose() * self.rotation - Matrix3::identity();
        det_ok && ortho.norm() <= tol * 3.0
    }
}

/// Optimal rigid transform mapping `src` onto `dst` (Kabsch).
pub fn kabsch(src: &[Point3<f64>], dst: &[Vector3<f64>]) -> RigidTransform {
    let n = src.len() as f64;
    let src_mean: Vector3<f64> = src.iter().map(|p| p.coords).sum::<Vector3<f64>>() / n;
    let dst_mean: Vector3<f64> = dst.iter().copied().sum::<Vector3<f64>>() / n;

    let mut h = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst) {
        h += (s.coords - src_mean) * (d - dst_mean).transpose();
    }
    // h maps src deviations to dst deviations: R = V D U^T from H = U S V^T.
    let svd = SVD::new(h, true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let mut r = vt.transpose() * u.transpose();
    if r.determinant() < 0.0 {
        let mut d = Matrix3::identity();
        d[(2, 2)] = -1.0;
        r = vt.transpose() * d * u.transpose();
    }
    RigidTransform {
        rotation: r,
        translation: dst_mean - r * src_mean,
    }
}

/// Iterative generalized Procrustes alignment without scaling.
///
/// Returns one transform per set mapping it onto the converged mean
/// configuration (centered at the origin). Converged when the mean
/// configuration moves less than 1e-8 on average.
pub fn procrustes_align(sets: &[Vec<Point3<f64>>]) -> Result<Vec<RigidTransform>> {
    if sets.len() < 2 {
        return Err(GeomError::TooFewSets { actual: sets.len() });
    }
    let m = sets[0].len();
    if sets.iter().any(|s| s.len() != m) {
        return Err(GeomError::MismatchedSets {
            sizes: sets.iter().map(|s| s.len()).collect(),
        });
    }
    if m < 3 {
        return Err(GeomError::TooFewPoints { required: 3, actual: m });
    }

    // Initial mean: first set, centered.
    let centroid: Vector3<f64> = sets[0].iter().map(|p| p.coords).sum::<Vector3<f64>>() / m as f64;
    let mut mean: Vec<Vector3<f64>> = sets[0].iter().map(|p| p.coords - centroid).collect();

    let mut transforms = vec![RigidTransform::identity(); sets.len()];
    for _ in 0..1000 {
        for (n, set) in sets.iter().enumerate() {
            transforms[n] = kabsch(set, &mean);
        }
        let mut new_mean = vec![Vector3::zeros(); m];
        for (n, set) in sets.iter().enumerate() {
            for (acc, p) in new_mean.iter_mut().zip(set) {
                *acc += transforms[n].apply(p).coords;
            }
        }
        let inv_n = 1.0 / sets.len() as f64;
        let mut mean_centroid = Vector3::zeros();
        for acc in new_mean.iter_mut() {
            *acc *= inv_n;
            mean_centroid += *acc;
        }
        mean_centroid /= m as f64;
        for acc in new_mean.iter_mut() {
            *acc -= mean_centroid;
        }

        let change: f64 = mean
            .iter()
            .zip(&new_mean)
            .map(|(a, b)| (a - b).norm())
            .sum::<f64>()
            / m as f64;
        mean = new_mean;
        if change < 1e-8 {
            break;
        }
    }
    for (n, set) in sets.iter().enumerate() {
        transforms[n] = kabsch(set, &mean);
    }
    Ok(transforms)
}

/// Re-gauges transforms so the first one becomes the identity; relative
/// alignment is preserved.
pub fn gauge_to_first(transforms: &mut [RigidTransform]) {
    if transforms.is_empty() {
        return;
    }
    let inv = transforms[0].inverse();
    for t in transforms.iter_mut() {
        *t = inv.compose(t);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
        let axis = Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        )
        .normalize();
        let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle)
            .into_inner()
    }

    fn random_points(rng: &mut ChaCha8Rng, m: usize) -> Vec<Point3<f64>> {
        (0..m)
            .map(|_| {
                Point3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                )
            })
            .collect()
    }

    #[test]
    fn identical_sets_align_to_identity_gauge() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_points(&mut rng, 10);
        let transforms = procrustes_align(&[a.clone(), a]).unwrap();
        let rel = transforms[1].inverse().compose(&transforms[0]);
        assert!((rel.rotation - Matrix3::identity()).norm() < 1e-9);
        assert!(rel.translation.norm() < 1e-9);
    }

    #[test]
    fn recovers_known_rigid_motion() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_points(&mut rng, 20);
        let r = random_rotation(&mut rng);
        let t = Vector3::new(0.3, -1.2, 0.8);
        let b: Vec<Point3<f64>> = a.iter().map(|p| Point3::from(r * p.coords + t)).collect();

        // b = R a + t, so aligning both to the mean must satisfy
        // T_a = T_b o (R, t): the relative transform T_b^-1 T_a equals (R, t).
        let transforms = procrustes_align(&[a, b]).unwrap();
        let rel = transforms[1].inverse().compose(&transforms[0]);
        assert!((rel.rotation - r).norm() < 1e-8, "rotation error {}", (rel.rotation - r).norm());
        assert!((rel.translation - t).norm() < 1e-8);
        for tr in &transforms {
            assert!(tr.is_valid(1e-9));
        }
    }

    #[test]
    fn beats_random_rigid_guesses() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sets: Vec<Vec<Point3<f64>>> = (0..4)
            .map(|_| {
                let base = random_points(&mut rng, 12);
                let r = random_rotation(&mut rng);
                base.iter()
                    .map(|p| Point3::from(r * p.coords + Vector3::new(0.1, 0.2, -0.1)))
                    .collect()
            })
            .collect();
        let transforms = procrustes_align(&sets).unwrap();

        let residual = |trs: &[RigidTransform]| -> f64 {
            let m = sets[0].len();
            let mut mean = vec![Vector3::zeros(); m];
            for (n, s) in sets.iter().enumerate() {
                for (acc, p) in mean.iter_mut().zip(s) {
                    *acc += trs[n].apply(p).coords;
                }
            }
            for acc in mean.iter_mut() {
                *acc /= sets.len() as f64;
            }
            let mut ss = 0.0;
            for (n, s) in sets.iter().enumerate() {
                for (mu, p) in mean.iter().zip(s) {
                    ss += (trs[n].apply(p).coords - mu).norm_squared();
                }
            }
            ss
        };

        let optimal = residual(&transforms);
        for _ in 0..100 {
            let guess: Vec<RigidTransform> = (0..sets.len())
                .map(|_| RigidTransform {
                    rotation: random_rotation(&mut rng),
                    translation: Vector3::new(
                        rng.gen_range(-0.5..0.5),
                        rng.gen_range(-0.5..0.5),
                        rng.gen_range(-0.5..0.5),
                    ),
                })
                .collect();
            assert!(optimal <= residual(&guess) + 1e-12);
        }
    }

    #[test]
    fn too_few_points_rejected() {
        let a = vec![Point3::origin(), Point3::new(1.0, 0.0, 0.0)];
        match procrustes_align(&[a.clone(), a]) {
            Err(GeomError::TooFewPoints { .. }) => {}
            other => panic!("expected TooFewPoints, got {other:?}"),
        }
    }

    #[test]
    fn alignment_invariant_to_input_rigid_motions() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sets: Vec<Vec<Point3<f64>>> = (0..3).map(|_| random_points(&mut rng, 15)).collect();
        let aligned = |sets: &[Vec<Point3<f64>>]| -> Vec<Vec<Point3<f64>>> {
            let trs = procrustes_align(sets).unwrap();
            sets.iter()
                .zip(&trs)
                .map(|(s, t)| s.iter().map(|p| t.apply(p)).collect())
                .collect()
        };
        let base = aligned(&sets);

        let moved: Vec<Vec<Point3<f64>>> = sets
            .iter()
            .map(|s| {
                let r = random_rotation(&mut rng);
                let t = Vector3::new(
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-2.0..2.0),
                );
                s.iter().map(|p| Point3::from(r * p.coords + t)).collect()
            })
            .collect();
        let moved_aligned = aligned(&moved);

        // Pairwise distances between aligned points are preserved.
        for n in 0..sets.len() {
            for i in 0..sets[0].len() {
                for j in (i + 1)..sets[0].len() {
                    let d0 = (base[n][i] - base[n][j]).norm();
                    let d1 = (moved_aligned[n][i] - moved_aligned[n][j]).norm();
                    assert!((d0 - d1).abs() < 1e-8);
                }
            }
        }
    }
}
