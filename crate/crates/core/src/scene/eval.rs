use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::BoundaryCylinderField;
use crate::garment::{BoundaryLoop, BoundaryType};
use crate::geometry::{PointIndex, TriMesh, Vec3};

pub const MIN_SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Symmetric squared Chamfer distance between surface samples.
    pub chamfer: f64,
    /// Largest nearest-neighbour distance from output samples to ground truth.
    pub max_to_gt: f64,
    /// Largest nearest-neighbour distance from ground-truth samples to output.
    pub max_from_gt: f64,
    /// Mean distance from output boundary-loop vertices to the ground-truth
    /// curves of the same type, when loops were given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<f64>,
}

/// `n` points distributed uniformly over the surface area.
pub fn sample_surface(mesh: &TriMesh, n: usize, seed: u64) -> Result<Vec<Vec3>> {
    if mesh.face_count() == 0 {
        return Err(Error::EmptyInput("mesh to sample"));
    }
    let mut cdf = Vec::with_capacity(mesh.face_count());
    let mut total = 0.0;
    for f in 0..mesh.face_count() {
        total += mesh.face_area(f);
        cdf.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::InvalidMesh("mesh has zero area".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let r = rng.gen::<f64>() * total;
            let f = cdf.partition_point(|&c| c < r).min(cdf.len() - 1);
            let (mut u, mut v) = (rng.gen::<f64>(), rng.gen::<f64>());
            if u + v > 1.0 {
                u = 1.0 - u;
                v = 1.0 - v;
            }
            let [a, b, c] = mesh.triangle(f);
            a + (b - a) * u + (c - a) * v
        })
        .collect())
}

fn nearest_sq(from: &[Vec3], to: &PointIndex) -> Vec<f64> {
    from.par_iter().map(|p| to.nearest(p).expect("non-empty").1).collect()
}

/// Mean distance of loop vertices to the matching ground-truth curves.
/// Loops without a matching field are skipped; `None` if none matched.
pub fn boundary_distance(
    mesh: &TriMesh,
    loops: &[BoundaryLoop],
    gt: &[(BoundaryType, BoundaryCylinderField)],
) -> Option<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for l in loops {
        if let Some((_, f)) = gt.iter().find(|(t, _)| *t == l.kind) {
            for &i in &l.vertices {
                sum += f.curve_distance(&mesh.vertices()[i]);
                count += 1;
            }
        }
    }
    (count > 0).then(|| sum / count as f64)
}

/// Compares `output` against `gt` using `n_samples` area-weighted samples
/// on each; the same seed gives the same samples.
pub fn evaluate(
    output: &TriMesh,
    gt: &TriMesh,
    n_samples: usize,
    seed: u64,
    loops: Option<(&[BoundaryLoop], &[(BoundaryType, BoundaryCylinderField)])>,
) -> Result<Metrics> {
    if n_samples < MIN_SAMPLES {
        return Err(Error::InvalidConfig(format!(
            "need at least {MIN_SAMPLES} samples, got {n_samples}"
        )));
    }
    let a = sample_surface(output, n_samples, seed)?;
    let b = sample_surface(gt, n_samples, seed)?;
    let (ia, ib) = (PointIndex::new(&a), PointIndex::new(&b));
    let ab = nearest_sq(&a, &ib);
    let ba = nearest_sq(&b, &ia);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let max = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max).sqrt();
    Ok(Metrics {
        chamfer: 0.5 * (mean(&ab) + mean(&ba)),
        max_to_gt: max(&ab),
        max_from_gt: max(&ba),
        boundary: loops.and_then(|(l, f)| boundary_distance(output, l, f)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives::icosphere;
    use crate::geometry::Polyline3;

    #[test]
    fn identical_meshes_score_zero() {
        let m = icosphere(1.0, 3);
        let r = evaluate(&m, &m, 2000, 5, None).unwrap();
        assert!(r.chamfer < 1e-8);
        assert_eq!(r.max_to_gt, 0.0);
    }

    #[test]
    fn scaled_sphere_gap() {
        // Dense samples on spheres of radius 1 and 1.01: every nearest
        // distance is close to the 0.01 radial gap.
        let a = icosphere(1.0, 5);
        let b = a.with_vertices(a.vertices().iter().map(|v| v * 1.01).collect());
        let r = evaluate(&a, &b, 20_000, 1, None).unwrap();
        assert!((r.chamfer - 1e-4).abs() < 2e-5, "{}", r.chamfer);
    }

    #[test]
    fn deterministic_under_seed() {
        let a = icosphere(1.0, 2);
        let b = a.with_vertices(a.vertices().iter().map(|v| v * 1.1).collect());
        assert_eq!(evaluate(&a, &b, 1500, 9, None).unwrap(), evaluate(&a, &b, 1500, 9, None).unwrap());
        assert_ne!(
            evaluate(&a, &b, 1500, 9, None).unwrap().chamfer,
            evaluate(&a, &b, 1500, 10, None).unwrap().chamfer
        );
    }

    #[test]
    fn rejects_few_samples_and_empty() {
        let a = icosphere(1.0, 1);
        assert!(evaluate(&a, &a, 999, 0, None).is_err());
        assert!(evaluate(&TriMesh::empty(), &a, 1000, 0, None).is_err());
    }

    #[test]
    fn samples_are_area_weighted() {
        // Two triangles, one with 3x the area of the other.
        let m = TriMesh::new(
            vec![
                Vec3::zeros(),
                Vec3::x(),
                Vec3::y(),
                Vec3::new(5.0, 0.0, 0.0),
                Vec3::new(8.0, 0.0, 0.0),
                Vec3::new(5.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [3, 4, 5]],
        )
        .unwrap();
        let s = sample_surface(&m, 40_000, 2).unwrap();
        let big = s.iter().filter(|p| p.x >= 5.0).count() as f64 / s.len() as f64;
        assert!((big - 0.75).abs() < 0.01, "{big}");
    }

    #[test]
    fn boundary_distance_of_offset_loop() {
        let m = TriMesh::new(vec![Vec3::zeros(), Vec3::x(), Vec3::y()], vec![[0, 1, 2]]).unwrap();
        let curve = Polyline3::new(
            vec![Vec3::new(0.0, 0.0, 0.1), Vec3::new(1.0, 0.0, 0.1), Vec3::new(0.0, 1.0, 0.1)],
            true,
        )
        .unwrap();
        let f = vec![(BoundaryType::Hemline, BoundaryCylinderField::new(vec![curve], 1e-3).unwrap())];
        let loops = [BoundaryLoop {
            kind: BoundaryType::Hemline,
            vertices: vec![0, 1, 2],
        }];
        assert!((boundary_distance(&m, &loops, &f).unwrap() - 0.1).abs() < 1e-12);
        let other = [BoundaryLoop {
            kind: BoundaryType::Neckline,
            vertices: vec![0, 1, 2],
        }];
        assert_eq!(boundary_distance(&m, &other, &f), None);
    }
}
