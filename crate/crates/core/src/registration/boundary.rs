use std::time::Instant;

use rayon::prelude::*;

use super::config::FitConfig;
use super::descent::{backtrack, plateaued};
use super::report::{Stage, StageReport, StageStatus};
use crate::error::{Error, Result};
use crate::fields::{BoundaryCylinderField, ScalarField};
use crate::garment::{BoundaryLoop, BoundaryType};
use crate::geometry::{graph_laplacian, BiharmonicSolver, TriMesh, Vec3};

/// Boundary fields keyed by type, as declared by a scene.
pub type BoundaryFields = [(BoundaryType, BoundaryCylinderField)];

pub fn field_for(fields: &BoundaryFields, kind: BoundaryType) -> Result<&BoundaryCylinderField> {
    fields
        .iter()
        .find(|(k, _)| *k == kind)
        .map(|(_, f)| f)
        .ok_or(Error::MissingBoundaryField(kind))
}

/// Edge lengths and unit edge directions of a closed loop.
fn loop_edges(points: &[Vec3]) -> (Vec<f64>, Vec<Vec3>) {
    let n = points.len();
    let mut len = Vec::with_capacity(n);
    let mut dir = Vec::with_capacity(n);
    for k in 0..n {
        let e = points[(k + 1) % n] - points[k];
        let l = e.norm();
        len.push(l);
        dir.push(if l > 0.0 { e / l } else { Vec3::zeros() });
    }
    (len, dir)
}

/// Loop loss: mean field value over the loop vertices plus `eta_ea` times
/// the mean edge length and `eta_ed` times the population variance of the
/// edge lengths.
pub fn boundary_loss(points: &[Vec3], field: &BoundaryCylinderField, eta_ea: f64, eta_ed: f64) -> f64 {
    let n = points.len() as f64;
    let f = points.iter().map(|p| field.eval(p)).sum::<f64>() / n;
    let (len, _) = loop_edges(points);
    let mean = len.iter().sum::<f64>() / n;
    let var = len.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / n;
    f + eta_ea * mean + eta_ed * var
}

/// [`boundary_loss`] and its gradient with respect to every loop vertex.
pub fn boundary_loss_grad(
    points: &[Vec3],
    field: &BoundaryCylinderField,
    eta_ea: f64,
    eta_ed: f64,
) -> (f64, Vec<Vec3>) {
    let n = points.len();
    let nf = n as f64;
    let mut grad: Vec<Vec3> = points.iter().map(|p| field.gradient(p) / nf).collect();
    let (len, dir) = loop_edges(points);
    let mean = len.iter().sum::<f64>() / nf;
    let var = len.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / nf;
    for k in 0..n {
        // d(loss)/d(len_k), then len_k depends on vertices k and k+1.
        let dl = eta_ea / nf + eta_ed * 2.0 * (len[k] - mean) / nf;
        grad[k] -= dir[k] * dl;
        grad[(k + 1) % n] += dir[k] * dl;
    }
    let f = points.iter().map(|p| field.eval(p)).sum::<f64>() / nf;
    (f + eta_ea * mean + eta_ed * var, grad)
}

pub struct LoopFit {
    pub points: Vec<Vec3>,
    pub losses: Vec<f64>,
    pub status: StageStatus,
}

/// Gradient descent on one loop's vertex positions. `loop_kind` and
/// `field_kind` must agree.
pub fn fit_loop(
    points: &[Vec3],
    loop_kind: BoundaryType,
    field_kind: BoundaryType,
    field: &BoundaryCylinderField,
    cfg: &FitConfig,
) -> Result<LoopFit> {
    if loop_kind != field_kind {
        return Err(Error::BoundaryTypeMismatch {
            loop_type: loop_kind,
            field_type: field_kind,
        });
    }
    let sc = &cfg.boundary;
    let n = points.len() as f64;
    let mut x = points.to_vec();
    let mut losses = vec![boundary_loss(&x, field, cfg.eta_ea, cfg.eta_ed)];
    let mut status = StageStatus::MaxIterations;
    for iteration in 0..sc.max_iterations {
        let (loss, g) = boundary_loss_grad(&x, field, cfg.eta_ea, cfg.eta_ed);
        if !loss.is_finite() {
            return Err(Error::Diverged {
                stage: "boundary",
                iteration,
            });
        }
        // The field term is a mean, so scale by the loop size: a unit step
        // moves each vertex by roughly `step` along its field gradient.
        let accepted = backtrack(loss, sc.step, |s| {
            let cand: Vec<Vec3> = x.iter().zip(&g).map(|(p, d)| p - d * (s * n)).collect();
            let l = boundary_loss(&cand, field, cfg.eta_ea, cfg.eta_ed);
            (cand, l)
        });
        match accepted {
            Some((cand, l)) => {
                x = cand;
                losses.push(l);
            }
            None => {
                status = StageStatus::Converged;
                break;
            }
        }
        if plateaued(&losses, sc) {
            status = StageStatus::Converged;
            break;
        }
    }
    Ok(LoopFit {
        points: x,
        losses,
        status,
    })
}

/// Fits every loop of `mesh` to the field of its type, independently.
/// Returns the optimized positions per loop.
pub fn fit_boundaries(
    mesh: &TriMesh,
    loops: &[BoundaryLoop],
    fields: &BoundaryFields,
    cfg: &FitConfig,
) -> Result<(Vec<Vec<Vec3>>, StageReport)> {
    let start = Instant::now();
    let paired: Vec<(&BoundaryLoop, &BoundaryCylinderField)> =
        loops.iter().map(|l| Ok((l, field_for(fields, l.kind)?))).collect::<Result<_>>()?;
    let fits: Vec<LoopFit> = paired
        .par_iter()
        .map(|(l, f)| fit_loop(&l.positions(mesh.vertices()), l.kind, l.kind, f, cfg))
        .collect::<Result<_>>()?;
    let status = if fits.iter().all(|f| f.status == StageStatus::Converged) {
        StageStatus::Converged
    } else {
        StageStatus::MaxIterations
    };
    let report = StageReport {
        stage: Stage::Boundary,
        status,
        iterations: fits.iter().map(|f| f.losses.len() - 1).max().unwrap_or(0),
        losses: fits.iter().flat_map(|f| f.losses.iter().copied()).collect(),
        seconds: start.elapsed().as_secs_f64(),
        message: None,
    };
    Ok((fits.into_iter().map(|f| f.points).collect(), report))
}

/// Pins every loop vertex at its optimized position and carries the rest
/// of the mesh along bi-harmonically.
pub fn propagate_boundary_deformation(mesh: &TriMesh, loops: &[BoundaryLoop], positions: &[Vec<Vec3>]) -> Result<TriMesh> {
    assert_eq!(loops.len(), positions.len());
    let mut pinned: Vec<(usize, Vec3)> = loops
        .iter()
        .zip(positions)
        .flat_map(|(l, p)| l.vertices.iter().copied().zip(p.iter().copied()))
        .collect();
    pinned.sort_by_key(|x| x.0);
    let idx: Vec<usize> = pinned.iter().map(|x| x.0).collect();
    let solver = BiharmonicSolver::new(&graph_laplacian(mesh), &idx)?;
    let targets: Vec<Vec3> = pinned.iter().map(|x| x.1).collect();
    Ok(mesh.with_vertices(solver.solve(&targets, mesh.vertices())?))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::TAU;

    use super::*;
    use crate::geometry::primitives::open_cylinder;
    use crate::geometry::Polyline3;

    fn circle(r: f64, y: f64, n: usize) -> Vec<Vec3> {
        (0..n)
            .map(|i| {
                let t = TAU * i as f64 / n as f64;
                Vec3::new(r * t.cos(), y, r * t.sin())
            })
            .collect()
    }

    fn field(points: Vec<Vec3>) -> BoundaryCylinderField {
        BoundaryCylinderField::new(vec![Polyline3::new(points, true).unwrap()], 1e-3).unwrap()
    }

    #[test]
    fn loss_on_target_curve() {
        let pts = circle(0.5, 0.0, 32);
        let f = field(pts.clone());
        let e = (pts[1] - pts[0]).norm();
        let l = boundary_loss(&pts, &f, 0.025, 2.5);
        assert!((l - (-1e-3 + 0.025 * e)).abs() < 1e-12, "{l}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let f = field(circle(0.4, 0.05, 64));
        let pts: Vec<Vec3> = circle(0.5, 0.0, 20)
            .into_iter()
            .enumerate()
            .map(|(i, p)| p + Vec3::new(0.01 * (i as f64).sin(), 0.02 * (i as f64 * 0.7).cos(), 0.0))
            .collect();
        let (_, g) = boundary_loss_grad(&pts, &f, 0.025, 2.5);
        let h = 1e-6;
        for i in 0..pts.len() {
            for a in 0..3 {
                let mut p = pts.clone();
                let mut m = pts.clone();
                p[i][a] += h;
                m[i][a] -= h;
                let fd = (boundary_loss(&p, &f, 0.025, 2.5) - boundary_loss(&m, &f, 0.025, 2.5)) / (2.0 * h);
                assert!((fd - g[i][a]).abs() <= 1e-4 * g[i].norm().max(1e-3), "{fd} vs {}", g[i][a]);
            }
        }
    }

    #[test]
    fn concentric_circle_fit() {
        let target = circle(0.4, 0.0, 128);
        let f = field(target.clone());
        let fit = fit_loop(&circle(0.5, 0.0, 32), BoundaryType::Hemline, BoundaryType::Hemline, &f, &FitConfig::default())
            .unwrap();
        let mean = fit.points.iter().map(|p| f.curve_distance(p)).sum::<f64>() / 32.0;
        assert!(mean < 5e-3, "mean distance {mean}");
        assert!(fit.losses.windows(2).all(|w| w[1] <= w[0]));
        assert!(fit.losses.last().unwrap() <= &fit.losses[0]);
    }

    #[test]
    fn single_vertex_onto_line() {
        let f = BoundaryCylinderField::new(
            vec![Polyline3::new(vec![Vec3::new(-5.0, 0.0, 0.0), Vec3::new(5.0, 0.0, 0.0)], false).unwrap()],
            1e-3,
        )
        .unwrap();
        let mut cfg = FitConfig::default();
        cfg.eta_ea = 0.0;
        cfg.eta_ed = 0.0;
        // A one-vertex "loop" has a zero-length closing edge, harmless here.
        let start = [Vec3::new(0.3, 0.2, -0.1)];
        let mut x = start.to_vec();
        for _ in 0..200 {
            let (loss, g) = boundary_loss_grad(&x, &f, 0.0, 0.0);
            if let Some((c, _)) = backtrack(loss, 0.01, |s| {
                let c = vec![x[0] - g[0] * s];
                let l = boundary_loss(&c, &f, 0.0, 0.0);
                (c, l)
            }) {
                x = c;
            }
        }
        assert!((f.eval(&x[0]) + 1e-3).abs() < 1e-6);
        let _ = cfg;
    }

    #[test]
    fn mismatched_types_are_rejected() {
        let f = field(circle(0.4, 0.0, 16));
        let err = fit_loop(&circle(0.4, 0.0, 8), BoundaryType::Neckline, BoundaryType::Hemline, &f, &FitConfig::default());
        assert!(matches!(err, Err(Error::BoundaryTypeMismatch { .. })));
    }

    fn tube() -> (TriMesh, Vec<BoundaryLoop>) {
        let (m, bottom, top) = open_cylinder(0.1, 0.0, 0.6, 24, 30);
        let loops = vec![
            BoundaryLoop {
                kind: BoundaryType::SleeveCuff,
                vertices: bottom,
            },
            BoundaryLoop {
                kind: BoundaryType::Armhole,
                vertices: top,
            },
        ];
        (m, loops)
    }

    #[test]
    fn identity_constraints_leave_mesh_unchanged() {
        let (m, loops) = tube();
        let pos: Vec<Vec<Vec3>> = loops.iter().map(|l| l.positions(m.vertices())).collect();
        let out = propagate_boundary_deformation(&m, &loops, &pos).unwrap();
        for (a, b) in out.vertices().iter().zip(m.vertices()) {
            assert!((a - b).norm() < 1e-8);
        }
    }

    #[test]
    fn translated_loops_translate_mesh() {
        let (m, loops) = tube();
        let t = Vec3::new(0.2, -0.1, 0.3);
        let pos: Vec<Vec<Vec3>> = loops.iter().map(|l| l.positions(m.vertices()).iter().map(|p| p + t).collect()).collect();
        let out = propagate_boundary_deformation(&m, &loops, &pos).unwrap();
        for (a, b) in out.vertices().iter().zip(m.vertices()) {
            assert!((a - (b + t)).norm() < 1e-8);
        }
    }

    #[test]
    fn stretched_cuff_decays_along_the_tube() {
        let (m, loops) = tube();
        let v = m.vertices();
        let mut pos: Vec<Vec<Vec3>> = loops.iter().map(|l| l.positions(v)).collect();
        for p in &mut pos[0] {
            p.x *= 1.2;
            p.z *= 1.2;
        }
        let out = propagate_boundary_deformation(&m, &loops, &pos).unwrap();
        // Ring means of displacement magnitude, bottom (cuff) to top.
        let mut rings: Vec<(f64, f64, usize)> = Vec::new();
        for (a, b) in v.iter().zip(out.vertices()) {
            let d = (b - a).norm();
            match rings.iter_mut().find(|r| (r.0 - a.y).abs() < 1e-9) {
                Some(r) => {
                    r.1 += d;
                    r.2 += 1;
                }
                None => rings.push((a.y, d, 1)),
            }
        }
        rings.sort_by(|a, b| a.0.total_cmp(&b.0));
        let means: Vec<f64> = rings.iter().map(|r| r.1 / r.2 as f64).collect();
        assert!(means.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{means:?}");
        assert!(means[0] > 0.019 && means[means.len() - 1] < 1e-12);
    }
}
