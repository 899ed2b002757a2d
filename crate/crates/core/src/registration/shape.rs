use std::time::Instant;

use rayon::prelude::*;
use sprs::{CsMat, FillInReduction};
use sprs_ldl::{Ldl, LdlNumeric};

use super::boundary::{boundary_loss, boundary_loss_grad, field_for, BoundaryFields};
use super::config::FitConfig;
use super::descent::{backtrack, plateaued};
use super::probe::{probe_active_area, ProbeMode, ProbeResult};
use super::report::{Stage, StageReport, StageStatus};
use crate::error::{Error, Result};
use crate::fields::{field_gradient, BoundaryCylinderField, ScalarField, SemanticFieldSet};
use crate::garment::{BoundaryLoop, SemanticLabel};
use crate::geometry::{graph_laplacian, SparseOperator, TriMesh, Vec3};

/// The shape-stage loss with probe targets held fixed:
///
/// `D_act + eta_pen * P + eta_b * sum(L_b) + eta_lap * L_lap`
///
/// where `D_act` is the mean squared distance of active vertices to their
/// targets, `P = -sum(min(tsdf, 0)) / N` penalizes only penetrating
/// vertices, and `L_lap` is the mean squared Laplacian of the displacement
/// from the reference mesh.
pub struct ShapeTerms<'a> {
    pub reference: &'a [Vec3],
    pub laplacian: &'a SparseOperator,
    pub targets: &'a [Option<Vec3>],
    pub body: Option<&'a dyn ScalarField>,
    pub loops: &'a [(Vec<usize>, &'a BoundaryCylinderField)],
    pub eta_pen: f64,
    pub eta_b: f64,
    pub eta_lap: f64,
    pub eta_ea: f64,
    pub eta_ed: f64,
}

impl ShapeTerms<'_> {
    fn active_count(&self) -> usize {
        self.targets.iter().filter(|t| t.is_some()).count()
    }

    /// Nonnegative; zero iff every active vertex sits on its target.
    pub fn d_act(&self, x: &[Vec3]) -> f64 {
        let a = self.active_count();
        if a == 0 {
            return 0.0;
        }
        let s: f64 = x
            .iter()
            .zip(self.targets)
            .filter_map(|(p, t)| t.map(|t| (p - t).norm_squared()))
            .sum();
        s / a as f64
    }

    fn displacement_laplacian(&self, x: &[Vec3]) -> Vec<Vec3> {
        let d: Vec<Vec3> = x.iter().zip(self.reference).map(|(a, b)| a - b).collect();
        self.laplacian.mul_points(&d)
    }

    fn tsdf_values(&self, x: &[Vec3]) -> Vec<f64> {
        match self.body {
            Some(b) => x.par_iter().map(|p| b.eval(p)).collect(),
            None => Vec::new(),
        }
    }

    fn loop_points(x: &[Vec3], idx: &[usize]) -> Vec<Vec3> {
        idx.iter().map(|&i| x[i]).collect()
    }

    pub fn value(&self, x: &[Vec3]) -> f64 {
        let n = x.len() as f64;
        let mut total = self.d_act(x);
        if self.eta_pen > 0.0 {
            let pen: f64 = self.tsdf_values(x).iter().map(|v| v.min(0.0)).sum();
            total -= self.eta_pen * pen / n;
        }
        if self.eta_b > 0.0 {
            for (idx, f) in self.loops {
                total += self.eta_b * boundary_loss(&Self::loop_points(x, idx), f, self.eta_ea, self.eta_ed);
            }
        }
        if self.eta_lap > 0.0 {
            let lx = self.displacement_laplacian(x);
            total += self.eta_lap * lx.iter().map(|v| v.norm_squared()).sum::<f64>() / n;
        }
        total
    }

    pub fn gradient(&self, x: &[Vec3]) -> Vec<Vec3> {
        let n = x.len() as f64;
        let a = self.active_count();
        let mut g: Vec<Vec3> = x
            .iter()
            .zip(self.targets)
            .map(|(p, t)| t.map_or(Vec3::zeros(), |t| (p - t) * (2.0 / a as f64)))
            .collect();
        if self.eta_pen > 0.0 {
            if let Some(body) = self.body {
                let tsdf = self.tsdf_values(x);
                let h = body.default_gradient_step();
                let pen: Vec<Vec3> = x
                    .par_iter()
                    .zip(&tsdf)
                    .map(|(p, &v)| {
                        if v < 0.0 {
                            -field_gradient(body, p, h) * (self.eta_pen / n)
                        } else {
                            Vec3::zeros()
                        }
                    })
                    .collect();
                for (gi, pi) in g.iter_mut().zip(pen) {
                    *gi += pi;
                }
            }
        }
        if self.eta_b > 0.0 {
            for (idx, f) in self.loops {
                let (_, lg) = boundary_loss_grad(&Self::loop_points(x, idx), f, self.eta_ea, self.eta_ed);
                for (&i, d) in idx.iter().zip(lg) {
                    g[i] += d * self.eta_b;
                }
            }
        }
        if self.eta_lap > 0.0 {
            // The uniform graph Laplacian is symmetric, so L^T L d = L (L d).
            let llx = self.laplacian.mul_points(&self.displacement_laplacian(x));
            for (gi, v) in g.iter_mut().zip(llx) {
                *gi += v * (2.0 * self.eta_lap / n);
            }
        }
        g
    }
}

/// `2 (W + eta_lap/N L^T L + F) + B`: the Hessian of the quadratic terms,
/// with `W` the active-vertex weights and `F` a `1/N` floor on vertices
/// that nothing else anchors. `B` stiffens boundary-loop vertices: the tube
/// field has a kink on its polyline, so an aligned loop vertex moved by the
/// smooth terms would raise `L_b` linearly. Factorized once, refactorized
/// in place each iteration as the active set changes.
struct Preconditioner {
    mat: CsMat<f64>,
    base_diag: Vec<f64>,
    diag_slot: Vec<usize>,
    factor: LdlNumeric<f64, usize>,
}

impl Preconditioner {
    fn new(laplacian: &SparseOperator, eta_lap: f64, anchors: &[f64]) -> Result<Self> {
        let n = laplacian.dim();
        let scale = 2.0 * eta_lap / n as f64;
        let k = laplacian.transpose().compose(laplacian);
        let mat = k.matrix().map(|v| v * scale);
        let mut diag_slot = vec![usize::MAX; n];
        for (i, row) in mat.outer_iterator().enumerate() {
            let start = mat.indptr().outer_inds_sz(i).start;
            for (pos, (j, _)) in row.iter().enumerate() {
                if j == i {
                    diag_slot[i] = start + pos;
                }
            }
        }
        if diag_slot.contains(&usize::MAX) {
            return Err(Error::Solve("Laplacian lacks a diagonal entry".into()));
        }
        let base_diag: Vec<f64> = diag_slot.iter().zip(anchors).map(|(&s, a)| mat.data()[s] + a).collect();
        let factor = Ldl::new()
            .fill_in_reduction(FillInReduction::ReverseCuthillMcKee)
            .numeric(identity_like(&mat).view())
            .map_err(|e| Error::Solve(format!("preconditioner: {e}")))?;
        Ok(Self {
            mat,
            base_diag,
            diag_slot,
            factor,
        })
    }

    fn refactor(&mut self, targets: &[Option<Vec3>]) -> Result<()> {
        let n = targets.len() as f64;
        let active = targets.iter().filter(|t| t.is_some()).count();
        let w = if active > 0 { 2.0 / active as f64 } else { 0.0 };
        let floor = 2.0 / n;
        let data = self.mat.data_mut();
        for (i, t) in targets.iter().enumerate() {
            data[self.diag_slot[i]] = self.base_diag[i] + if t.is_some() { w } else { floor };
        }
        self.factor
            .update(self.mat.view())
            .map_err(|e| Error::Solve(format!("preconditioner: {e}")))
    }

    fn apply_inverse(&self, g: &[Vec3]) -> Vec<Vec3> {
        let mut out = vec![Vec3::zeros(); g.len()];
        for axis in 0..3 {
            let rhs: Vec<f64> = g.iter().map(|v| v[axis]).collect();
            let x: Vec<f64> = self.factor.solve(&rhs);
            for (o, v) in out.iter_mut().zip(x) {
                o[axis] = v;
            }
        }
        out
    }
}

/// A matrix with the sparsity of `m` and a dominant unit diagonal, used to
/// run the symbolic factorization before real values exist.
fn identity_like(m: &CsMat<f64>) -> CsMat<f64> {
    let mut out = m.clone();
    let n = m.rows();
    for i in 0..n {
        let range = out.indptr().outer_inds_sz(i);
        let cols: Vec<usize> = out.indices()[range.clone()].to_vec();
        let data = out.data_mut();
        for (k, c) in range.zip(cols) {
            data[k] = if c == i { 1.0 } else { 0.0 };
        }
    }
    out
}

/// Loop vertices closer to their curve than this fraction of the tube
/// radius sit on the kink of the distance field.
const ON_CURVE: f64 = 1e-3;

/// Replaces the gradient of loop vertices lying on their curve by the
/// minimum-norm subgradient: the kink absorbs a perpendicular pull up to
/// `eta_b / n` per vertex. Vertices it fully absorbs may only slide along
/// the curve; they are returned with the tangent to project their step on.
fn settle_on_curves(
    x: &[Vec3],
    g: &mut [Vec3],
    loops: &[(Vec<usize>, &BoundaryCylinderField)],
    cfg: &FitConfig,
) -> Vec<(usize, Vec3)> {
    let mut held = Vec::new();
    for (idx, field) in loops {
        let c = cfg.eta_b / idx.len() as f64;
        for &i in idx {
            if field.curve_distance(&x[i]) > ON_CURVE * field.radius() {
                continue;
            }
            let Some(t) = field.nearest_tangent(&x[i]) else {
                continue;
            };
            let smooth = g[i] - field.gradient(&x[i]) * c;
            let along = t * t.dot(&smooth);
            let perp = smooth - along;
            let pn = perp.norm();
            if pn <= c {
                g[i] = along;
                held.push((i, t));
            } else {
                g[i] = smooth - perp * (c / pn);
            }
        }
    }
    held
}

/// Inputs of the shape stage besides the mesh itself.
pub struct ShapeInputs<'a> {
    pub target: &'a dyn ScalarField,
    pub semantics: Option<(&'a SemanticFieldSet, SemanticLabel)>,
    pub boundary_fields: &'a BoundaryFields,
    pub body: Option<&'a dyn ScalarField>,
    pub mode: ProbeMode,
}

/// Alternates probing with one preconditioned gradient step on the
/// frozen-target loss. On a non-finite loss the last valid mesh is
/// returned with a failed status.
pub fn shape_fit(
    mesh: &TriMesh,
    loops: &[BoundaryLoop],
    inputs: &ShapeInputs,
    cfg: &FitConfig,
) -> Result<(TriMesh, StageReport)> {
    let start = Instant::now();
    let sc = &cfg.shape;
    let laplacian = graph_laplacian(mesh);
    let reference = mesh.vertices().to_vec();
    let loop_fields: Vec<(Vec<usize>, &BoundaryCylinderField)> = if cfg.eta_b > 0.0 {
        loops
            .iter()
            .map(|l| Ok((l.vertices.clone(), field_for(inputs.boundary_fields, l.kind)?)))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let mut anchors = vec![0.0; reference.len()];
    for (idx, _) in &loop_fields {
        let w = 2.0 * cfg.eta_b / (idx.len().max(1) as f64 * cfg.eps_b);
        for &i in idx {
            anchors[i] += w;
        }
    }
    let floor = cfg.eta_b * loop_fields.iter().map(|(_, f)| f.radius()).sum::<f64>();
    let mut pre = Preconditioner::new(&laplacian, cfg.eta_lap, &anchors)?;
    let mut x = reference.clone();
    let mut losses = Vec::new();
    let mut status = StageStatus::MaxIterations;
    let mut message = None;
    let mut iterations = 0;
    for iteration in 0..sc.max_iterations {
        iterations = iteration + 1;
        let normals = mesh.with_vertices(x.clone()).vertex_normals();
        let probe: ProbeResult = probe_active_area(&x, &normals, inputs.target, inputs.semantics, inputs.mode, cfg);
        let terms = ShapeTerms {
            reference: &reference,
            laplacian: &laplacian,
            targets: &probe.targets,
            body: inputs.body,
            loops: &loop_fields,
            eta_pen: cfg.eta_pen,
            eta_b: cfg.eta_b,
            eta_lap: cfg.eta_lap,
            eta_ea: cfg.eta_ea,
            eta_ed: cfg.eta_ed,
        };
        let loss = terms.value(&x);
        if !loss.is_finite() {
            status = StageStatus::Failed;
            message = Some(format!("non-finite loss at iteration {iteration}"));
            break;
        }
        if iteration == 0 {
            losses.push(loss);
        }
        let mut g = terms.gradient(&x);
        let held = settle_on_curves(&x, &mut g, &loop_fields, cfg);
        pre.refactor(&probe.targets)?;
        let mut dir = pre.apply_inverse(&g);
        for (i, t) in held {
            dir[i] = t * t.dot(&dir[i]);
        }
        let accepted = backtrack(loss, sc.step, |s| {
            let cand: Vec<Vec3> = x.iter().zip(&dir).map(|(p, d)| p - d * s).collect();
            let l = terms.value(&cand);
            (cand, l)
        });
        match accepted {
            Some((cand, l)) => {
                x = cand;
                losses.push(l);
            }
            None => {
                losses.push(loss);
                status = StageStatus::Converged;
                break;
            }
        }
        // The tube term bottoms out at -eps_b per loop; shifting by that
        // makes the plateau test relative to a loss bounded below by zero.
        let shifted: Vec<f64> = losses[1..].iter().map(|l| l + floor).collect();
        if plateaued(&shifted, sc) {
            status = StageStatus::Converged;
            break;
        }
    }
    let report = StageReport {
        stage: Stage::Shape,
        status,
        iterations,
        losses,
        seconds: start.elapsed().as_secs_f64(),
        message,
    };
    Ok((mesh.with_vertices(x), report))
}
