use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::FitConfig;
use super::descent::{backtrack, plateaued};
use super::report::{BodyFit, Stage, StageReport, StageStatus};
use crate::error::{Error, Result};
use crate::garment::{Pose, Shape, SkinnedBody, SparseWeights, Vec2, WeakPerspectiveCamera, JOINT_COUNT};
use crate::geometry::{PointIndex, Vec3};

/// A 2D joint detection in normalized image units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Joint2d {
    pub point: Vec2,
    pub visible: bool,
}

const POSE_DIMS: usize = 3 * JOINT_COUNT;
const TRANSLATION: usize = POSE_DIMS;
const SHAPE: usize = TRANSLATION + 3;
const CAMERA: usize = SHAPE + 7;
const DIMS: usize = CAMERA + 3;
/// Central-difference step for the parameter Jacobian.
const JACOBIAN_STEP: f64 = 1e-6;
/// Levenberg damping relative to the mean Gauss-Newton diagonal.
const DAMPING: f64 = 1e-4;

fn pack(pose: &Pose, shape: &Shape, camera: &WeakPerspectiveCamera) -> DVector<f64> {
    let mut p = DVector::zeros(DIMS);
    for (j, r) in pose.rotations.iter().enumerate() {
        p.fixed_rows_mut::<3>(3 * j).copy_from(r);
    }
    p.fixed_rows_mut::<3>(TRANSLATION).copy_from(&pose.translation);
    let s = [
        shape.scale.x,
        shape.scale.y,
        shape.scale.z,
        shape.upper_arm,
        shape.forearm,
        shape.thigh,
        shape.shin,
    ];
    for (k, v) in s.into_iter().enumerate() {
        p[SHAPE + k] = v;
    }
    p[CAMERA] = camera.s;
    p[CAMERA + 1] = camera.t[0];
    p[CAMERA + 2] = camera.t[1];
    p
}

fn unpack(p: &DVector<f64>) -> (Pose, Shape, WeakPerspectiveCamera) {
    let rotations = (0..JOINT_COUNT).map(|j| p.fixed_rows::<3>(3 * j).into_owned()).collect();
    let pose = Pose {
        rotations,
        translation: p.fixed_rows::<3>(TRANSLATION).into_owned(),
    };
    let shape = Shape {
        scale: Vec3::new(p[SHAPE], p[SHAPE + 1], p[SHAPE + 2]),
        upper_arm: p[SHAPE + 3],
        forearm: p[SHAPE + 4],
        thigh: p[SHAPE + 5],
        shin: p[SHAPE + 6],
    };
    let camera = WeakPerspectiveCamera {
        s: p[CAMERA],
        t: [p[CAMERA + 1], p[CAMERA + 2]],
    };
    (pose, shape, camera)
}

/// Keeps shape factors in their valid range and the camera scale positive.
fn project_feasible(p: &mut DVector<f64>) {
    for k in SHAPE..CAMERA {
        p[k] = p[k].clamp(Shape::MIN, Shape::MAX);
    }
    p[CAMERA] = p[CAMERA].max(1e-3);
}

/// Every `len / count`-th index, so large sets are subsampled evenly and
/// deterministically.
fn stride_subsample(len: usize, count: usize) -> Vec<usize> {
    if count == 0 || len <= count {
        return (0..len).collect();
    }
    (0..count).map(|k| k * len / count).collect()
}

struct Problem<'a> {
    body: &'a SkinnedBody,
    visible: Vec<(usize, Vec2)>,
    samples: Vec<Vec3>,
    weights: SparseWeights,
    lres: Vec<Vec3>,
    lres_index: PointIndex,
    eta_reg: f64,
    eta_beta: f64,
    eta_shape: f64,
}

/// Model outputs at one parameter vector.
struct Eval {
    joints: Vec<Vec2>,
    verts: Vec<Vec3>,
}

impl Problem<'_> {
    fn eval(&self, p: &DVector<f64>) -> Eval {
        let (pose, shape, camera) = unpack(p);
        let rig = self.body.rig(&pose, &shape);
        let all = rig.joints();
        Eval {
            joints: self.visible.iter().map(|&(j, _)| camera.project(&all[j])).collect(),
            verts: if self.eta_shape > 0.0 {
                rig.apply(&self.samples, &self.weights)
            } else {
                Vec::new()
            },
        }
    }

    fn joint_mse(&self, e: &Eval) -> f64 {
        let s: f64 = e.joints.iter().zip(&self.visible).map(|(a, (_, b))| (a - b).norm_squared()).sum();
        s / self.visible.len() as f64
    }

    /// `MSE(J', J_gt) + eta_reg Reg(theta) + eta_beta |beta - 1|^2
    /// + eta_shape CD(V_lres, V_pred)`.
    fn loss(&self, p: &DVector<f64>) -> f64 {
        let e = self.eval(p);
        let reg: f64 = (3..POSE_DIMS).map(|k| p[k] * p[k]).sum();
        let prior: f64 = (SHAPE..CAMERA).map(|k| (p[k] - 1.0).powi(2)).sum();
        let mut l = self.joint_mse(&e) + self.eta_reg * reg + self.eta_beta * prior;
        if self.eta_shape > 0.0 {
            let pred = PointIndex::new(&e.verts);
            let a: f64 = self.lres.iter().map(|q| pred.nearest(q).expect("non-empty").1).sum::<f64>();
            let b: f64 = e.verts.iter().map(|q| self.lres_index.nearest(q).expect("non-empty").1).sum::<f64>();
            l += self.eta_shape * 0.5 * (a / self.lres.len() as f64 + b / e.verts.len() as f64);
        }
        l
    }

    /// Residual vector `r` (with `loss = |r|^2`) and its Jacobian, with
    /// nearest-neighbour assignments frozen at `p`.
    fn linearize(&self, p: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let base = self.eval(p);
        let nj = self.visible.len();
        let nv = base.verts.len();
        let nl = self.lres.len();
        let rows = 2 * nj + (POSE_DIMS - 3) + (CAMERA - SHAPE) + if self.eta_shape > 0.0 { 3 * (nv + nl) } else { 0 };
        let mut r = DVector::zeros(rows);
        let wj = (1.0 / nj as f64).sqrt();
        for (k, (q, (_, g))) in base.joints.iter().zip(&self.visible).enumerate() {
            r[2 * k] = wj * (q.x - g.x);
            r[2 * k + 1] = wj * (q.y - g.y);
        }
        let wr = self.eta_reg.sqrt();
        for k in 3..POSE_DIMS {
            r[2 * nj + k - 3] = wr * p[k];
        }
        let wb = self.eta_beta.sqrt();
        let prior_row = |k: usize| 2 * nj + POSE_DIMS - 3 + k - SHAPE;
        for k in SHAPE..CAMERA {
            r[prior_row(k)] = wb * (p[k] - 1.0);
        }
        let off = 2 * nj + POSE_DIMS - 3 + CAMERA - SHAPE;
        // For each lres point, the predicted vertex it is matched to; for each
        // predicted vertex, its fixed lres partner.
        let (lres_to_pred, pred_to_lres): (Vec<usize>, Vec<usize>) = if self.eta_shape > 0.0 {
            let pred = PointIndex::new(&base.verts);
            (
                self.lres.iter().map(|q| pred.nearest(q).expect("non-empty").0).collect(),
                base.verts.iter().map(|q| self.lres_index.nearest(q).expect("non-empty").0).collect(),
            )
        } else {
            (Vec::new(), Vec::new())
        };
        let wv = (0.5 * self.eta_shape / nv.max(1) as f64).sqrt();
        let wl = (0.5 * self.eta_shape / nl.max(1) as f64).sqrt();
        let shape_residuals = |e: &Eval, out: &mut [f64]| {
            for (i, v) in e.verts.iter().enumerate() {
                let d = (v - self.lres[pred_to_lres[i]]) * wv;
                out[3 * i..3 * i + 3].copy_from_slice(d.as_slice());
            }
            for (i, &m) in lres_to_pred.iter().enumerate() {
                let d = (self.lres[i] - e.verts[m]) * wl;
                out[3 * (nv + i)..3 * (nv + i) + 3].copy_from_slice(d.as_slice());
            }
        };
        if self.eta_shape > 0.0 {
            shape_residuals(&base, &mut r.as_mut_slice()[off..]);
        }
        // Central differences per parameter; only the joint and vertex
        // residuals depend on the body model.
        let cols: Vec<Vec<f64>> = (0..DIMS)
            .into_par_iter()
            .map(|k| {
                let mut col = vec![0.0; rows];
                let (mut pp, mut pm) = (p.clone(), p.clone());
                pp[k] += JACOBIAN_STEP;
                pm[k] -= JACOBIAN_STEP;
                let (ep, em) = (self.eval(&pp), self.eval(&pm));
                let inv = 0.5 / JACOBIAN_STEP;
                for (i, (a, b)) in ep.joints.iter().zip(&em.joints).enumerate() {
                    col[2 * i] = wj * (a.x - b.x) * inv;
                    col[2 * i + 1] = wj * (a.y - b.y) * inv;
                }
                if (3..POSE_DIMS).contains(&k) {
                    col[2 * nj + k - 3] = wr;
                }
                if (SHAPE..CAMERA).contains(&k) {
                    col[prior_row(k)] = wb;
                }
                if self.eta_shape > 0.0 {
                    let (mut rp, mut rm) = (vec![0.0; rows - off], vec![0.0; rows - off]);
                    shape_residuals(&ep, &mut rp);
                    shape_residuals(&em, &mut rm);
                    for (c, (a, b)) in col[off..].iter_mut().zip(rp.iter().zip(&rm)) {
                        *c = (a - b) * inv;
                    }
                }
                col
            })
            .collect();
        let mut jac = DMatrix::zeros(rows, DIMS);
        for (k, col) in cols.into_iter().enumerate() {
            jac.column_mut(k).copy_from_slice(&col);
        }
        (r, jac)
    }
}

/// Fits body pose, shape and camera to 2D joints and a coarse surface.
///
/// Each iteration linearizes the residuals (nearest-neighbour pairs held
/// fixed), takes the damped Gauss-Newton direction, and backtracks on the
/// true loss, so the returned loss never exceeds the starting loss.
pub fn fit_body_init(
    body: &SkinnedBody,
    joints: &[Joint2d],
    camera: &WeakPerspectiveCamera,
    v_lres: &[Vec3],
    start: (&Pose, &Shape),
    cfg: &FitConfig,
) -> Result<(BodyFit, StageReport)> {
    let clock = Instant::now();
    if joints.len() != JOINT_COUNT {
        return Err(Error::InvalidScene(format!(
            "expected {JOINT_COUNT} joints, got {}",
            joints.len()
        )));
    }
    let visible: Vec<(usize, Vec2)> = joints
        .iter()
        .enumerate()
        .filter(|(_, j)| j.visible)
        .map(|(i, j)| (i, j.point))
        .collect();
    if visible.len() < 4 {
        return Err(Error::TooFewJoints(visible.len()));
    }
    if cfg.eta_shape > 0.0 && v_lres.is_empty() {
        return Err(Error::EmptyInput("coarse surface V_lres"));
    }
    let rest = body.rest_mesh().vertices();
    let pick = stride_subsample(rest.len(), cfg.init_samples);
    let samples: Vec<Vec3> = pick.iter().map(|&i| rest[i]).collect();
    let weights: SparseWeights = pick.iter().map(|&i| body.weights()[i].clone()).collect();
    let lres: Vec<Vec3> = stride_subsample(v_lres.len(), cfg.init_samples)
        .into_iter()
        .map(|i| v_lres[i])
        .collect();
    let problem = Problem {
        body,
        visible,
        samples,
        weights,
        lres_index: PointIndex::new(&lres),
        lres,
        eta_reg: cfg.eta_reg,
        eta_beta: cfg.eta_beta,
        eta_shape: cfg.eta_shape,
    };

    let sc = &cfg.init;
    let mut p = pack(start.0, start.1, camera);
    project_feasible(&mut p);
    let mut loss = problem.loss(&p);
    if !loss.is_finite() {
        return Err(Error::Diverged { stage: "init", iteration: 0 });
    }
    let mut losses = vec![loss];
    let mut status = StageStatus::MaxIterations;
    let mut iterations = 0;
    for it in 0..sc.max_iterations {
        iterations = it + 1;
        let (r, jac) = problem.linearize(&p);
        let g = jac.tr_mul(&r);
        let mut h = jac.tr_mul(&jac);
        let mu = DAMPING * h.trace() / DIMS as f64 + 1e-12;
        for k in 0..DIMS {
            h[(k, k)] += mu;
        }
        let dir = match h.cholesky() {
            Some(c) => c.solve(&g),
            None => g.clone(),
        };
        let accepted = backtrack(loss, sc.step, |s| {
            let mut cand = &p - &dir * s;
            project_feasible(&mut cand);
            let l = problem.loss(&cand);
            (cand, l)
        });
        match accepted {
            Some((cand, l)) => {
                p = cand;
                loss = l;
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
    let (pose, shape, camera) = unpack(&p);
    let joint_mse = problem.joint_mse(&problem.eval(&p));
    let report = StageReport {
        stage: Stage::Init,
        status,
        iterations,
        losses,
        seconds: clock.elapsed().as_secs_f64(),
        message: None,
    };
    Ok((
        BodyFit {
            pose,
            shape,
            camera,
            joint_mse,
        },
        report,
    ))
}
