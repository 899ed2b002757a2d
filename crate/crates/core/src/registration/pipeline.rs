use log::info;

use super::boundary::{fit_boundaries, propagate_boundary_deformation};
use super::config::FitConfig;
use super::init::fit_body_init;
use super::probe::ProbeMode;
use super::report::{FitReport, Stage, StageReport, StageStatus};
use super::shape::{shape_fit, ShapeInputs};
use crate::error::{Error, Result};
use crate::fields::{marching_cubes, BoundaryCylinderField, ScalarField};
use crate::garment::{BoundaryType, GarmentTemplate, Pose, Shape, SkinnedBody};
use crate::geometry::TriMesh;
use crate::scene::SceneBundle;

/// Body parameters the initialization stage starts from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BodyStart {
    pub pose: Pose,
    pub shape: Shape,
}

/// The scene's boundary fields for every loop type of `template`, with
/// the tube radius taken from the config.
pub fn template_boundary_fields(
    scene: &SceneBundle,
    template: &GarmentTemplate,
    eps_b: f64,
) -> Result<Vec<(BoundaryType, BoundaryCylinderField)>> {
    template
        .boundary_types()
        .into_iter()
        .map(|kind| {
            let f = scene.boundary_field(kind).ok_or(Error::MissingBoundaryField(kind))?;
            Ok((kind, f.with_radius(eps_b)?))
        })
        .collect()
}

/// Initialization, boundary fitting with propagation, then shape fitting,
/// each honoring the stage switches in `cfg`.
///
/// With the boundary stage disabled the shape stage also drops its
/// boundary term. With probing disabled every vertex is attracted to the
/// nearest target sample regardless of semantics.
pub fn run_pipeline(
    scene: &SceneBundle,
    template: &GarmentTemplate,
    cfg: &FitConfig,
    start: &BodyStart,
) -> Result<(TriMesh, FitReport)> {
    cfg.validate()?;
    let fields = template_boundary_fields(scene, template, cfg.eps_b)?;
    let body = SkinnedBody::standard();
    let mut report = FitReport {
        stages: Vec::new(),
        body: None,
        chamfer: None,
        posed: None,
        boundary_aligned: None,
        fitted: None,
    };

    let posed = if cfg.stages.init {
        let b = scene.coarse.spec().bounds();
        let dims = scene.coarse.spec().dims.map(|d| d - 1);
        let v_lres = marching_cubes(&scene.coarse, &b, dims);
        let (fit, stage) = fit_body_init(
            &body,
            &scene.joints_2d,
            &scene.camera,
            v_lres.vertices(),
            (&start.pose, &start.shape),
            cfg,
        )?;
        info!("init: {:?} after {} iterations, joint mse {:.3e}", stage.status, stage.iterations, fit.joint_mse);
        let m = template.deform(&body, &fit.pose, &fit.shape);
        report.body = Some(fit);
        report.stages.push(stage);
        m
    } else {
        report.stages.push(StageReport::skipped(Stage::Init));
        template.mesh().clone()
    };

    let aligned = if cfg.stages.boundary {
        let (positions, stage) = fit_boundaries(&posed, template.boundaries(), &fields, cfg)?;
        info!("boundary: {:?} after {} iterations", stage.status, stage.iterations);
        report.stages.push(stage);
        propagate_boundary_deformation(&posed, template.boundaries(), &positions)?
    } else {
        report.stages.push(StageReport::skipped(Stage::Boundary));
        posed.clone()
    };

    let fitted = if cfg.stages.shape {
        let mut shape_cfg = cfg.clone();
        if !cfg.stages.boundary {
            shape_cfg.eta_b = 0.0;
        }
        let inputs = ShapeInputs {
            target: &scene.target,
            semantics: cfg.stages.probe.then_some((&scene.semantics, template.semantic())),
            boundary_fields: &fields,
            body: Some(&scene.body_tsdf as &dyn ScalarField),
            mode: if cfg.stages.probe { ProbeMode::Gated } else { ProbeMode::Nearest },
        };
        let (m, stage) = shape_fit(&aligned, template.boundaries(), &inputs, &shape_cfg)?;
        info!("shape: {:?} after {} iterations", stage.status, stage.iterations);
        report.stages.push(stage);
        m
    } else {
        report.stages.push(StageReport::skipped(Stage::Shape));
        aligned.clone()
    };

    report.posed = Some(posed);
    report.boundary_aligned = Some(aligned);
    report.fitted = Some(fitted.clone());
    if report.stages.iter().any(|s| s.status == StageStatus::Failed) {
        log::warn!("a stage failed; returning the last valid mesh");
    }
    Ok((fitted, report))
}
