use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use log::{info, warn};
use reef_core::fields::{extract_boundary_isosurface, marching_cubes, ScalarField};
use reef_core::garment::{attach_collar, BoundaryType, Collar, CollarStyle, GarmentTemplate, SemanticLabel};
use reef_core::geometry::obj::{read_obj, write_obj};
use reef_core::geometry::{Aabb, TriMesh};
use reef_core::registration::{run_pipeline, template_boundary_fields, BodyStart, FitConfig};
use reef_core::scene::{
    ablation_csv, ablation_suite, evaluate, mode_means, scene_heatmaps, write_scene, AblationSettings, SceneBundle,
    BUNDLED_SCENES,
};

use crate::scene_arg::{load_recipe, load_scene, load_template, set_resolution};
use crate::{AblateArgs, ConfigArgs, EvalArgs, ExtractArgs, FitArgs, GenArgs, Outcome, StageSwitch};

/// Defaults, then the config file, then `--set` overrides in order.
fn build_config(args: &ConfigArgs) -> Result<FitConfig> {
    let mut cfg = match &args.config {
        Some(path) => FitConfig::load(path)?,
        None => FitConfig::default(),
    };
    for o in &args.overrides {
        cfg.apply_override(o).with_context(|| format!("--set {o}"))?;
    }
    Ok(cfg)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("{}: cannot create directory", dir.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("{}: cannot write", path.display()))
}

/// Share of occupied target nodes carrying each semantic label, on every
/// other node per axis.
fn label_coverage(scene: &SceneBundle) -> Vec<(SemanticLabel, f64)> {
    let spec = scene.target.spec();
    let [nx, ny, nz] = spec.dims;
    let labels = scene.semantics.labels().to_vec();
    let mut counts = vec![0usize; labels.len()];
    let mut inside = 0usize;
    for k in (0..nz).step_by(2) {
        for j in (0..ny).step_by(2) {
            for i in (0..nx).step_by(2) {
                if scene.target.value_at(i, j, k) < 0.5 {
                    continue;
                }
                inside += 1;
                let label = scene.semantics.argmax(&spec.node(i, j, k));
                if let Some(slot) = labels.iter().position(|&l| l == label) {
                    counts[slot] += 1;
                }
            }
        }
    }
    labels
        .into_iter()
        .zip(counts)
        .map(|(l, c)| (l, c as f64 / inside.max(1) as f64))
        .collect()
}

pub fn gen(a: GenArgs) -> Result<Outcome> {
    let (mut recipe, base) = load_recipe(&a.scene)?;
    if let Some(seed) = a.seed {
        recipe.seed = seed;
    }
    set_resolution(&mut recipe, a.resolution)?;
    info!("building scene `{}`", recipe.name);
    let scene = recipe
        .build(&base, &recipe.synth_options())
        .with_context(|| format!("building scene {}", a.scene))?;
    let heatmaps = if a.no_heatmaps {
        None
    } else {
        Some(scene_heatmaps(&scene, recipe.heatmap_size)?)
    };
    create_dir(&a.out)?;
    let manifest = write_scene(&a.out, &scene, heatmaps.as_ref())?;
    let dims = |d: [usize; 3]| format!("{}x{}x{}", d[0], d[1], d[2]);
    println!("scene {}", manifest.name);
    println!("target {} (spacing {:.5})", dims(scene.target.spec().dims), scene.target.spec().spacing);
    println!("coarse {}", dims(scene.coarse.spec().dims));
    println!("body_tsdf {}", dims(scene.body_tsdf.spec().dims));
    for (label, share) in label_coverage(&scene) {
        println!("label {label} {:.2}%", 100.0 * share);
    }
    for (kind, field) in &scene.boundary_fields {
        println!("boundary {kind} {} curve(s)", field.curves().len());
    }
    println!("garments {}", manifest.garments.len());
    println!("heatmaps {}", manifest.heatmaps.len());
    Ok(Outcome::Success)
}

fn fit_config(a: &FitArgs) -> Result<FitConfig> {
    let mut cfg = build_config(&a.config)?;
    for d in &a.disable {
        match d {
            StageSwitch::Init => cfg.stages.init = false,
            StageSwitch::Boundary => cfg.stages.boundary = false,
            StageSwitch::Probe => cfg.stages.probe = false,
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn collar_for(template: &GarmentTemplate, name: &str) -> Result<(CollarStyle, Vec<usize>)> {
    let style: CollarStyle = name.parse()?;
    let neckline = template
        .boundaries()
        .iter()
        .find(|l| l.kind == BoundaryType::Neckline)
        .with_context(|| format!("--collar {name}: template `{}` has no neckline", template.category()))?;
    Ok((style, neckline.vertices.clone()))
}

pub fn fit(a: FitArgs) -> Result<Outcome> {
    let cfg = fit_config(&a)?;
    let scene = load_scene(&a.scene, a.resolution)?;
    let template = load_template(a.template.as_deref(), &scene)?;
    let collar = a.collar.as_deref().map(|c| collar_for(&template, c)).transpose()?;
    // Fail on missing boundary fields before any work is done.
    let fields = template_boundary_fields(&scene, &template, cfg.eps_b)?;
    create_dir(&a.out)?;

    let (mesh, mut report) = run_pipeline(&scene, &template, &cfg, &BodyStart::default())?;
    write_obj(a.out.join("M_o.obj"), &mesh)?;
    if a.keep_stages {
        if let Some(m) = &report.posed {
            write_obj(a.out.join("M_p.obj"), m)?;
        }
        if let Some(m) = &report.boundary_aligned {
            write_obj(a.out.join("M_l.obj"), m)?;
        }
    }
    let mut boundary = None;
    match scene.gt_garment(template.semantic()) {
        Some(gt) => {
            let m = evaluate(&mesh, gt, a.samples, a.seed, Some((template.boundaries(), &fields)))?;
            info!("chamfer {:.4e}", m.chamfer);
            report.chamfer = Some(m.chamfer);
            boundary = m.boundary;
        }
        None => info!("scene has no `{}` ground truth; skipping evaluation", template.semantic()),
    }
    if let Some((style, neckline)) = collar {
        let positions: Vec<_> = neckline.iter().map(|&i| mesh.vertices()[i]).collect();
        let attached = attach_collar(&mesh, &neckline, &Collar::authored(style, &positions)?)?;
        write_obj(a.out.join("M_o_collar.obj"), &attached)?;
    }

    let mut json = serde_json::to_value(&report)?;
    let obj = json.as_object_mut().expect("report is an object");
    obj.insert("scene".into(), scene.name.clone().into());
    obj.insert("template".into(), template.category().name().into());
    obj.insert("config".into(), serde_json::to_value(&cfg)?);
    if let Some(b) = boundary {
        obj.insert("boundary_distance".into(), b.into());
    }
    write_text(&a.out.join("report.json"), &(serde_json::to_string_pretty(&json)? + "\n"))?;

    if report.converged() {
        Ok(Outcome::Success)
    } else {
        for s in &report.stages {
            warn!("stage {:?}: {:?} after {} iterations", s.stage, s.status, s.iterations);
        }
        Ok(Outcome::NotConverged)
    }
}

pub fn eval(a: EvalArgs) -> Result<Outcome> {
    let scene = load_scene(&a.scene, a.resolution)?;
    let mesh = read_obj(&a.mesh)?;
    let template = a.template.as_deref().map(|t| load_template(Some(t), &scene)).transpose()?;
    let label = match (&a.label, &template) {
        (Some(l), _) => l.parse::<SemanticLabel>()?,
        (None, Some(t)) => t.semantic(),
        (None, None) => {
            scene
                .gt_garments
                .first()
                .with_context(|| format!("scene `{}` has no ground-truth garment", scene.name))?
                .0
        }
    };
    let gt = scene
        .gt_garment(label)
        .with_context(|| format!("scene `{}` has no `{label}` garment", scene.name))?;
    let fields;
    let loops = match &template {
        Some(t) => {
            if t.mesh().vertex_count() != mesh.vertex_count() {
                bail!(
                    "{}: {} vertices, but the template has {}",
                    a.mesh.display(),
                    mesh.vertex_count(),
                    t.mesh().vertex_count()
                );
            }
            fields = template_boundary_fields(&scene, t, FitConfig::default().eps_b)?;
            Some((t.boundaries(), fields.as_slice()))
        }
        None => None,
    };
    let m = evaluate(&mesh, gt, a.samples, a.seed, loops)?;
    let mut csv = String::from("scene,mesh,label,chamfer,max_to_gt,max_from_gt,boundary_distance\n");
    writeln!(
        csv,
        "{},{},{},{:e},{:e},{:e},{}",
        scene.name,
        a.mesh.display(),
        label,
        m.chamfer,
        m.max_to_gt,
        m.max_from_gt,
        m.boundary.map(|b| format!("{b:e}")).unwrap_or_default()
    )?;
    match &a.out {
        Some(path) => write_text(path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(Outcome::Success)
}

/// Node counts with `resolution` nodes along the longest side of `region`
/// and proportionally fewer along the others.
fn extraction_dims(region: &Aabb, resolution: usize) -> [usize; 3] {
    let ext = region.extent();
    let longest = ext.max();
    [0, 1, 2].map(|k| (((resolution - 1) as f64 * ext[k] / longest).round() as usize + 1).max(2))
}

pub fn extract(a: ExtractArgs) -> Result<Outcome> {
    if a.resolution < 2 {
        bail!("--resolution must be at least 2");
    }
    let scene = load_scene(&a.scene, None)?;
    let region = scene.target.spec().bounds();
    let dims = extraction_dims(&region, a.resolution);
    let mesh: TriMesh = match a.field.split_once(':') {
        None => {
            let field: &dyn ScalarField = match a.field.as_str() {
                "target" => &scene.target,
                "coarse" => &scene.coarse,
                "body_tsdf" => &scene.body_tsdf,
                other => bail!("unknown field `{other}`; expected target, coarse, body_tsdf, semantic:<label> or boundary:<type>"),
            };
            marching_cubes(field, &region, dims)
        }
        Some(("semantic", label)) => {
            let label: SemanticLabel = label.parse()?;
            let (_, grid) = scene
                .semantic_grids
                .iter()
                .find(|(l, _)| *l == label)
                .with_context(|| format!("scene has no `{label}` semantic field"))?;
            marching_cubes(grid.as_ref(), &region, dims)
        }
        Some(("boundary", kind)) => {
            let kind: BoundaryType = kind.parse()?;
            let field = scene
                .boundary_field(kind)
                .with_context(|| format!("scene has no `{kind}` boundary field"))?;
            extract_boundary_isosurface(field, &region, dims)
        }
        Some((prefix, _)) => bail!("unknown field kind `{prefix}`; expected semantic or boundary"),
    };
    if mesh.face_count() == 0 {
        warn!("field `{}` has no surface at this resolution", a.field);
    }
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    write_obj(&a.out, &mesh)?;
    info!("{} vertices, {} faces", mesh.vertex_count(), mesh.face_count());
    Ok(Outcome::Success)
}

pub fn ablate(a: AblateArgs) -> Result<Outcome> {
    let cfg = build_config(&a.config)?;
    let names: Vec<String> = if a.scene.is_empty() {
        BUNDLED_SCENES.iter().map(|s| s.to_string()).collect()
    } else {
        a.scene.clone()
    };
    let mut loaded = Vec::with_capacity(names.len());
    for name in &names {
        let scene = load_scene(name, a.resolution)?;
        let template = load_template(None, &scene)?;
        loaded.push((scene, template));
    }
    let pairs: Vec<_> = loaded.iter().map(|(s, t)| (s, t)).collect();
    let settings = AblationSettings {
        cfg,
        start: BodyStart::default(),
        samples: a.samples,
        seed: a.seed,
    };
    let total = pairs.len() * 4;
    let mut done = 0;
    let rows = ablation_suite(&pairs, &settings, |row| {
        done += 1;
        let cd = row.chamfer.map(|c| format!("{c:.4e}")).unwrap_or_else(|| "-".into());
        eprintln!("[{done}/{total}] {} {}: {cd} ({})", row.scene, row.mode, row.status);
    })?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    write_text(&a.out, &ablation_csv(&rows))?;
    for (mode, mean) in mode_means(&rows) {
        match mean {
            Some(m) => eprintln!("mean {mode}: {m:.4e}"),
            None => eprintln!("mean {mode}: no successful runs"),
        }
    }
    Ok(Outcome::Success)
}
