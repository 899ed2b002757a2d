use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::heatmap::{write_pgm, HeatmapSource, HeatmapStack, DEFAULT_SIGMA};
use super::synth::{semantic_set, SceneBundle};
use crate::error::{Error, Result};
use crate::fields::{BoundaryCylinderField, GridField};
use crate::garment::{BoundaryType, GarmentCategory, Pose, SemanticLabel, Shape, WeakPerspectiveCamera};
use crate::geometry::obj::{read_obj, write_obj};
use crate::geometry::{Polyline3, Vec3};
use crate::registration::Joint2d;

pub const MANIFEST_FILE: &str = "scene.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyEntry {
    pub mesh: PathBuf,
    pub pose: Pose,
    pub shape: Shape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GarmentEntry {
    pub label: SemanticLabel,
    pub category: GarmentCategory,
    pub mesh: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemanticEntry {
    pub label: SemanticLabel,
    pub grid: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatmapEntry {
    pub channel: String,
    pub file: PathBuf,
}

/// The on-disk description of a scene; paths are relative to the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneManifest {
    pub name: String,
    pub camera: WeakPerspectiveCamera,
    pub body: BodyEntry,
    pub target: PathBuf,
    pub coarse: PathBuf,
    pub body_tsdf: PathBuf,
    pub semantics: Vec<SemanticEntry>,
    pub boundaries: PathBuf,
    pub joints: PathBuf,
    pub garments: Vec<GarmentEntry>,
    #[serde(default)]
    pub heatmaps: Vec<HeatmapEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryCurve {
    #[serde(rename = "type")]
    pub kind: BoundaryType,
    pub closed: bool,
    pub points: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryFile {
    pub radius: f64,
    pub curves: Vec<BoundaryCurve>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointsFile {
    /// `[x, y, visible]` per joint, in normalized image units.
    pub joints: Vec<[f64; 3]>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("scene types serialize");
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
}

/// Heatmap channels: one per boundary type, then one per semantic label
/// present (garment surfaces for garment labels, the body surface for
/// `body`).
pub fn scene_heatmaps(scene: &SceneBundle, size: usize) -> Result<HeatmapStack> {
    let mut sources: Vec<(String, HeatmapSource)> = scene
        .boundary_fields
        .iter()
        .map(|(k, f)| (k.name().to_string(), HeatmapSource::Curves(f.curves())))
        .collect();
    for (label, mesh) in &scene.gt_garments {
        sources.push((label.name().to_string(), HeatmapSource::Surface(mesh)));
    }
    sources.push((SemanticLabel::Body.name().to_string(), HeatmapSource::Surface(&scene.body_mesh)));
    super::heatmap::render_heatmaps(&sources, &scene.camera, size, size, DEFAULT_SIGMA)
}

/// Writes every scene file into `dir` (created if needed) and returns the
/// manifest that references them.
pub fn write_scene(dir: &Path, scene: &SceneBundle, heatmaps: Option<&HeatmapStack>) -> Result<SceneManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_obj(dir.join("body.obj"), &scene.body_mesh)?;
    scene.target.write(dir.join("target.reefgrid"))?;
    scene.coarse.write(dir.join("coarse.reefgrid"))?;
    scene.body_tsdf.write(dir.join("body_tsdf.reefgrid"))?;
    let mut semantics = Vec::new();
    for (label, grid) in &scene.semantic_grids {
        let file = PathBuf::from(format!("semantic_{}.reefgrid", label.name()));
        grid.write(dir.join(&file))?;
        semantics.push(SemanticEntry { label: *label, grid: file });
    }
    let radius = scene.boundary_fields.first().map_or(BoundaryCylinderField::DEFAULT_RADIUS, |(_, f)| f.radius());
    let curves = scene
        .boundary_fields
        .iter()
        .flat_map(|(k, f)| {
            f.curves().iter().map(move |c| BoundaryCurve {
                kind: *k,
                closed: c.is_closed(),
                points: c.points().iter().map(|p| [p.x, p.y, p.z]).collect(),
            })
        })
        .collect();
    write_json(&dir.join("boundaries.json"), &BoundaryFile { radius, curves })?;
    let joints = JointsFile {
        joints: scene
            .joints_2d
            .iter()
            .map(|j| [j.point.x, j.point.y, if j.visible { 1.0 } else { 0.0 }])
            .collect(),
    };
    write_json(&dir.join("joints.json"), &joints)?;
    let mut garments = Vec::new();
    for (i, ((label, mesh), category)) in scene.gt_garments.iter().zip(&scene.garment_categories).enumerate() {
        let file = PathBuf::from(format!("gt_{i}_{}.obj", category.name()));
        write_obj(dir.join(&file), mesh)?;
        garments.push(GarmentEntry {
            label: *label,
            category: *category,
            mesh: file,
        });
    }
    let mut heatmap_entries = Vec::new();
    if let Some(h) = heatmaps {
        let hdir = dir.join("heatmaps");
        fs::create_dir_all(&hdir).map_err(|e| Error::io(&hdir, e))?;
        for c in &h.channels {
            let file = PathBuf::from("heatmaps").join(format!("{}.pgm", c.name));
            write_pgm(dir.join(&file), h.width, h.height, &c.values)?;
            heatmap_entries.push(HeatmapEntry {
                channel: c.name.clone(),
                file,
            });
        }
    }
    let manifest = SceneManifest {
        name: scene.name.clone(),
        camera: scene.camera,
        body: BodyEntry {
            mesh: "body.obj".into(),
            pose: scene.body_pose.clone(),
            shape: scene.body_shape,
        },
        target: "target.reefgrid".into(),
        coarse: "coarse.reefgrid".into(),
        body_tsdf: "body_tsdf.reefgrid".into(),
        semantics,
        boundaries: "boundaries.json".into(),
        joints: "joints.json".into(),
        garments,
        heatmaps: heatmap_entries,
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// Loads a scene from a directory containing `scene.json`, or from the
/// manifest path itself.
pub fn read_scene(path: &Path) -> Result<SceneBundle> {
    let manifest_path = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
    let dir = manifest_path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let m: SceneManifest = read_json(&manifest_path)?;
    let at = |p: &Path| dir.join(p);

    let semantic_grids: Vec<(SemanticLabel, Arc<GridField>)> = m
        .semantics
        .iter()
        .map(|e| Ok((e.label, Arc::new(GridField::read(at(&e.grid))?))))
        .collect::<Result<_>>()?;
    let bpath = at(&m.boundaries);
    let bfile: BoundaryFile = read_json(&bpath)?;
    let mut grouped: Vec<(BoundaryType, Vec<Polyline3>)> = Vec::new();
    for c in bfile.curves {
        let pts = c.points.iter().map(|p| Vec3::from(*p)).collect();
        let line = Polyline3::new(pts, c.closed).map_err(|e| Error::parse(&bpath, e))?;
        match grouped.iter_mut().find(|(k, _)| *k == c.kind) {
            Some((_, v)) => v.push(line),
            None => grouped.push((c.kind, vec![line])),
        }
    }
    let boundary_fields = grouped
        .into_iter()
        .map(|(k, c)| Ok((k, BoundaryCylinderField::new(c, bfile.radius).map_err(|e| Error::parse(&bpath, e))?)))
        .collect::<Result<_>>()?;
    let jpath = at(&m.joints);
    let jfile: JointsFile = read_json(&jpath)?;
    let joints_2d = jfile
        .joints
        .iter()
        .map(|[x, y, v]| Joint2d {
            point: crate::garment::Vec2::new(*x, *y),
            visible: *v > 0.5,
        })
        .collect();
    let mut gt_garments = Vec::new();
    let mut garment_categories = Vec::new();
    for g in &m.garments {
        gt_garments.push((g.label, read_obj(at(&g.mesh))?));
        garment_categories.push(g.category);
    }
    Ok(SceneBundle {
        name: m.name,
        target: GridField::read(at(&m.target))?,
        coarse: GridField::read(at(&m.coarse))?,
        boundary_fields,
        semantics: semantic_set(&semantic_grids)?,
        semantic_grids,
        body_mesh: read_obj(at(&m.body.mesh))?,
        body_tsdf: GridField::read(at(&m.body_tsdf))?,
        gt_garments,
        garment_categories,
        joints_2d,
        camera: m.camera,
        body_pose: m.body.pose,
        body_shape: m.body.shape,
    })
}
