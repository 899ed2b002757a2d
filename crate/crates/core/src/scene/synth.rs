use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fields::{
    bake_to_grid, BoundaryCylinderField, FieldConvention, GridField, GridSpec, MeshOccupancyField, ScalarField,
    SemanticFieldSet, TsdfField,
};
use crate::garment::{BoundaryType, GarmentCategory, Pose, SemanticLabel, Shape, SkinnedBody, WeakPerspectiveCamera};
use crate::geometry::{Aabb, Polyline3, TriMesh, Vec3};
use crate::registration::Joint2d;

/// Labels in argmax order; earlier labels win ties.
pub const LABEL_ORDER: [SemanticLabel; 3] = [SemanticLabel::Upper, SemanticLabel::Lower, SemanticLabel::Body];

/// Space kept around the body and garments inside the scene grids.
const SCENE_PADDING: f64 = 0.08;

/// A ground-truth garment: an open surface and its boundary curves.
#[derive(Debug, Clone)]
pub struct SynthGarment {
    pub category: GarmentCategory,
    pub mesh: TriMesh,
    /// Boundary loops as vertex indices of `mesh`, with their types.
    pub loops: Vec<(BoundaryType, Vec<usize>)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthOptions {
    /// Cells along the longest axis of the fine target grid.
    pub resolution: usize,
    /// Cells along the longest axis of the coarse grid.
    pub coarse_resolution: usize,
    pub eps_b: f64,
    pub tsdf_truncation: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            resolution: 256,
            coarse_resolution: 64,
            eps_b: 1e-3,
            tsdf_truncation: 0.05,
        }
    }
}

/// Everything a fitting run reads from a scene.
pub struct SceneBundle {
    pub name: String,
    /// Fine occupancy `f_f` of body and garments.
    pub target: GridField,
    /// Coarse occupancy `f_c`.
    pub coarse: GridField,
    pub boundary_fields: Vec<(BoundaryType, BoundaryCylinderField)>,
    pub semantics: SemanticFieldSet,
    /// The grids behind `semantics`, kept for writing scenes to disk.
    pub semantic_grids: Vec<(SemanticLabel, Arc<GridField>)>,
    pub body_mesh: TriMesh,
    /// Body TSDF baked to a grid (negative inside).
    pub body_tsdf: GridField,
    pub gt_garments: Vec<(SemanticLabel, TriMesh)>,
    /// Category of each ground-truth garment, parallel to `gt_garments`.
    pub garment_categories: Vec<GarmentCategory>,
    pub joints_2d: Vec<Joint2d>,
    pub camera: WeakPerspectiveCamera,
    /// Body parameters the scene was generated with.
    pub body_pose: Pose,
    pub body_shape: Shape,
}

impl SceneBundle {
    pub fn boundary_field(&self, kind: BoundaryType) -> Option<&BoundaryCylinderField> {
        self.boundary_fields.iter().find(|(t, _)| *t == kind).map(|(_, f)| f)
    }

    pub fn gt_garment(&self, label: SemanticLabel) -> Option<&TriMesh> {
        self.gt_garments.iter().find(|(l, _)| *l == label).map(|(_, m)| m)
    }
}

/// Closes every loop with a fan of triangles to the loop centroid. Only
/// used to make garments watertight for occupancy.
pub fn cap_loops(mesh: &TriMesh, loops: &[Vec<usize>]) -> Result<TriMesh> {
    let mut verts = mesh.vertices().to_vec();
    let mut faces = mesh.faces().to_vec();
    for l in loops {
        if l.len() < 3 {
            return Err(Error::InvalidScene(format!("cannot cap a loop of {} vertices", l.len())));
        }
        let c = l.iter().map(|&i| verts[i]).sum::<Vec3>() / l.len() as f64;
        let ci = verts.len();
        verts.push(c);
        for k in 0..l.len() {
            faces.push([l[k], l[(k + 1) % l.len()], ci]);
        }
    }
    TriMesh::new(verts, faces)
}

fn union_occupancy(meshes: &[&MeshOccupancyField], spec: GridSpec) -> GridField {
    let mut values = vec![0f32; spec.node_count()];
    for m in meshes {
        for (v, o) in values.iter_mut().zip(m.sample_grid(&spec)) {
            if o > 0.5 {
                *v = 1.0;
            }
        }
    }
    GridField::new(spec, values, FieldConvention::OCCUPANCY, 0.0).expect("sizes match")
}

/// Builds a scene from a posed body and ground-truth garments.
///
/// Garments are capped at their loops for occupancy; a point inside a
/// garment volume is labeled with that garment's label even when it is
/// also inside the body, and earlier garments win over later ones.
pub fn synth_scene(
    name: &str,
    body: &SkinnedBody,
    pose: &Pose,
    shape: &Shape,
    garments: &[SynthGarment],
    camera: &WeakPerspectiveCamera,
    opts: &SynthOptions,
) -> Result<SceneBundle> {
    shape.validate()?;
    if opts.resolution < 4 || opts.coarse_resolution < 2 {
        return Err(Error::InvalidConfig("scene resolutions are too small".into()));
    }
    let (body_mesh, joints3d) = body.skin_pose(pose, shape);
    let body_occ = MeshOccupancyField::new(body_mesh.clone(), "body")?;
    let mut garment_occ = Vec::with_capacity(garments.len());
    for (i, g) in garments.iter().enumerate() {
        let loops: Vec<Vec<usize>> = g.loops.iter().map(|(_, l)| l.clone()).collect();
        let capped = cap_loops(&g.mesh, &loops)?;
        garment_occ.push(MeshOccupancyField::new(capped, &format!("garment {i} ({})", g.category))?);
    }

    let mut bounds = body_mesh.bounds();
    for g in garments {
        bounds = bounds.union(&g.mesh.bounds());
    }
    let bounds = bounds.padded(SCENE_PADDING);
    let fine = GridSpec::covering(&bounds, opts.resolution);
    let coarse = GridSpec::covering(&bounds, opts.coarse_resolution);
    let aux = GridSpec::covering(&bounds, (opts.resolution / 2).max(2));

    let mut all: Vec<&MeshOccupancyField> = garment_occ.iter().collect();
    all.push(&body_occ);
    let target = union_occupancy(&all, fine);
    let coarse = union_occupancy(&all, coarse);

    // Owner per node: first garment containing it, else body.
    let n = aux.node_count();
    let mut owner: Vec<Option<SemanticLabel>> = vec![None; n];
    for (g, occ) in garments.iter().zip(&garment_occ).rev() {
        for (o, v) in owner.iter_mut().zip(occ.sample_grid(&aux)) {
            if v > 0.5 {
                *o = Some(g.category.semantic());
            }
        }
    }
    for (o, v) in owner.iter_mut().zip(body_occ.sample_grid(&aux)) {
        if v > 0.5 && o.is_none() {
            *o = Some(SemanticLabel::Body);
        }
    }
    let semantic_grids: Vec<(SemanticLabel, Arc<GridField>)> = LABEL_ORDER
        .iter()
        .map(|&label| {
            let values = owner.iter().map(|o| if *o == Some(label) { 1.0 } else { 0.0 }).collect();
            let grid = GridField::new(aux, values, FieldConvention::OCCUPANCY, 0.0).expect("sizes match");
            (label, Arc::new(grid))
        })
        .collect();
    let semantics = semantic_set(&semantic_grids)?;

    let tsdf = TsdfField::new(body_mesh.clone(), opts.tsdf_truncation, "body")?;
    let body_tsdf = bake_to_grid(&tsdf, aux);

    let mut curves: BTreeMap<BoundaryType, Vec<Polyline3>> = BTreeMap::new();
    for g in garments {
        for (kind, l) in &g.loops {
            let pts = l.iter().map(|&i| g.mesh.vertices()[i]).collect();
            curves.entry(*kind).or_default().push(Polyline3::new(pts, true)?);
        }
    }
    let boundary_fields = curves
        .into_iter()
        .map(|(k, c)| Ok((k, BoundaryCylinderField::new(c, opts.eps_b)?)))
        .collect::<Result<_>>()?;

    let joints_2d = joints3d
        .iter()
        .map(|j| Joint2d {
            point: camera.project(j),
            visible: true,
        })
        .collect();

    Ok(SceneBundle {
        name: name.to_string(),
        target,
        coarse,
        boundary_fields,
        semantics,
        semantic_grids,
        body_mesh,
        body_tsdf,
        gt_garments: garments.iter().map(|g| (g.category.semantic(), g.mesh.clone())).collect(),
        garment_categories: garments.iter().map(|g| g.category).collect(),
        joints_2d,
        camera: *camera,
        body_pose: pose.clone(),
        body_shape: *shape,
    })
}

pub(crate) fn semantic_set(grids: &[(SemanticLabel, Arc<GridField>)]) -> Result<SemanticFieldSet> {
    SemanticFieldSet::new(
        grids
            .iter()
            .map(|(l, g)| (*l, Box::new(g.clone()) as Box<dyn ScalarField>))
            .collect(),
    )
}

/// Bounds of the fine target grid.
pub fn scene_bounds(scene: &SceneBundle) -> Aabb {
    scene.target.spec().bounds()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::garment::{procedural_template, GarmentCategory, TemplateParams};

    fn skirt() -> SynthGarment {
        let p = TemplateParams {
            around: 32,
            rings: 10,
            ..TemplateParams::default()
        };
        let t = procedural_template(GarmentCategory::Skirt, &p).unwrap();
        SynthGarment {
            category: GarmentCategory::Skirt,
            mesh: t.mesh().clone(),
            loops: t.boundaries().iter().map(|l| (l.kind, l.vertices.clone())).collect(),
        }
    }

    fn opts() -> SynthOptions {
        SynthOptions {
            resolution: 96,
            coarse_resolution: 24,
            ..SynthOptions::default()
        }
    }

    #[test]
    fn body_only_scene() {
        use rand::{Rng, SeedableRng};
        let body = SkinnedBody::standard();
        let s = synth_scene("body", &body, &Pose::default(), &Shape::default(), &[], &Default::default(), &opts())
            .unwrap();
        let occ = MeshOccupancyField::new(s.body_mesh.clone(), "body").unwrap();
        let b = scene_bounds(&s);
        let mut inside = 0;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2000 {
            let p = Vec3::new(
                rng.gen_range(b.min.x..b.max.x),
                rng.gen_range(b.min.y..b.max.y),
                rng.gen_range(b.min.z..b.max.z),
            );
            if occ.contains(&p) && occ.accelerator().distance(&p) > 0.02 {
                inside += 1;
                assert_eq!(s.semantics.argmax(&p), SemanticLabel::Body);
                assert_eq!(s.target.eval(&p), 1.0);
            }
        }
        assert!(inside > 5);
        assert!(s.boundary_fields.is_empty());
        assert_eq!(s.joints_2d.len(), crate::garment::JOINT_COUNT);
    }

    #[test]
    fn skirt_region_is_lower() {
        let body = SkinnedBody::standard();
        let s = synth_scene("skirt", &body, &Pose::default(), &Shape::default(), &[skirt()], &Default::default(), &opts())
            .unwrap();
        // Between the legs, under the skirt: inside the skirt, outside the body.
        let p = Vec3::new(0.0, 0.36, 0.0);
        let body_occ = MeshOccupancyField::new(s.body_mesh.clone(), "body").unwrap();
        assert!(!body_occ.contains(&p));
        assert_eq!(s.semantics.argmax(&p), SemanticLabel::Lower);
        assert_eq!(s.target.eval(&p), 1.0);
        // Inside the thigh, also inside the skirt volume: garment wins.
        let q = Vec3::new(0.085, 0.42, 0.0);
        assert!(body_occ.contains(&q));
        assert_eq!(s.semantics.argmax(&q), SemanticLabel::Lower);
        assert!(s.boundary_field(BoundaryType::SkirtHem).is_some());
        assert!(s.boundary_field(BoundaryType::Waistline).is_some());
    }

    #[test]
    fn open_garment_must_be_cappable() {
        let mut g = skirt();
        g.loops.pop();
        let body = SkinnedBody::standard();
        let err = synth_scene("bad", &body, &Pose::default(), &Shape::default(), &[g], &Default::default(), &opts())
            .err()
            .unwrap();
        assert!(matches!(err, Error::NotWatertight { ref name, .. } if name.contains("garment 0")), "{err}");
    }

    #[test]
    fn baked_target_agrees_with_mesh_occupancy() {
        use rand::{Rng, SeedableRng};
        let body = SkinnedBody::standard();
        let g = skirt();
        let s = synth_scene("skirt", &body, &Pose::default(), &Shape::default(), &[g.clone()], &Default::default(), &opts())
            .unwrap();
        let loops: Vec<Vec<usize>> = g.loops.iter().map(|(_, l)| l.clone()).collect();
        let skirt_occ = MeshOccupancyField::new(cap_loops(&g.mesh, &loops).unwrap(), "skirt").unwrap();
        let body_occ = MeshOccupancyField::new(s.body_mesh.clone(), "body").unwrap();
        let b = scene_bounds(&s);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let (mut agree, mut total) = (0, 0);
        while total < 10_000 {
            let p = Vec3::new(
                rng.gen_range(b.min.x..b.max.x),
                rng.gen_range(b.min.y..b.max.y),
                rng.gen_range(b.min.z..b.max.z),
            );
            // Off-surface: farther than one cell from either surface.
            let h = s.target.spec().spacing;
            if skirt_occ.accelerator().distance(&p) < h || body_occ.accelerator().distance(&p) < h {
                continue;
            }
            total += 1;
            let direct = skirt_occ.contains(&p) || body_occ.contains(&p);
            if (s.target.eval(&p) > 0.5) == direct {
                agree += 1;
            }
        }
        assert!(agree as f64 / total as f64 >= 0.995, "{agree}/{total}");
    }
}
