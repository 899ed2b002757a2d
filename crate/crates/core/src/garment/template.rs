use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::body::{Pose, Shape, SkinnedBody, SparseWeights, JOINT_COUNT, JOINT_NAMES};
use super::{BoundaryType, GarmentCategory, SemanticLabel};
use crate::error::{Error, Result};
use crate::geometry::obj::{read_obj, write_obj};
use crate::geometry::{Polyline3, TriMesh, Vec3};

/// A typed closed vertex cycle on a template mesh.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryLoop {
    pub kind: BoundaryType,
    pub vertices: Vec<usize>,
}

impl BoundaryLoop {
    pub fn positions(&self, verts: &[Vec3]) -> Vec<Vec3> {
        self.vertices.iter().map(|&i| verts[i]).collect()
    }

    pub fn polyline(&self, verts: &[Vec3]) -> Polyline3 {
        Polyline3::new(self.positions(verts), true).expect("loop vertices are distinct mesh vertices")
    }
}

/// Template mesh with typed boundary loops and a skinning binding onto the
/// standard body.
#[derive(Debug, Clone, PartialEq)]
pub struct GarmentTemplate {
    category: GarmentCategory,
    semantic: SemanticLabel,
    mesh: TriMesh,
    boundaries: Vec<BoundaryLoop>,
    weights: SparseWeights,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Annotation {
    category: String,
    semantic: String,
    boundaries: Vec<AnnotatedLoop>,
    binding: Binding,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnnotatedLoop {
    #[serde(rename = "type")]
    kind: String,
    #[serde(rename = "loop")]
    vertices: Vec<i64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Binding {
    joints: Vec<String>,
    weights: Vec<Vec<f64>>,
}

impl GarmentTemplate {
    pub fn new(
        category: GarmentCategory,
        semantic: SemanticLabel,
        mesh: TriMesh,
        boundaries: Vec<BoundaryLoop>,
        weights: SparseWeights,
    ) -> Result<Self> {
        let invalid = |m: String| Err(Error::InvalidTemplate(m));
        if semantic == SemanticLabel::Body {
            return invalid("garment semantic label must be upper or lower".into());
        }
        let n = mesh.vertex_count();
        let edges: HashSet<[usize; 2]> = mesh.edges().into_iter().collect();
        let mut seen = HashSet::new();
        for (li, l) in boundaries.iter().enumerate() {
            if l.vertices.len() < 3 {
                return invalid(format!("loop {li} ({}) has fewer than 3 vertices", l.kind));
            }
            if let Some(&bad) = l.vertices.iter().find(|&&v| v >= n) {
                return invalid(format!(
                    "loop {li} ({}): boundary index out of range ({bad} >= {n})",
                    l.kind
                ));
            }
            for k in 0..l.vertices.len() {
                let (a, b) = (l.vertices[k], l.vertices[(k + 1) % l.vertices.len()]);
                if !edges.contains(&[a.min(b), a.max(b)]) {
                    return invalid(format!(
                        "loop {li} ({}): loop not edge-connected ({a}-{b} is not a mesh edge)",
                        l.kind
                    ));
                }
            }
            for &v in &l.vertices {
                if !seen.insert(v) {
                    return invalid(format!("loop {li} ({}): vertex {v} appears in more than one loop position", l.kind));
                }
            }
        }
        if weights.len() != n {
            return invalid(format!("binding has {} rows for {n} vertices", weights.len()));
        }
        for (i, row) in weights.iter().enumerate() {
            if row.iter().any(|&(j, w)| j >= JOINT_COUNT || !(w >= 0.0)) {
                return invalid(format!("binding row {i} has an invalid joint or negative weight"));
            }
            let s: f64 = row.iter().map(|x| x.1).sum();
            if (s - 1.0).abs() > 1e-9 {
                return invalid(format!("binding row {i}: weights sum to {s}, not 1"));
            }
        }
        Ok(Self {
            category,
            semantic,
            mesh,
            boundaries,
            weights,
        })
    }

    pub fn category(&self) -> GarmentCategory {
        self.category
    }

    pub fn semantic(&self) -> SemanticLabel {
        self.semantic
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn boundaries(&self) -> &[BoundaryLoop] {
        &self.boundaries
    }

    pub fn weights(&self) -> &SparseWeights {
        &self.weights
    }

    /// Distinct boundary types, in first-appearance order.
    pub fn boundary_types(&self) -> Vec<BoundaryType> {
        let mut out = Vec::new();
        for l in &self.boundaries {
            if !out.contains(&l.kind) {
                out.push(l.kind);
            }
        }
        out
    }

    /// Skins the template through the body's joint transforms.
    pub fn deform(&self, body: &SkinnedBody, pose: &Pose, shape: &Shape) -> TriMesh {
        let rig = body.rig(pose, shape);
        self.mesh.with_vertices(rig.apply(self.mesh.vertices(), &self.weights))
    }

    pub fn to_annotation_json(&self) -> String {
        let ann = Annotation {
            category: self.category.name().to_string(),
            semantic: self.semantic.name().to_string(),
            boundaries: self
                .boundaries
                .iter()
                .map(|l| AnnotatedLoop {
                    kind: l.kind.name().to_string(),
                    vertices: l.vertices.iter().map(|&v| v as i64).collect(),
                })
                .collect(),
            binding: Binding {
                joints: JOINT_NAMES.iter().map(|s| s.to_string()).collect(),
                weights: self
                    .weights
                    .iter()
                    .map(|row| {
                        let mut dense = vec![0.0; JOINT_COUNT];
                        for &(j, w) in row {
                            dense[j] = w;
                        }
                        dense
                    })
                    .collect(),
            },
        };
        serde_json::to_string_pretty(&ann).expect("annotation serializes")
    }

    pub fn from_annotation_json(mesh: TriMesh, text: &str) -> Result<Self> {
        let ann: Annotation =
            serde_json::from_str(text).map_err(|e| Error::InvalidTemplate(format!("annotation: {e}")))?;
        let category: GarmentCategory = ann.category.parse()?;
        let semantic: SemanticLabel = ann.semantic.parse()?;
        let n = mesh.vertex_count();
        let boundaries = ann
            .boundaries
            .iter()
            .map(|l| {
                let kind: BoundaryType = l.kind.parse()?;
                let vertices = l
                    .vertices
                    .iter()
                    .map(|&v| {
                        usize::try_from(v).ok().filter(|&v| v < n).ok_or_else(|| {
                            Error::InvalidTemplate(format!(
                                "{kind} loop: boundary index out of range ({v} for {n} vertices)"
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(BoundaryLoop { kind, vertices })
            })
            .collect::<Result<Vec<_>>>()?;
        let joint_index = ann
            .binding
            .joints
            .iter()
            .map(|name| {
                JOINT_NAMES.iter().position(|j| j == name).ok_or_else(|| {
                    Error::InvalidTemplate(format!("binding names unknown joint `{name}`"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let weights = ann
            .binding
            .weights
            .iter()
            .enumerate()
            .map(|(i, row)| {
                if row.len() != joint_index.len() {
                    return Err(Error::InvalidTemplate(format!(
                        "binding row {i} has {} entries for {} joints",
                        row.len(),
                        joint_index.len()
                    )));
                }
                Ok(row
                    .iter()
                    .zip(&joint_index)
                    .filter(|(w, _)| **w != 0.0)
                    .map(|(&w, &j)| (j, w))
                    .collect())
            })
            .collect::<Result<SparseWeights>>()?;
        Self::new(category, semantic, mesh, boundaries, weights)
    }

    pub fn load(mesh_path: impl AsRef<Path>, annotation_path: impl AsRef<Path>) -> Result<Self> {
        let mesh = read_obj(mesh_path)?;
        let path = annotation_path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_annotation_json(mesh, &text).map_err(|e| Error::parse(path, e))
    }

    pub fn save(&self, mesh_path: impl AsRef<Path>, annotation_path: impl AsRef<Path>) -> Result<()> {
        write_obj(mesh_path, &self.mesh)?;
        let path = annotation_path.as_ref();
        fs::write(path, self.to_annotation_json()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use nalgebra::Rotation3;

    use super::*;
    use crate::garment::{joint, procedural_template, TemplateParams};

    fn skirt() -> GarmentTemplate {
        let p = TemplateParams {
            around: 16,
            rings: 6,
            ..TemplateParams::default()
        };
        procedural_template(GarmentCategory::Skirt, &p).unwrap()
    }

    #[test]
    fn save_load_round_trip() {
        let t = skirt();
        let dir = tempfile::tempdir().unwrap();
        let (m, a) = (dir.path().join("t.obj"), dir.path().join("t.json"));
        t.save(&m, &a).unwrap();
        let back = GarmentTemplate::load(&m, &a).unwrap();
        assert_eq!(back.mesh(), t.mesh());
        assert_eq!(back.boundaries(), t.boundaries());
        assert_eq!(back.category(), t.category());
        for (x, y) in back.weights().iter().zip(t.weights()) {
            assert_eq!(x, y);
        }
    }

    fn edit_annotation(t: &GarmentTemplate, f: impl FnOnce(&mut serde_json::Value)) -> Result<GarmentTemplate> {
        let mut v: serde_json::Value = serde_json::from_str(&t.to_annotation_json()).unwrap();
        f(&mut v);
        GarmentTemplate::from_annotation_json(t.mesh().clone(), &v.to_string())
    }

    #[test]
    fn index_equal_to_vertex_count_is_rejected() {
        let t = skirt();
        let n = t.mesh().vertex_count();
        let err = edit_annotation(&t, |v| v["boundaries"][0]["loop"][0] = n.into()).unwrap_err();
        assert!(err.to_string().contains("boundary index out of range"), "{err}");
    }

    #[test]
    fn non_edge_loop_is_rejected() {
        let t = skirt();
        let err = edit_annotation(&t, |v| {
            let l = v["boundaries"][0]["loop"].as_array_mut().unwrap();
            l.swap(0, 2);
        })
        .unwrap_err();
        assert!(err.to_string().contains("loop not edge-connected"), "{err}");
    }

    #[test]
    fn unnormalized_weights_are_rejected() {
        let t = skirt();
        let err = edit_annotation(&t, |v| {
            let row = v["binding"]["weights"][3].as_array_mut().unwrap();
            let w = row[0].as_f64().unwrap();
            row[0] = (w + 0.5).into();
        })
        .unwrap_err();
        assert!(err.to_string().contains("sum"), "{err}");
    }

    #[test]
    fn unknown_boundary_name_is_rejected() {
        let t = skirt();
        assert!(edit_annotation(&t, |v| v["boundaries"][0]["type"] = "collar_bone".into()).is_err());
    }

    #[test]
    fn rest_deform_is_identity() {
        let t = skirt();
        let body = SkinnedBody::standard();
        let m = t.deform(&body, &Pose::default(), &Shape::default());
        assert_eq!(m.vertices(), t.mesh().vertices());
    }

    #[test]
    fn root_rotation_rotates_rigidly() {
        let t = skirt();
        let body = SkinnedBody::standard();
        let mut pose = Pose::default();
        let aa = Vec3::new(0.2, -0.5, 0.3);
        pose.rotations[joint::ROOT] = aa;
        let m = t.deform(&body, &pose, &Shape::default());
        let r = Rotation3::new(aa);
        let root = body.rest_joints()[joint::ROOT];
        for (a, b) in t.mesh().vertices().iter().zip(m.vertices()) {
            let expect = root + r * (a - root);
            assert!((expect - b).norm() < 1e-12);
        }
        // Skinning never changes connectivity, so every loop stays a cycle.
        let posed = GarmentTemplate::new(t.category(), t.semantic(), m, t.boundaries().to_vec(), t.weights().clone());
        assert!(posed.is_ok());
    }
}
