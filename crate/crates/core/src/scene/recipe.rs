use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::synth::{synth_scene, SceneBundle, SynthGarment, SynthOptions};
use crate::error::{Error, Result};
use crate::garment::{
    procedural_template, GarmentCategory, GarmentTemplate, Pose, Shape, SkinnedBody, TemplateParams,
    WeakPerspectiveCamera, JOINT_NAMES,
};
use crate::geometry::Vec3;

/// Names of the scenes shipped with the crate.
pub const BUNDLED_SCENES: [&str; 3] = ["skirt_basic", "top_basic", "pants_basic"];

fn bundled_text(name: &str) -> Option<&'static str> {
    match name {
        "skirt_basic" => Some(include_str!("../../scenes/skirt_basic.json")),
        "top_basic" => Some(include_str!("../../scenes/top_basic.json")),
        "pants_basic" => Some(include_str!("../../scenes/pants_basic.json")),
        _ => None,
    }
}

fn default_resolution() -> usize {
    SynthOptions::default().resolution
}

fn default_coarse() -> usize {
    SynthOptions::default().coarse_resolution
}

fn default_heatmap_size() -> usize {
    256
}

/// Body pose and shape; rotations are per-joint axis-angle in degrees.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BodyRecipe {
    pub rotations_deg: BTreeMap<String, [f64; 3]>,
    pub translation: [f64; 3],
    pub shape: Shape,
}

impl BodyRecipe {
    pub fn pose(&self) -> Result<Pose> {
        let mut pose = Pose::default();
        for (name, r) in &self.rotations_deg {
            let j = JOINT_NAMES.iter().position(|n| n == name).ok_or_else(|| {
                Error::InvalidScene(format!("unknown joint `{name}`; expected one of {}", JOINT_NAMES.join(", ")))
            })?;
            pose.rotations[j] = Vec3::from(*r).map(f64::to_radians);
        }
        pose.translation = Vec3::from(self.translation);
        Ok(pose)
    }
}

/// A garment built procedurally or loaded from a mesh and annotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GarmentRecipe {
    pub category: GarmentCategory,
    #[serde(default)]
    pub params: TemplateParams,
    /// Rest-pose garment OBJ, relative to the recipe file.
    #[serde(default)]
    pub mesh: Option<PathBuf>,
    /// Boundary annotation JSON; defaults to the mesh path with a `.json`
    /// extension.
    #[serde(default)]
    pub annotation: Option<PathBuf>,
}

/// Input to scene generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneRecipe {
    pub name: String,
    /// Seeds the wrinkle phase of procedural garments.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub body: BodyRecipe,
    #[serde(default)]
    pub camera: WeakPerspectiveCamera,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default = "default_coarse")]
    pub coarse_resolution: usize,
    #[serde(default = "default_heatmap_size")]
    pub heatmap_size: usize,
    /// Outermost garment first.
    pub garments: Vec<GarmentRecipe>,
}

impl SceneRecipe {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse(origin, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn bundled(name: &str) -> Result<Self> {
        let text = bundled_text(name).ok_or_else(|| {
            Error::InvalidScene(format!("no bundled scene `{name}`; available: {}", BUNDLED_SCENES.join(", ")))
        })?;
        Self::parse(text, Path::new(name))
    }

    /// Rest-pose garment templates, with the per-garment wrinkle phase
    /// drawn from the seed. Relative mesh paths resolve against `base`.
    pub fn garment_templates(&self, base: &Path) -> Result<Vec<GarmentTemplate>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        self.garments
            .iter()
            .map(|g| {
                let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                match &g.mesh {
                    Some(mesh) => {
                        let mesh = base.join(mesh);
                        let ann = match &g.annotation {
                            Some(a) => base.join(a),
                            None => mesh.with_extension("json"),
                        };
                        let t = GarmentTemplate::load(&mesh, &ann)?;
                        if t.category() != g.category {
                            return Err(Error::InvalidScene(format!(
                                "{}: annotation says `{}`, recipe says `{}`",
                                ann.display(),
                                t.category(),
                                g.category
                            )));
                        }
                        Ok(t)
                    }
                    None => {
                        let params = TemplateParams {
                            wrinkle_phase: g.params.wrinkle_phase + phase,
                            ..g.params
                        };
                        procedural_template(g.category, &params)
                    }
                }
            })
            .collect()
    }

    pub fn synth_options(&self) -> SynthOptions {
        SynthOptions {
            resolution: self.resolution,
            coarse_resolution: self.coarse_resolution,
            ..SynthOptions::default()
        }
    }

    /// Poses the body and garments and builds the scene.
    pub fn build(&self, base: &Path, opts: &SynthOptions) -> Result<SceneBundle> {
        let body = SkinnedBody::standard();
        let pose = self.body.pose()?;
        let shape = self.body.shape;
        shape.validate()?;
        let garments: Vec<SynthGarment> = self
            .garment_templates(base)?
            .iter()
            .map(|t| SynthGarment {
                category: t.category(),
                mesh: t.deform(&body, &pose, &shape),
                loops: t.boundaries().iter().map(|l| (l.kind, l.vertices.clone())).collect(),
            })
            .collect();
        synth_scene(&self.name, &body, &pose, &shape, &garments, &self.camera, opts)
    }
}

/// The template a category is fitted with by default.
pub fn default_template(category: GarmentCategory) -> Result<GarmentTemplate> {
    procedural_template(category, &TemplateParams::default())
}
