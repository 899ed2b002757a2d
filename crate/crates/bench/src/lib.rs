//! Criterion benchmarks for the numeric kernels; see `benches/`.

use std::path::Path;

use reef_core::garment::GarmentTemplate;
use reef_core::scene::{default_template, SceneBundle, SceneRecipe};

/// A bundled scene at a reduced grid resolution, with its fitted template.
pub fn small_scene(name: &str, resolution: usize) -> (SceneBundle, GarmentTemplate) {
    let mut recipe = SceneRecipe::bundled(name).expect("bundled scene");
    recipe.resolution = resolution;
    recipe.coarse_resolution = (resolution / 4).max(8);
    let scene = recipe.build(Path::new("."), &recipe.synth_options()).expect("scene builds");
    let template = default_template(scene.garment_categories[0]).expect("template");
    (scene, template)
}
