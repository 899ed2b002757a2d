//! Resolving `--scene` and `--template` arguments.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::info;
use reef_core::garment::{GarmentCategory, GarmentTemplate};
use reef_core::scene::{default_template, read_scene, SceneBundle, SceneRecipe, BUNDLED_SCENES, MANIFEST_FILE};

/// A recipe from a bundled name or a JSON path, with the directory its
/// relative mesh paths resolve against.
pub fn load_recipe(arg: &str) -> Result<(SceneRecipe, PathBuf)> {
    let path = Path::new(arg);
    if path.is_file() {
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        return Ok((SceneRecipe::load(path)?, base));
    }
    if BUNDLED_SCENES.contains(&arg) {
        return Ok((SceneRecipe::bundled(arg)?, PathBuf::from(".")));
    }
    bail!(
        "{arg}: no such recipe file or bundled scene (bundled: {})",
        BUNDLED_SCENES.join(", ")
    )
}

/// Applies a `--resolution` to a recipe; the coarse grid stays at a
/// quarter of the fine one.
pub fn set_resolution(recipe: &mut SceneRecipe, resolution: Option<usize>) -> Result<()> {
    if let Some(r) = resolution {
        if r < 16 {
            bail!("--resolution must be at least 16, got {r}");
        }
        recipe.resolution = r;
        recipe.coarse_resolution = (r / 4).max(8);
    }
    Ok(())
}

/// Reads a generated scene (directory or manifest), or builds one in
/// memory from a recipe or bundled name.
pub fn load_scene(arg: &str, resolution: Option<usize>) -> Result<SceneBundle> {
    let path = Path::new(arg);
    let is_manifest = path.is_dir() || path.file_name().is_some_and(|n| n == MANIFEST_FILE);
    if is_manifest {
        if resolution.is_some() {
            log::warn!("--resolution is ignored for a generated scene");
        }
        return read_scene(path).with_context(|| format!("reading scene {arg}"));
    }
    let (mut recipe, base) = load_recipe(arg)?;
    set_resolution(&mut recipe, resolution)?;
    info!("building scene `{}` at resolution {}", recipe.name, recipe.resolution);
    recipe
        .build(&base, &recipe.synth_options())
        .with_context(|| format!("building scene {arg}"))
}

/// A template from a category name or an OBJ path, defaulting to the
/// scene's first garment.
pub fn load_template(arg: Option<&str>, scene: &SceneBundle) -> Result<GarmentTemplate> {
    let Some(arg) = arg else {
        let category = *scene
            .garment_categories
            .first()
            .with_context(|| format!("scene `{}` has no garment; pass --template", scene.name))?;
        return Ok(default_template(category)?);
    };
    if let Ok(category) = arg.parse::<GarmentCategory>() {
        return Ok(default_template(category)?);
    }
    let mesh = Path::new(arg);
    if mesh.extension().is_some_and(|e| e == "obj") {
        let annotation = mesh.with_extension("json");
        return GarmentTemplate::load(mesh, &annotation).with_context(|| format!("loading template {arg}"));
    }
    bail!(
        "{arg}: not a template OBJ or a category (categories: {})",
        GarmentCategory::ALL.iter().map(|c| c.name()).collect::<Vec<_>>().join(", ")
    )
}
