//! Synthetic scene generation, scene files, heatmaps, evaluation and the
//! ablation suite.

mod ablation;
mod eval;
mod heatmap;
mod io;
mod recipe;
mod synth;

pub use ablation::{ablation_csv, ablation_suite, mode_means, AblationMode, AblationRow, AblationSettings};
pub use eval::{boundary_distance, evaluate, sample_surface, Metrics, MIN_SAMPLES};
pub use heatmap::{
    pgm_bytes, render_heatmaps, write_pgm, HeatmapChannel, HeatmapSource, HeatmapStack, DEFAULT_SIGMA,
};
pub use io::{
    read_scene, scene_heatmaps, write_scene, BodyEntry, BoundaryCurve, BoundaryFile, GarmentEntry, HeatmapEntry,
    JointsFile, SceneManifest, SemanticEntry, MANIFEST_FILE,
};
pub use recipe::{default_template, BodyRecipe, GarmentRecipe, SceneRecipe, BUNDLED_SCENES};
pub use synth::{cap_loops, scene_bounds, synth_scene, SceneBundle, SynthGarment, SynthOptions, LABEL_ORDER};
