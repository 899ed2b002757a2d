//! Garment templates, the skinned body and procedural template generation.

pub mod body;
mod camera;
mod collar;
mod procedural;
mod template;
mod types;

pub use body::{
    joint, rest_body_sdf, BodyRegion, Pose, Rig, Shape, SkinnedBody, SparseWeights, GARMENT_TAU, JOINT_COUNT,
    JOINT_NAMES, JOINT_PARENTS,
};
pub use collar::{attach_collar, fit_collar, rigid_fit, Collar, CollarStyle};
pub use camera::{Vec2, WeakPerspectiveCamera};
pub use procedural::{procedural_template, TemplateParams};
pub use template::{BoundaryLoop, GarmentTemplate};
pub use types::{BoundaryType, GarmentCategory, SemanticLabel};
