//! The explicit fitting pipeline: body initialization, boundary fitting
//! with bi-harmonic propagation, and probe-driven shape fitting.

mod boundary;
mod chamfer;
mod config;
mod descent;
mod init;
mod pipeline;
mod probe;
mod report;
mod shape;

pub use boundary::{
    boundary_loss, boundary_loss_grad, field_for, fit_boundaries, fit_loop, propagate_boundary_deformation,
    BoundaryFields, LoopFit,
};
pub use chamfer::{chamfer, one_sided_mean_sq};
pub use config::{FitConfig, StageConfig, StageFlags};
pub use init::{fit_body_init, Joint2d};
pub use pipeline::{run_pipeline, template_boundary_fields, BodyStart};
pub use probe::{probe_active_area, ProbeMode, ProbeResult};
pub use report::{BodyFit, FitReport, Stage, StageReport, StageStatus};
pub use shape::{shape_fit, ShapeInputs, ShapeTerms};
