//! Registration of explicit garment templates to implicit target fields.

pub mod error;
pub mod garment;
pub mod fields;
pub mod geometry;
pub mod registration;
pub mod scene;

pub use error::{Error, Result};
pub use geometry::{TriMesh, Vec3};
