use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

pub type Vec2 = Vector2<f64>;

/// Orthographic projection with uniform scale: `pi(X) = s * (X.x, X.y) + t`,
/// in normalized image units (the image spans [-1, 1] on both axes, y up).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakPerspectiveCamera {
    pub s: f64,
    pub t: [f64; 2],
}

impl Default for WeakPerspectiveCamera {
    /// Frames a unit-height body standing on y = 0.
    fn default() -> Self {
        Self { s: 1.6, t: [0.0, -0.8] }
    }
}

impl WeakPerspectiveCamera {
    pub fn new(s: f64, t: [f64; 2]) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidConfig(format!("camera scale must be positive, got {s}")));
        }
        Ok(Self { s, t })
    }

    pub fn project(&self, p: &Vec3) -> Vec2 {
        Vec2::new(self.s * p.x + self.t[0], self.s * p.y + self.t[1])
    }

    /// Normalized image coordinates to pixel coordinates of a `width` by
    /// `height` image; pixel centers sit at integer coordinates and rows
    /// grow downward.
    pub fn to_pixel(uv: &Vec2, width: usize, height: usize) -> Vec2 {
        Vec2::new(
            (uv.x + 1.0) * 0.5 * width as f64 - 0.5,
            (1.0 - uv.y) * 0.5 * height as f64 - 0.5,
        )
    }

    pub fn project_pixel(&self, p: &Vec3, width: usize, height: usize) -> Vec2 {
        Self::to_pixel(&self.project(p), width, height)
    }
}
