use serde::{Deserialize, Serialize};

use crate::garment::{Pose, Shape, WeakPerspectiveCamera};
use crate::geometry::TriMesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Init,
    Boundary,
    Shape,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Skipped,
    Converged,
    MaxIterations,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: Stage,
    pub status: StageStatus,
    pub iterations: usize,
    /// Loss at iteration 0 followed by the loss of every accepted iterate.
    /// The boundary stage concatenates its per-loop traces.
    pub losses: Vec<f64>,
    pub seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl StageReport {
    pub fn skipped(stage: Stage) -> Self {
        Self {
            stage,
            status: StageStatus::Skipped,
            iterations: 0,
            losses: Vec::new(),
            seconds: 0.0,
            message: None,
        }
    }
}

/// Recovered body and camera parameters from the initialization stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodyFit {
    pub pose: Pose,
    pub shape: Shape,
    pub camera: WeakPerspectiveCamera,
    /// Mean squared 2D joint residual over visible joints.
    pub joint_mse: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub stages: Vec<StageReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<BodyFit>,
    /// Filled in by callers that have ground truth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chamfer: Option<f64>,
    #[serde(skip)]
    pub posed: Option<TriMesh>,
    #[serde(skip)]
    pub boundary_aligned: Option<TriMesh>,
    #[serde(skip)]
    pub fitted: Option<TriMesh>,
}

impl FitReport {
    pub fn stage(&self, stage: Stage) -> Option<&StageReport> {
        self.stages.iter().find(|s| s.stage == stage)
    }

    /// True when no stage failed or ran out of iterations.
    pub fn converged(&self) -> bool {
        self.stages
            .iter()
            .all(|s| matches!(s.status, StageStatus::Skipped | StageStatus::Converged))
    }

    pub fn failed(&self) -> bool {
        self.stages.iter().any(|s| s.status == StageStatus::Failed)
    }
}
