use std::fmt;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use super::eval::evaluate;
use super::synth::SceneBundle;
use crate::error::{Error, Result};
use crate::garment::GarmentTemplate;
use crate::registration::{run_pipeline, BodyStart, FitConfig, StageStatus};

/// The full pipeline and the three single-stage ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AblationMode {
    #[serde(rename = "ours")]
    Ours,
    #[serde(rename = "wo_init")]
    WithoutInit,
    #[serde(rename = "wo_bound")]
    WithoutBound,
    #[serde(rename = "wo_probe")]
    WithoutProbe,
}

impl AblationMode {
    pub const ALL: [AblationMode; 4] = [
        AblationMode::Ours,
        AblationMode::WithoutInit,
        AblationMode::WithoutBound,
        AblationMode::WithoutProbe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AblationMode::Ours => "ours",
            AblationMode::WithoutInit => "wo_init",
            AblationMode::WithoutBound => "wo_bound",
            AblationMode::WithoutProbe => "wo_probe",
        }
    }

    /// `cfg` with this mode's stage switched off.
    pub fn apply(self, cfg: &FitConfig) -> FitConfig {
        let mut c = cfg.clone();
        match self {
            AblationMode::Ours => {}
            AblationMode::WithoutInit => c.stages.init = false,
            AblationMode::WithoutBound => c.stages.boundary = false,
            AblationMode::WithoutProbe => c.stages.probe = false,
        }
        c
    }
}

impl fmt::Display for AblationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AblationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown ablation mode `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub scene: String,
    pub mode: AblationMode,
    /// `None` when the run failed.
    pub chamfer: Option<f64>,
    /// Final stage status, or the error that stopped the run.
    pub status: String,
}

/// Settings shared by every cell of the suite.
#[derive(Debug, Clone)]
pub struct AblationSettings {
    pub cfg: FitConfig,
    pub start: BodyStart,
    pub samples: usize,
    pub seed: u64,
}

fn run_cell(
    scene: &SceneBundle,
    template: &GarmentTemplate,
    mode: AblationMode,
    settings: &AblationSettings,
) -> Result<(f64, String)> {
    let gt = scene.gt_garment(template.semantic()).ok_or_else(|| {
        Error::InvalidScene(format!("scene `{}` has no `{}` garment", scene.name, template.semantic()))
    })?;
    let (mesh, report) = run_pipeline(scene, template, &mode.apply(&settings.cfg), &settings.start)?;
    let metrics = evaluate(&mesh, gt, settings.samples, settings.seed, None)?;
    let status = if report.failed() {
        StageStatus::Failed
    } else if report.converged() {
        StageStatus::Converged
    } else {
        StageStatus::MaxIterations
    };
    let status = serde_json::to_value(status).expect("serializes").as_str().unwrap_or_default().to_string();
    Ok((metrics.chamfer, status))
}

/// Runs every scene under all four modes. A failing cell is recorded and
/// the suite moves on.
pub fn ablation_suite(
    scenes: &[(&SceneBundle, &GarmentTemplate)],
    settings: &AblationSettings,
    mut progress: impl FnMut(&AblationRow),
) -> Result<Vec<AblationRow>> {
    if scenes.len() < 3 {
        return Err(Error::InvalidConfig(format!("ablation needs at least 3 scenes, got {}", scenes.len())));
    }
    let mut rows = Vec::with_capacity(scenes.len() * 4);
    for (scene, template) in scenes {
        for mode in AblationMode::ALL {
            let row = match run_cell(scene, template, mode, settings) {
                Ok((cd, status)) => AblationRow {
                    scene: scene.name.clone(),
                    mode,
                    chamfer: Some(cd),
                    status,
                },
                Err(e) => {
                    warn!("{} / {mode}: {e}", scene.name);
                    AblationRow {
                        scene: scene.name.clone(),
                        mode,
                        chamfer: None,
                        status: format!("error: {e}"),
                    }
                }
            };
            progress(&row);
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Mean Chamfer per mode over the cells that succeeded.
pub fn mode_means(rows: &[AblationRow]) -> Vec<(AblationMode, Option<f64>)> {
    AblationMode::ALL
        .into_iter()
        .map(|m| {
            let v: Vec<f64> = rows.iter().filter(|r| r.mode == m).filter_map(|r| r.chamfer).collect();
            (m, (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64))
        })
        .collect()
}

/// `scene,mode,chamfer,status`, one row per cell; failed cells leave the
/// Chamfer column empty.
pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut out = String::from("scene,mode,chamfer,status\n");
    for r in rows {
        let cd = r.chamfer.map(|c| format!("{c:e}")).unwrap_or_default();
        let status = r.status.replace([',', '\n'], ";");
        out.push_str(&format!("{},{},{},{}\n", r.scene, r.mode, cd, status));
    }
    out
}
