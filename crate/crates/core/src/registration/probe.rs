use rayon::prelude::*;

use super::config::FitConfig;
use crate::fields::{ScalarField, SemanticFieldSet};
use crate::garment::SemanticLabel;
use crate::geometry::Vec3;

/// How probe targets are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeMode {
    /// Nearest iso-crossing along the normal line, kept only when its
    /// semantic label matches the garment.
    Gated,
    /// Every vertex is attracted to the nearest crossing regardless of
    /// label, or to the sample closest to the iso level when there is none.
    Nearest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    pub active: Vec<bool>,
    /// Target per vertex; `Some` exactly when the vertex is active.
    pub targets: Vec<Option<Vec3>>,
    /// `|X_i - X_i^bst|` for active vertices, 0 otherwise.
    pub distances: Vec<f64>,
}

impl ProbeResult {
    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }
}

/// Samples `2k + 1` points on the line through each vertex along its
/// normal and locates iso-crossings of the target by linear interpolation
/// between bracketing samples.
pub fn probe_active_area(
    vertices: &[Vec3],
    normals: &[Vec3],
    target: &dyn ScalarField,
    semantics: Option<(&SemanticFieldSet, SemanticLabel)>,
    mode: ProbeMode,
    cfg: &FitConfig,
) -> ProbeResult {
    assert_eq!(vertices.len(), normals.len());
    let k = cfg.probe_count as isize;
    let h = cfg.probe_extent / cfg.probe_count as f64;
    let conv = target.convention().with_iso(cfg.iso);
    let per_vertex: Vec<Option<Vec3>> = vertices
        .par_iter()
        .zip(normals)
        .map(|(x, n)| {
            let samples: Vec<(f64, f64)> = (-k..=k)
                .map(|j| {
                    let t = j as f64 * h;
                    (t, conv.signed_offset(target.eval(&(x + n * t))))
                })
                .collect();
            let mut best: Option<f64> = None;
            for w in samples.windows(2) {
                let ((t0, v0), (t1, v1)) = (w[0], w[1]);
                if (v0 < 0.0) == (v1 < 0.0) {
                    continue;
                }
                let t = t0 + (t1 - t0) * v0 / (v0 - v1);
                if best.map_or(true, |b| t.abs() < b.abs()) {
                    best = Some(t);
                }
            }
            match (best, mode) {
                (Some(t), ProbeMode::Gated) => {
                    let p = x + n * t;
                    match semantics {
                        Some((set, label)) if set.argmax(&p) != label => None,
                        _ => Some(p),
                    }
                }
                (Some(t), ProbeMode::Nearest) => Some(x + n * t),
                (None, ProbeMode::Gated) => None,
                (None, ProbeMode::Nearest) => {
                    let (t, _) = samples
                        .iter()
                        .copied()
                        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(a.0.abs().total_cmp(&b.0.abs())))
                        .expect("at least three samples");
                    Some(x + n * t)
                }
            }
        })
        .collect();
    let active = per_vertex.iter().map(Option::is_some).collect();
    let distances = vertices
        .iter()
        .zip(&per_vertex)
        .map(|(x, t)| t.map_or(0.0, |t| (t - x).norm()))
        .collect();
    ProbeResult {
        active,
        targets: per_vertex,
        distances,
    }
}
