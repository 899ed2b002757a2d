use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{PointIndex, Vec3};

/// Mean squared distance from each point of `from` to its nearest point in
/// `to`. Summation runs in input order so the result does not depend on the
/// thread count.
pub fn one_sided_mean_sq(from: &[Vec3], to: &PointIndex) -> f64 {
    let d: Vec<f64> = from
        .par_iter()
        .map(|p| to.nearest(p).expect("index is non-empty").1)
        .collect();
    d.iter().sum::<f64>() / from.len() as f64
}

/// Symmetric squared Chamfer distance: the two one-sided mean squared
/// nearest-neighbour distances, averaged.
pub fn chamfer(a: &[Vec3], b: &[Vec3]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("chamfer point set"));
    }
    let (ia, ib) = (PointIndex::new(a), PointIndex::new(b));
    Ok(0.5 * (one_sided_mean_sq(a, &ib) + one_sided_mean_sq(b, &ia)))
}
