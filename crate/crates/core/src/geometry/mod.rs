//! Mesh, curve and sparse linear-algebra primitives shared by the rest of
//! the crate.

mod bvh;
mod kdtree;
mod mesh;
pub mod obj;
mod polyline;
pub mod primitives;
mod sparse;

pub use bvh::{ClosestHit, DistanceAccelerator};
pub use kdtree::PointIndex;
pub use mesh::{Aabb, TriMesh};
pub(crate) use mesh::is_degenerate;
pub use polyline::{point_segment_closest, point_to_polyline_distance, Polyline3};
pub use sparse::{graph_laplacian, solve_constrained_bilaplacian, BiharmonicSolver, SparseOperator};

/// Scene-space vector. Scenes are normalized so a standing body is about one
/// unit tall.
pub type Vec3 = nalgebra::Vector3<f64>;

/// Closest point to `p` on triangle `(a, b, c)`.
///
/// Region-based evaluation (Ericson, Real-Time Collision Detection 5.1.5).
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}
