//! Procedural ring-stack templates fitted loosely around the rest body.
//!
//! Every tube is a stack of closed rings whose vertices advance from +x
//! toward +z around an "up" axis; rings are listed bottom to top, which keeps
//! all normals pointing away from the body.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::body::{joint, rest_body_sdf, BodyRegion, SkinnedBody, GARMENT_TAU};
use super::template::{BoundaryLoop, GarmentTemplate};
use super::{BoundaryType, GarmentCategory};
use crate::error::{Error, Result};
use crate::geometry::{TriMesh, Vec3};

const WAIST_Y: f64 = 0.56;
const CROTCH_Y: f64 = 0.35;
const SHOULDER_Y: f64 = 0.785;
const NECK_ALPHA_DEG: f64 = 55.0;
const SUPPORT_DIRS: usize = 120;
const RAY_REACH: f64 = 0.4;
const RAY_STEP: f64 = 0.003;
const SLEEVE_RING_SPACING: f64 = 0.025;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemplateParams {
    /// Vertices per ring (a multiple of 4 for pants).
    pub around: usize,
    /// Rings along the main tube (per leg for pants).
    pub rings: usize,
    /// Clearance added to the body hull.
    pub ease: f64,
    /// Hem (or pant cuff) height; `None` picks the category default.
    pub hem_height: Option<f64>,
    /// Extra skirt radius at the hem.
    pub flare: f64,
    /// Sleeve end as a fraction of the shoulder-wrist distance.
    pub sleeve_length: f64,
    /// Outward normal displacement amplitude of the fold pattern.
    pub wrinkle_amplitude: f64,
    pub wrinkle_phase: f64,
}

impl Default for TemplateParams {
    fn default() -> Self {
        Self {
            around: 48,
            rings: 16,
            ease: 0.015,
            hem_height: None,
            flare: 0.04,
            sleeve_length: 0.95,
            wrinkle_amplitude: 0.0,
            wrinkle_phase: 0.0,
        }
    }
}

impl TemplateParams {
    fn validate(&self, category: GarmentCategory) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("template params: {m}")));
        if self.around < 8 {
            return bad("around must be at least 8");
        }
        if category == GarmentCategory::LongPants && self.around % 4 != 0 {
            return bad("around must be a multiple of 4 for pants");
        }
        if self.rings < 3 {
            return bad("rings must be at least 3");
        }
        if !(self.ease > 0.0 && self.ease < 0.1) {
            return bad("ease must lie in (0, 0.1)");
        }
        if !(self.flare >= 0.0 && self.flare < 0.3) {
            return bad("flare must lie in [0, 0.3)");
        }
        if !(self.sleeve_length > 0.3 && self.sleeve_length <= 1.0) {
            return bad("sleeve_length must lie in (0.3, 1]");
        }
        if !(self.wrinkle_amplitude >= 0.0 && self.wrinkle_amplitude < 0.05) || !self.wrinkle_phase.is_finite() {
            return bad("wrinkle amplitude must lie in [0, 0.05)");
        }
        Ok(())
    }

    fn hem(&self, default: f64, lo: f64, hi: f64) -> Result<f64> {
        let h = self.hem_height.unwrap_or(default);
        if (lo..=hi).contains(&h) {
            Ok(h)
        } else {
            Err(Error::InvalidConfig(format!("hem_height {h} outside [{lo}, {hi}]")))
        }
    }
}

/// Builds a template for one of the procedurally supported categories,
/// bound to the standard body.
pub fn procedural_template(category: GarmentCategory, params: &TemplateParams) -> Result<GarmentTemplate> {
    if !GarmentCategory::PROCEDURAL.contains(&category) {
        return Err(Error::UnsupportedCategory {
            category: category.name().to_string(),
            supported: GarmentCategory::PROCEDURAL.iter().map(|c| c.name()).collect::<Vec<_>>().join(", "),
        });
    }
    params.validate(category)?;
    let b = match category {
        GarmentCategory::Skirt => skirt(params)?,
        GarmentCategory::NoSleeveUpper => top(params, false)?,
        GarmentCategory::LongSleeveUpper => top(params, true)?,
        GarmentCategory::LongPants => pants(params)?,
        _ => unreachable!("checked against the procedural set"),
    };
    let (mut mesh, boundaries) = b.finish()?;
    if params.wrinkle_amplitude > 0.0 {
        mesh = wrinkle(&mesh, params.wrinkle_amplitude, params.wrinkle_phase);
    }
    let weights = SkinnedBody::standard().compute_weights(mesh.vertices(), GARMENT_TAU);
    GarmentTemplate::new(category, category.semantic(), mesh, boundaries, weights)
}

#[derive(Default)]
struct Builder {
    verts: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    loops: Vec<BoundaryLoop>,
}

impl Builder {
    fn ring(&mut self, pts: &[Vec3]) -> Vec<usize> {
        let start = self.verts.len();
        self.verts.extend_from_slice(pts);
        (start..self.verts.len()).collect()
    }

    /// Quad strip between two aligned closed rings, `hi` above `lo`.
    fn strip(&mut self, lo: &[usize], hi: &[usize], skip: impl Fn(usize) -> bool) {
        assert_eq!(lo.len(), hi.len());
        let n = lo.len();
        for i in 0..n {
            if skip(i) {
                continue;
            }
            let (a, b, c, d) = (lo[i], lo[(i + 1) % n], hi[(i + 1) % n], hi[i]);
            self.faces.push([a, c, b]);
            self.faces.push([a, d, c]);
        }
    }

    fn add_loop(&mut self, kind: BoundaryType, vertices: Vec<usize>) {
        self.loops.push(BoundaryLoop { kind, vertices });
    }

    /// Drops unreferenced vertices and checks the mesh.
    fn finish(self) -> Result<(TriMesh, Vec<BoundaryLoop>)> {
        let mut used = vec![false; self.verts.len()];
        for f in &self.faces {
            for &v in f {
                used[v] = true;
            }
        }
        let mut map = vec![usize::MAX; self.verts.len()];
        let mut verts = Vec::new();
        for (i, v) in self.verts.iter().enumerate() {
            if used[i] {
                map[i] = verts.len();
                verts.push(*v);
            }
        }
        let faces = self.faces.iter().map(|f| f.map(|v| map[v])).collect();
        let mut loops = self.loops;
        for l in &mut loops {
            for v in &mut l.vertices {
                if map[*v] == usize::MAX {
                    return Err(Error::InvalidTemplate("boundary vertex lost during assembly".into()));
                }
                *v = map[*v];
            }
        }
        Ok((TriMesh::new(verts, faces)?, loops))
    }
}

/// Outward fold pattern; displacement is never toward the body.
fn wrinkle(mesh: &TriMesh, amplitude: f64, phase: f64) -> TriMesh {
    let verts = mesh
        .vertices()
        .iter()
        .zip(mesh.vertex_normals())
        .map(|(v, n)| {
            let around = v.z.atan2(v.x);
            let w = 0.5
                + 0.25 * (41.0 * v.y + 5.0 * around + phase).sin()
                + 0.25 * (23.0 * v.x - 19.0 * v.y + 29.0 * v.z + 2.0 * phase).sin();
            v + n * (amplitude * w)
        })
        .collect();
    mesh.with_vertices(verts)
}

fn ring_angles(n: usize) -> Vec<f64> {
    (0..n).map(|i| TAU * i as f64 / n as f64).collect()
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

/// Distance along `dir` from `origin` just past the last entry into the
/// body (the outermost crossing), if any.
fn outermost_crossing(sdf: &dyn Fn(&Vec3) -> f64, origin: &Vec3, dir: &Vec3) -> Option<f64> {
    let mut r = RAY_REACH;
    while r >= 0.0 {
        if sdf(&(origin + dir * r)) <= 0.0 {
            let (mut lo, mut hi) = (r, r + RAY_STEP);
            for _ in 0..30 {
                let mid = 0.5 * (lo + hi);
                if sdf(&(origin + dir * mid)) <= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Some(hi);
        }
        r -= RAY_STEP;
    }
    None
}

/// Orthonormal frame of a ring plane. Angles run from `e1` toward `e2`;
/// `e2 = e1 × up` keeps the bottom-to-top strip orientation outward.
#[derive(Clone, Copy)]
struct Frame {
    e1: Vec3,
    e2: Vec3,
}

impl Frame {
    const VERTICAL: Frame = Frame {
        e1: Vec3::new(1.0, 0.0, 0.0),
        e2: Vec3::new(0.0, 0.0, 1.0),
    };

    fn around(up: &Vec3) -> Frame {
        let up = up.normalize();
        let helper = if up.z.abs() < 0.9 { Vec3::z() } else { Vec3::x() };
        let e1 = (helper - up * helper.dot(&up)).normalize();
        Frame { e1, e2: e1.cross(&up) }
    }

    fn dir(&self, angle: f64) -> Vec3 {
        self.e1 * angle.cos() + self.e2 * angle.sin()
    }

    fn angle_of(&self, d: &Vec3) -> f64 {
        d.dot(&self.e2).atan2(d.dot(&self.e1))
    }
}

/// Ring around `center` at the given angles, each vertex placed on the
/// supporting line of the body slice in that direction plus `ease`. The
/// support function makes the ring enclose the slice's convex hull even when
/// the slice is disconnected.
fn support_ring(
    sdf: &dyn Fn(&Vec3) -> f64,
    center: &Vec3,
    frame: Frame,
    angles: &[f64],
    extra: impl Fn(f64) -> f64,
) -> Result<Vec<Vec3>> {
    let hull: Vec<(f64, f64)> = (0..SUPPORT_DIRS)
        .filter_map(|k| {
            let phi = TAU * k as f64 / SUPPORT_DIRS as f64;
            outermost_crossing(sdf, center, &frame.dir(phi)).map(|r| (phi, r))
        })
        .collect();
    if hull.is_empty() {
        return Err(Error::InvalidTemplate(format!(
            "body slice at {:?} is empty; garment extends past the body",
            center.as_slice()
        )));
    }
    Ok(angles
        .iter()
        .map(|&theta| {
            let h = hull.iter().map(|&(phi, r)| r * (phi - theta).cos()).fold(0.0, f64::max);
            center + frame.dir(theta) * (h + extra(theta))
        })
        .collect())
}

fn support_rings(
    region: BodyRegion,
    centers: &[(Vec3, f64)],
    frame: Frame,
    angles: &[f64],
    ease: f64,
) -> Result<Vec<Vec<Vec3>>> {
    let sdf = rest_body_sdf(region);
    centers
        .par_iter()
        .map(|(c, extra)| support_ring(&sdf, c, frame, angles, |_| ease + extra))
        .collect()
}

fn skirt(p: &TemplateParams) -> Result<Builder> {
    let hem = p.hem(0.33, 0.15, WAIST_Y - 0.08)?;
    let angles = ring_angles(p.around);
    let centers: Vec<(Vec3, f64)> = (0..p.rings)
        .map(|k| {
            let t = k as f64 / (p.rings - 1) as f64;
            let flare = p.flare * (1.0 - t).powf(1.5);
            (Vec3::new(0.0, lerp(hem, WAIST_Y, t), 0.0), flare)
        })
        .collect();
    let rings = support_rings(BodyRegion::NoArms, &centers, Frame::VERTICAL, &angles, p.ease)?;
    let mut b = Builder::default();
    let ids: Vec<Vec<usize>> = rings.iter().map(|r| b.ring(r)).collect();
    for w in ids.windows(2) {
        b.strip(&w[0], &w[1], |_| false);
    }
    b.add_loop(BoundaryType::SkirtHem, ids[0].clone());
    b.add_loop(BoundaryType::Waistline, ids[ids.len() - 1].clone());
    Ok(b)
}

/// Axis-aligned window in (ring, around-offset) index space.
struct Window {
    r0: usize,
    r1: usize,
    /// Offsets relative to the side's central angle index, may be negative.
    i0: isize,
    i1: isize,
    center: isize,
}

impl Window {
    fn wrap(&self, i: isize, n: usize) -> usize {
        (self.center + i).rem_euclid(n as isize) as usize
    }

    fn contains_quad(&self, r: usize, i: usize, n: usize) -> bool {
        if r < self.r0 || r >= self.r1 {
            return false;
        }
        let off = (i as isize - self.center).rem_euclid(n as isize);
        let off = if off > n as isize / 2 { off - n as isize } else { off };
        off >= self.i0 && off < self.i1
    }

    /// The hole's boundary cycle as vertex ids of `rings`.
    fn cycle(&self, rings: &[Vec<usize>], n: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for i in self.i0..self.i1 {
            out.push(rings[self.r0][self.wrap(i, n)]);
        }
        for r in self.r0..self.r1 {
            out.push(rings[r][self.wrap(self.i1, n)]);
        }
        for i in (self.i0 + 1..=self.i1).rev() {
            out.push(rings[self.r1][self.wrap(i, n)]);
        }
        for r in (self.r0 + 1..=self.r1).rev() {
            out.push(rings[r][self.wrap(self.i0, n)]);
        }
        out
    }
}

fn top(p: &TemplateParams, sleeves: bool) -> Result<Builder> {
    let hem = p.hem(0.53, 0.3, 0.68)?;
    let n = p.around;
    let angles = ring_angles(n);
    let cyl = (p.rings * 3 / 5).max(2);
    let yoke = p.rings - cyl;
    if yoke < 2 {
        return Err(Error::InvalidConfig("template params: upper garments need at least 5 rings".into()));
    }
    let centers: Vec<(Vec3, f64)> = (0..cyl)
        .map(|k| (Vec3::new(0.0, lerp(hem, SHOULDER_Y, k as f64 / (cyl - 1) as f64), 0.0), 0.0))
        .collect();
    let mut pts = support_rings(BodyRegion::NoArms, &centers, Frame::VERTICAL, &angles, p.ease)?;

    // Yoke: rays from the shoulder-line center tilting up toward the neck.
    let torso = rest_body_sdf(BodyRegion::NoArms);
    let c = Vec3::new(0.0, SHOULDER_Y, 0.0);
    let top_ring = pts[cyl - 1].clone();
    for k in 1..=yoke {
        let alpha = NECK_ALPHA_DEG.to_radians() * k as f64 / yoke as f64;
        let prev = pts.last().expect("cylinder rings exist").clone();
        let ring: Vec<Vec3> = angles
            .par_iter()
            .enumerate()
            .map(|(i, &theta)| {
                let dir = Frame::VERTICAL.dir(theta) * alpha.cos() + Vec3::y() * alpha.sin();
                match outermost_crossing(&torso, &c, &dir) {
                    Some(r) => c + dir * (r + p.ease),
                    None => c + dir * (prev[i] - c).norm().min((top_ring[i] - c).norm()),
                }
            })
            .collect();
        pts.push(ring);
    }

    let mut b = Builder::default();
    let ids: Vec<Vec<usize>> = pts.iter().map(|r| b.ring(r)).collect();
    let windows = [armhole_window(&pts, 1.0, p.ease)?, armhole_window(&pts, -1.0, p.ease)?];
    for r in 0..ids.len() - 1 {
        b.strip(&ids[r], &ids[r + 1], |i| windows.iter().any(|w| w.contains_quad(r, i, n)));
    }
    b.add_loop(BoundaryType::Hemline, ids[0].clone());
    b.add_loop(BoundaryType::Neckline, ids[ids.len() - 1].clone());
    for (w, side) in windows.iter().zip([1.0, -1.0]) {
        let hole = w.cycle(&ids, n);
        if sleeves {
            sleeve(&mut b, &hole, side, p)?;
        } else {
            b.add_loop(BoundaryType::Armhole, hole);
        }
    }
    Ok(b)
}

/// The smallest index rectangle whose interior holds every shell vertex
/// that the arm on `side` would poke through.
fn armhole_window(rings: &[Vec<Vec3>], side: f64, ease: f64) -> Result<Window> {
    let arm = rest_body_sdf(BodyRegion::Arm(side as i8));
    let n = rings[0].len();
    let center = if side > 0.0 { 0 } else { n as isize / 2 };
    let mut bounds: Option<(usize, usize, isize, isize)> = None;
    for (r, ring) in rings.iter().enumerate() {
        for (i, v) in ring.iter().enumerate() {
            if arm(v) >= ease {
                continue;
            }
            let off = (i as isize - center).rem_euclid(n as isize);
            let off = if off > n as isize / 2 { off - n as isize } else { off };
            bounds = Some(match bounds {
                None => (r, r, off, off),
                Some((a, b, c, d)) => (a.min(r), b.max(r), c.min(off), d.max(off)),
            });
        }
    }
    let (ra, rb, ia, ib) =
        bounds.ok_or_else(|| Error::InvalidTemplate("no arm crosses the upper-garment shell".into()))?;
    let w = Window {
        r0: ra.saturating_sub(1),
        r1: rb + 1,
        i0: ia - 1,
        i1: ib + 1,
        center,
    };
    if w.r0 == 0 || w.r1 + 1 >= rings.len() || (w.i1 - w.i0) as usize >= n / 2 {
        return Err(Error::InvalidTemplate(
            "armhole window reaches the hem or neckline; adjust hem height or ring count".into(),
        ));
    }
    Ok(w)
}

/// Extrudes a sleeve from an armhole cycle down the arm on `side`.
fn sleeve(b: &mut Builder, hole: &[usize], side: f64, p: &TemplateParams) -> Result<()> {
    let body = SkinnedBody::standard();
    let j = body.rest_joints();
    let (s, w) = if side > 0.0 {
        (j[joint::L_SHOULDER], j[joint::L_WRIST])
    } else {
        (j[joint::R_SHOULDER], j[joint::R_WRIST])
    };
    let axis = (w - s).normalize();
    let frame = Frame::around(&-axis);
    let mut hole = hole.to_vec();
    let mut phis: Vec<f64> = hole.iter().map(|&v| frame.angle_of(&(b.verts[v] - s))).collect();
    // Orient the cycle so its angle about the arm increases.
    let winding: f64 = (0..phis.len())
        .map(|k| {
            let d = phis[(k + 1) % phis.len()] - phis[k];
            (d + PI).rem_euclid(TAU) - PI
        })
        .sum();
    if winding.abs() < PI {
        return Err(Error::InvalidTemplate("armhole does not encircle the arm".into()));
    }
    if winding < 0.0 {
        hole.reverse();
        phis.reverse();
    }
    let t0 = hole.iter().map(|&v| (b.verts[v] - s).dot(&axis)).fold(f64::MIN, f64::max) + 0.02;
    let t1 = p.sleeve_length * (w - s).norm();
    if t1 <= t0 + SLEEVE_RING_SPACING {
        return Err(Error::InvalidConfig("template params: sleeve too short to extrude".into()));
    }
    let count = (((t1 - t0) / SLEEVE_RING_SPACING).ceil() as usize).max(2);
    // Cuff first, then toward the shoulder.
    let centers: Vec<(Vec3, f64)> = (0..count)
        .map(|k| (s + axis * lerp(t1, t0, k as f64 / (count - 1) as f64), 0.0))
        .collect();
    // Uniform angles along the sleeve; only the band meeting the armhole
    // follows the cycle's uneven spacing.
    let m = hole.len();
    let angles: Vec<f64> = (0..m).map(|k| phis[0] + TAU * k as f64 / m as f64).collect();
    let region = BodyRegion::Arm(side as i8);
    let rings = support_rings(region, &centers, frame, &angles, p.ease)?;
    let mut ids: Vec<Vec<usize>> = rings.iter().map(|r| b.ring(r)).collect();
    ids.push(hole);
    for k in 0..ids.len() - 1 {
        let (lo, hi) = (ids[k].clone(), ids[k + 1].clone());
        b.strip(&lo, &hi, |_| false);
    }
    b.add_loop(BoundaryType::SleeveCuff, ids[0].clone());
    Ok(())
}

fn leg_center(y: f64, side: f64) -> Vec3 {
    let j = SkinnedBody::standard().rest_joints().to_owned();
    let (h, k, a) = if side > 0.0 {
        (j[joint::L_HIP], j[joint::L_KNEE], j[joint::L_ANKLE])
    } else {
        (j[joint::R_HIP], j[joint::R_KNEE], j[joint::R_ANKLE])
    };
    let on = |p: Vec3, q: Vec3| {
        let t = ((y - p.y) / (q.y - p.y)).clamp(0.0, 1.0);
        Vec3::new(lerp(p.x, q.x, t), y, lerp(p.z, q.z, t))
    };
    if y >= k.y {
        on(h, k)
    } else {
        on(k, a)
    }
}

fn pants(p: &TemplateParams) -> Result<Builder> {
    let cuff = p.hem(0.10, 0.08, CROTCH_Y - 0.1)?;
    let n = p.around;
    let angles = ring_angles(n);
    let hip_rings = (p.rings / 3).max(3);
    let centers: Vec<(Vec3, f64)> = (0..hip_rings)
        .map(|k| (Vec3::new(0.0, lerp(CROTCH_Y, WAIST_Y, k as f64 / (hip_rings - 1) as f64), 0.0), 0.0))
        .collect();
    let pts = support_rings(BodyRegion::NoArms, &centers, Frame::VERTICAL, &angles, p.ease)?;
    let mut b = Builder::default();
    let hip: Vec<Vec<usize>> = pts.iter().map(|r| b.ring(r)).collect();
    for w in hip.windows(2) {
        b.strip(&w[0], &w[1], |_| false);
    }
    b.add_loop(BoundaryType::Waistline, hip[hip_rings - 1].clone());

    // Crotch seam from the front-center vertex to the back-center vertex.
    let crotch = &hip[0];
    let (front, back) = (crotch[n / 4], crotch[3 * n / 4]);
    let (zf, zb) = (b.verts[front].z, b.verts[back].z);
    let seam_pts: Vec<Vec3> = (1..n / 2)
        .map(|k| Vec3::new(0.0, CROTCH_Y, lerp(zf, zb, k as f64 / (n / 2) as f64)))
        .collect();
    let seam = b.ring(&seam_pts);

    for side in [1.0, -1.0] {
        let top: Vec<usize> = if side > 0.0 {
            (3 * n / 4..n).chain(0..=n / 4).map(|i| crotch[i]).chain(seam.iter().copied()).collect()
        } else {
            (n / 4..=3 * n / 4).map(|i| crotch[i]).chain(seam.iter().rev().copied()).collect()
        };
        let c0 = leg_center(CROTCH_Y, side);
        let mut phis: Vec<f64> = top.iter().map(|&v| Frame::VERTICAL.angle_of(&(b.verts[v] - c0))).collect();
        for k in 1..phis.len() {
            while phis[k] < phis[k - 1] {
                phis[k] += TAU;
            }
        }
        let step = (CROTCH_Y - cuff) / p.rings as f64;
        let centers: Vec<(Vec3, f64)> = (0..p.rings).map(|k| (leg_center(cuff + step * k as f64, side), 0.0)).collect();
        let rings = support_rings(BodyRegion::Leg(side as i8), &centers, Frame::VERTICAL, &phis, p.ease)?;
        let mut ids: Vec<Vec<usize>> = rings.iter().map(|r| b.ring(r)).collect();
        ids.push(top);
        for k in 0..ids.len() - 1 {
            let (lo, hi) = (ids[k].clone(), ids[k + 1].clone());
            b.strip(&lo, &hi, |_| false);
        }
        b.add_loop(BoundaryType::PantCuff, ids[0].clone());
    }
    Ok(b)
}

/// Directed-edge multiplicities; a consistently oriented manifold has none
/// above one.
#[cfg(test)]
pub(crate) fn directed_edge_counts(mesh: &TriMesh) -> std::collections::HashMap<(usize, usize), usize> {
    let mut out = std::collections::HashMap::new();
    for f in mesh.faces() {
        for k in 0..3 {
            *out.entry((f[k], f[(k + 1) % 3])).or_insert(0) += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;
    use crate::garment::{Pose, Shape};
    use crate::geometry::Aabb;

    fn check_template(t: &GarmentTemplate, ease: f64) {
        let m = t.mesh();
        // Only declared loops are open.
        let loop_edges: HashSet<[usize; 2]> = t
            .boundaries()
            .iter()
            .flat_map(|l| {
                let n = l.vertices.len();
                (0..n).map(move |k| {
                    let (a, b) = (l.vertices[k], l.vertices[(k + 1) % n]);
                    [a.min(b), a.max(b)]
                })
            })
            .collect();
        let open: HashSet<[usize; 2]> = m.boundary_edges().into_iter().collect();
        assert_eq!(open, loop_edges);
        assert!(directed_edge_counts(m).values().all(|&c| c == 1), "inconsistent orientation");
        assert!(m.edge_face_counts().values().all(|&c| c <= 2), "non-manifold edge");

        let body = rest_body_sdf(BodyRegion::Full);
        let normals = m.vertex_normals();
        let mut outward = 0;
        for (v, nrm) in m.vertices().iter().zip(&normals) {
            assert!(body(v) > 0.2 * ease, "vertex {v:?} too close to the body ({})", body(v));
            let h = 1e-4;
            let g = Vec3::new(
                body(&(v + Vec3::x() * h)) - body(&(v - Vec3::x() * h)),
                body(&(v + Vec3::y() * h)) - body(&(v - Vec3::y() * h)),
                body(&(v + Vec3::z() * h)) - body(&(v - Vec3::z() * h)),
            );
            if g.dot(nrm) > 0.0 {
                outward += 1;
            }
        }
        let frac = outward as f64 / m.vertex_count() as f64;
        assert!(frac > 0.9, "only {frac} of normals point away from the body");
    }

    fn kinds(t: &GarmentTemplate) -> Vec<BoundaryType> {
        let mut k: Vec<_> = t.boundaries().iter().map(|l| l.kind).collect();
        k.sort_by_key(|b| b.code());
        k
    }

    #[test]
    fn skirt_32_by_16() {
        let p = TemplateParams {
            around: 32,
            rings: 16,
            ..TemplateParams::default()
        };
        let t = procedural_template(GarmentCategory::Skirt, &p).unwrap();
        assert_eq!(kinds(&t), vec![BoundaryType::Waistline, BoundaryType::SkirtHem]);
        assert_eq!(t.mesh().vertex_count(), 32 * 16);
        check_template(&t, p.ease);
    }

    #[test]
    fn sleeveless_top() {
        let p = TemplateParams::default();
        let t = procedural_template(GarmentCategory::NoSleeveUpper, &p).unwrap();
        assert_eq!(
            kinds(&t),
            vec![
                BoundaryType::Neckline,
                BoundaryType::Hemline,
                BoundaryType::Armhole,
                BoundaryType::Armhole
            ]
        );
        check_template(&t, p.ease);
        // Armholes sit on either side of the torso.
        let v = t.mesh().vertices();
        let xs: Vec<f64> = t
            .boundaries()
            .iter()
            .filter(|l| l.kind == BoundaryType::Armhole)
            .map(|l| l.polyline(v).centroid().x)
            .collect();
        assert!(xs[0] > 0.1 && xs[1] < -0.1, "{xs:?}");
    }

    #[test]
    fn long_sleeve_top() {
        let p = TemplateParams::default();
        let t = procedural_template(GarmentCategory::LongSleeveUpper, &p).unwrap();
        assert_eq!(
            kinds(&t),
            vec![
                BoundaryType::Neckline,
                BoundaryType::Hemline,
                BoundaryType::SleeveCuff,
                BoundaryType::SleeveCuff
            ]
        );
        check_template(&t, p.ease);
        assert_eq!(t.mesh().euler_characteristic(), 2 - 4);
    }

    #[test]
    fn long_pants() {
        let p = TemplateParams::default();
        let t = procedural_template(GarmentCategory::LongPants, &p).unwrap();
        assert_eq!(
            kinds(&t),
            vec![BoundaryType::Waistline, BoundaryType::PantCuff, BoundaryType::PantCuff]
        );
        check_template(&t, p.ease);
        assert_eq!(t.mesh().euler_characteristic(), 2 - 3);
    }

    #[test]
    fn wrinkles_keep_clearance_and_topology() {
        let p = TemplateParams {
            wrinkle_amplitude: 0.008,
            wrinkle_phase: 1.3,
            ..TemplateParams::default()
        };
        let plain = procedural_template(GarmentCategory::Skirt, &TemplateParams::default()).unwrap();
        let t = procedural_template(GarmentCategory::Skirt, &p).unwrap();
        assert_eq!(t.mesh().faces(), plain.mesh().faces());
        assert_ne!(t.mesh().vertices(), plain.mesh().vertices());
        check_template(&t, p.ease);
    }

    #[test]
    fn unsupported_category_lists_supported_set() {
        let err = procedural_template(GarmentCategory::ShortPants, &TemplateParams::default()).unwrap_err();
        let msg = err.to_string();
        for c in GarmentCategory::PROCEDURAL {
            assert!(msg.contains(c.name()), "{msg}");
        }
    }

    #[test]
    fn pants_need_multiple_of_four() {
        let p = TemplateParams {
            around: 30,
            ..TemplateParams::default()
        };
        assert!(procedural_template(GarmentCategory::LongPants, &p).is_err());
    }

    #[test]
    fn raised_arm_carries_the_cuff() {
        let t = procedural_template(GarmentCategory::LongSleeveUpper, &TemplateParams::default()).unwrap();
        let body = SkinnedBody::standard();
        let mut pose = Pose::default();
        // Raise the left arm about the shoulder.
        pose.rotations[joint::L_SHOULDER] = Vec3::new(0.0, 0.0, 1.2);
        let m = t.deform(&body, &pose, &Shape::default());
        let (_, joints) = body.skin_pose(&pose, &Shape::default());
        let cuff = t
            .boundaries()
            .iter()
            .filter(|l| l.kind == BoundaryType::SleeveCuff)
            .map(|l| l.polyline(m.vertices()).centroid())
            .max_by(|a, b| a.x.total_cmp(&b.x))
            .unwrap();
        let rest_gap = {
            let c = t
                .boundaries()
                .iter()
                .filter(|l| l.kind == BoundaryType::SleeveCuff)
                .map(|l| l.polyline(t.mesh().vertices()).centroid())
                .max_by(|a, b| a.x.total_cmp(&b.x))
                .unwrap();
            (c - body.rest_joints()[joint::L_WRIST]).norm()
        };
        let gap = (cuff - joints[joint::L_WRIST]).norm();
        assert!(gap < rest_gap + 0.02, "cuff {gap} from wrist (rest {rest_gap})");
        assert!(joints[joint::L_WRIST].y > body.rest_joints()[joint::L_WRIST].y + 0.1);
    }

    #[test]
    fn templates_stay_in_body_bounds() {
        let t = procedural_template(GarmentCategory::LongPants, &TemplateParams::default()).unwrap();
        let b = t.mesh().bounds();
        let body = SkinnedBody::standard().rest_mesh().bounds();
        let loose = Aabb::new(body.min - Vec3::repeat(0.1), body.max + Vec3::repeat(0.1));
        assert!(loose.contains(&b.min) && loose.contains(&b.max));
    }
}
