use std::sync::{Arc, OnceLock};

use nalgebra::{Matrix3, Rotation3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{marching_cubes, FieldConvention, FnField};
use crate::geometry::{point_segment_closest, Aabb, TriMesh, Vec3};

pub const JOINT_COUNT: usize = 17;

pub const JOINT_NAMES: [&str; JOINT_COUNT] = [
    "root",
    "spine1",
    "spine2",
    "neck",
    "head",
    "l_shoulder",
    "l_elbow",
    "l_wrist",
    "r_shoulder",
    "r_elbow",
    "r_wrist",
    "l_hip",
    "l_knee",
    "l_ankle",
    "r_hip",
    "r_knee",
    "r_ankle",
];

/// Parent of each joint; the root has none.
pub const JOINT_PARENTS: [Option<usize>; JOINT_COUNT] = [
    None,
    Some(0),
    Some(1),
    Some(2),
    Some(3),
    Some(2),
    Some(5),
    Some(6),
    Some(2),
    Some(8),
    Some(9),
    Some(0),
    Some(11),
    Some(12),
    Some(0),
    Some(14),
    Some(15),
];

pub mod joint {
    pub const ROOT: usize = 0;
    pub const SPINE1: usize = 1;
    pub const SPINE2: usize = 2;
    pub const NECK: usize = 3;
    pub const HEAD: usize = 4;
    pub const L_SHOULDER: usize = 5;
    pub const L_ELBOW: usize = 6;
    pub const L_WRIST: usize = 7;
    pub const R_SHOULDER: usize = 8;
    pub const R_ELBOW: usize = 9;
    pub const R_WRIST: usize = 10;
    pub const L_HIP: usize = 11;
    pub const L_KNEE: usize = 12;
    pub const L_ANKLE: usize = 13;
    pub const R_HIP: usize = 14;
    pub const R_KNEE: usize = 15;
    pub const R_ANKLE: usize = 16;
}

/// Body-skinning softness (scene units).
const BODY_TAU: f64 = 0.015;
/// Garment-binding softness; wider so loose cloth blends between bones.
pub const GARMENT_TAU: f64 = 0.03;
const MAX_INFLUENCES: usize = 4;
const SMOOTH_UNION_K: f64 = 0.02;
const REST_CELL: f64 = 0.01;

/// Arm direction in the rest A-pose: 40 degrees out from vertical.
fn arm_dir(side: f64) -> Vec3 {
    let a = 40f64.to_radians();
    Vec3::new(side * a.sin(), -a.cos(), 0.0)
}

fn rest_joints() -> [Vec3; JOINT_COUNT] {
    let mut j = [Vec3::zeros(); JOINT_COUNT];
    j[joint::ROOT] = Vec3::new(0.0, 0.52, 0.0);
    j[joint::SPINE1] = Vec3::new(0.0, 0.62, 0.0);
    j[joint::SPINE2] = Vec3::new(0.0, 0.72, 0.0);
    j[joint::NECK] = Vec3::new(0.0, 0.84, 0.0);
    j[joint::HEAD] = Vec3::new(0.0, 0.92, 0.0);
    for (side, s, e, w) in [
        (1.0, joint::L_SHOULDER, joint::L_ELBOW, joint::L_WRIST),
        (-1.0, joint::R_SHOULDER, joint::R_ELBOW, joint::R_WRIST),
    ] {
        j[s] = Vec3::new(side * 0.17, 0.785, 0.0);
        j[e] = j[s] + arm_dir(side) * 0.16;
        j[w] = j[e] + arm_dir(side) * 0.14;
    }
    for (side, h, k, a) in [
        (1.0, joint::L_HIP, joint::L_KNEE, joint::L_ANKLE),
        (-1.0, joint::R_HIP, joint::R_KNEE, joint::R_ANKLE),
    ] {
        j[h] = Vec3::new(side * 0.085, 0.50, 0.0);
        j[k] = Vec3::new(side * 0.09, 0.28, 0.0);
        j[a] = Vec3::new(side * 0.095, 0.06, 0.0);
    }
    j
}

/// A capsule, optionally flattened front-to-back.
#[derive(Debug, Clone, Copy)]
struct Part {
    a: Vec3,
    b: Vec3,
    radius: f64,
    /// Ratio of x-radius to z-radius.
    flatten: f64,
}

impl Part {
    fn sdf(&self, p: &Vec3) -> f64 {
        let q = Vec3::new(p.x, p.y, p.z * self.flatten);
        let a = Vec3::new(self.a.x, self.a.y, self.a.z * self.flatten);
        let b = Vec3::new(self.b.x, self.b.y, self.b.z * self.flatten);
        ((q - point_segment_closest(&q, &a, &b)).norm() - self.radius) / self.flatten.sqrt()
    }
}

fn smooth_min(a: f64, b: f64, k: f64) -> f64 {
    let h = (k - (a - b).abs()).max(0.0) / k;
    a.min(b) - h * h * k * 0.25
}

/// Which body parts an implicit body query includes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BodyRegion {
    Full,
    /// Torso, pelvis, shoulders and neck; no head, arms or legs.
    Torso,
    /// Torso plus thighs and shins; no head, arms or feet.
    NoArms,
    /// Thighs and shins of one side (`+1` left, `-1` right).
    Leg(i8),
    /// Upper arm, forearm and hand of one side.
    Arm(i8),
}

fn body_parts(region: BodyRegion) -> Vec<Part> {
    let j = rest_joints();
    let cap = |a: Vec3, b: Vec3, radius: f64| Part {
        a,
        b,
        radius,
        flatten: 1.0,
    };
    let mut parts = Vec::new();
    if matches!(region, BodyRegion::Full | BodyRegion::Torso | BodyRegion::NoArms) {
        parts.push(Part {
            a: Vec3::new(0.0, 0.53, 0.0),
            b: Vec3::new(0.0, 0.74, 0.0),
            radius: 0.105,
            flatten: 1.45,
        });
        parts.push(Part {
            a: Vec3::new(-0.05, 0.47, 0.0),
            b: Vec3::new(0.05, 0.47, 0.0),
            radius: 0.085,
            flatten: 1.3,
        });
        parts.push(Part {
            a: Vec3::new(-0.16, 0.785, 0.0),
            b: Vec3::new(0.16, 0.785, 0.0),
            radius: 0.05,
            flatten: 1.2,
        });
        parts.push(cap(Vec3::new(0.0, 0.76, 0.0), Vec3::new(0.0, 0.88, 0.0), 0.038));
    }
    if region == BodyRegion::Full {
        parts.push(cap(Vec3::new(0.0, 0.93, 0.005), Vec3::new(0.0, 0.94, 0.005), 0.068));
    }
    for (side, s, e, w) in [
        (1.0, joint::L_SHOULDER, joint::L_ELBOW, joint::L_WRIST),
        (-1.0, joint::R_SHOULDER, joint::R_ELBOW, joint::R_WRIST),
    ] {
        if region == BodyRegion::Full || region == BodyRegion::Arm(side as i8) {
            parts.push(cap(j[s], j[e], 0.038));
            parts.push(cap(j[e], j[w], 0.03));
            parts.push(cap(j[w], j[w] + arm_dir(side) * 0.07, 0.025));
        }
    }
    for (side, h, k, a) in [
        (1i8, joint::L_HIP, joint::L_KNEE, joint::L_ANKLE),
        (-1i8, joint::R_HIP, joint::R_KNEE, joint::R_ANKLE),
    ] {
        if matches!(region, BodyRegion::Full | BodyRegion::NoArms) || region == BodyRegion::Leg(side) {
            parts.push(cap(j[h], j[k], 0.062));
            parts.push(cap(j[k], j[a], 0.042));
        }
        if region == BodyRegion::Full {
            parts.push(cap(j[a], j[a] + Vec3::new(0.0, -0.03, 0.07), 0.028));
        }
    }
    parts
}

/// Implicit rest-pose body (negative inside), restricted to `region`.
pub fn rest_body_sdf(region: BodyRegion) -> impl Fn(&Vec3) -> f64 + Send + Sync {
    let parts = body_parts(region);
    move |p: &Vec3| {
        let mut d = f64::INFINITY;
        for part in &parts {
            let s = part.sdf(p);
            d = if d.is_infinite() { s } else { smooth_min(d, s, SMOOTH_UNION_K) };
        }
        d
    }
}

/// Bone segments per joint used to derive skinning weights.
fn bone_segments(j: &[Vec3; JOINT_COUNT]) -> Vec<Vec<(Vec3, Vec3)>> {
    let mut segs = vec![Vec::new(); JOINT_COUNT];
    segs[joint::ROOT].push((j[joint::R_HIP], j[joint::L_HIP]));
    segs[joint::ROOT].push((j[joint::ROOT], j[joint::SPINE1]));
    segs[joint::SPINE1].push((j[joint::SPINE1], j[joint::SPINE2]));
    segs[joint::SPINE2].push((j[joint::SPINE2], j[joint::NECK]));
    segs[joint::SPINE2].push((Vec3::new(-0.12, 0.785, 0.0), Vec3::new(0.12, 0.785, 0.0)));
    segs[joint::NECK].push((j[joint::NECK], j[joint::HEAD]));
    segs[joint::HEAD].push((j[joint::HEAD], j[joint::HEAD] + Vec3::new(0.0, 0.08, 0.0)));
    for (side, s, e, w) in [
        (1.0, joint::L_SHOULDER, joint::L_ELBOW, joint::L_WRIST),
        (-1.0, joint::R_SHOULDER, joint::R_ELBOW, joint::R_WRIST),
    ] {
        segs[s].push((j[s], j[e]));
        segs[e].push((j[e], j[w]));
        segs[w].push((j[w], j[w] + arm_dir(side) * 0.07));
    }
    for (h, k, a) in [
        (joint::L_HIP, joint::L_KNEE, joint::L_ANKLE),
        (joint::R_HIP, joint::R_KNEE, joint::R_ANKLE),
    ] {
        segs[h].push((j[h], j[k]));
        segs[k].push((j[k], j[a]));
        segs[a].push((j[a], j[a] + Vec3::new(0.0, -0.03, 0.07)));
    }
    segs
}

/// Sparse skinning weights: up to four `(joint, weight)` pairs per vertex,
/// summing to one.
pub type SparseWeights = Vec<Vec<(usize, f64)>>;

/// Pose: axis-angle rotation per joint (local, about the joint) and a root
/// translation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub rotations: Vec<Vec3>,
    pub translation: Vec3,
}

impl Default for Pose {
    fn default() -> Self {
        Self {
            rotations: vec![Vec3::zeros(); JOINT_COUNT],
            translation: Vec3::zeros(),
        }
    }
}

impl Pose {
    /// Sum of squared axis-angle magnitudes of all joints except the root.
    pub fn regularizer(&self) -> f64 {
        self.rotations.iter().skip(1).map(|r| r.norm_squared()).sum()
    }
}

/// Simplified body shape: per-axis scale about the root plus limb-length
/// factors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shape {
    pub scale: Vec3,
    pub upper_arm: f64,
    pub forearm: f64,
    pub thigh: f64,
    pub shin: f64,
}

impl Default for Shape {
    fn default() -> Self {
        Self {
            scale: Vec3::repeat(1.0),
            upper_arm: 1.0,
            forearm: 1.0,
            thigh: 1.0,
            shin: 1.0,
        }
    }
}

impl Shape {
    pub const MIN: f64 = 0.5;
    pub const MAX: f64 = 2.0;

    pub fn uniform(s: f64) -> Self {
        Self {
            scale: Vec3::repeat(s),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.scale.x,
            self.scale.y,
            self.scale.z,
            self.upper_arm,
            self.forearm,
            self.thigh,
            self.shin,
        ];
        if all.iter().all(|v| (Self::MIN..=Self::MAX).contains(v)) {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "shape factors must lie in [{}, {}]",
                Self::MIN,
                Self::MAX
            )))
        }
    }

    fn limb_factor(&self, j: usize) -> f64 {
        match j {
            joint::L_SHOULDER | joint::R_SHOULDER => self.upper_arm,
            joint::L_ELBOW | joint::R_ELBOW => self.forearm,
            joint::L_HIP | joint::R_HIP => self.thigh,
            joint::L_KNEE | joint::R_KNEE => self.shin,
            _ => 1.0,
        }
    }
}

/// Joint transforms for one `(pose, shape)`, applied to any bound points.
pub struct Rig {
    rest: [Vec3; JOINT_COUNT],
    bone_dir: [Vec3; JOINT_COUNT],
    limb: [f64; JOINT_COUNT],
    scale: Vec3,
    /// Shaped-rest joint displacement from rest.
    shape_delta: [Vec3; JOINT_COUNT],
    /// Posed joint displacement from shaped rest.
    pose_delta: [Vec3; JOINT_COUNT],
    /// Global rotation minus identity.
    rot_minus_i: [Matrix3<f64>; JOINT_COUNT],
}

impl Rig {
    /// Offset from joint `j` after shape scaling and limb stretching.
    fn shaped_offset(&self, j: usize, d: &Vec3) -> Vec3 {
        let along = d.dot(&self.bone_dir[j]);
        let stretched = d + self.bone_dir[j] * ((self.limb[j] - 1.0) * along);
        stretched.component_mul(&self.scale)
    }

    /// Posed joint positions.
    pub fn joints(&self) -> Vec<Vec3> {
        (0..JOINT_COUNT)
            .map(|j| self.rest[j] + self.shape_delta[j] + self.pose_delta[j])
            .collect()
    }

    /// Linear blend skinning of `points` bound with `weights`. Written in
    /// displacement form so the rest pose and identity shape reproduce the
    /// input bit for bit.
    pub fn apply(&self, points: &[Vec3], weights: &SparseWeights) -> Vec<Vec3> {
        assert_eq!(points.len(), weights.len());
        points
            .iter()
            .zip(weights)
            .map(|(v, w)| {
                let mut shaped = Vec3::zeros();
                for &(j, wj) in w {
                    let d = v - self.rest[j];
                    shaped += (self.shape_delta[j] + (self.shaped_offset(j, &d) - d)) * wj;
                }
                let v1 = v + shaped;
                let mut posed = Vec3::zeros();
                for &(j, wj) in w {
                    let d = v1 - (self.rest[j] + self.shape_delta[j]);
                    posed += (self.pose_delta[j] + self.rot_minus_i[j] * d) * wj;
                }
                v1 + posed
            })
            .collect()
    }
}

/// Generic linear-blend-skinned body with 17 joints.
#[derive(Debug, Clone)]
pub struct SkinnedBody {
    joints: [Vec3; JOINT_COUNT],
    bone_dir: [Vec3; JOINT_COUNT],
    segments: Vec<Vec<(Vec3, Vec3)>>,
    rest_mesh: TriMesh,
    weights: SparseWeights,
}

impl SkinnedBody {
    /// The bundled body, built once per process.
    pub fn standard() -> Arc<SkinnedBody> {
        static BODY: OnceLock<Arc<SkinnedBody>> = OnceLock::new();
        BODY.get_or_init(|| Arc::new(SkinnedBody::build())).clone()
    }

    fn build() -> Self {
        let joints = rest_joints();
        let sdf = rest_body_sdf(BodyRegion::Full);
        let field = FnField::new(FieldConvention::SIGNED_DISTANCE, sdf);
        let region = Aabb::new(Vec3::new(-0.5, -0.04, -0.16), Vec3::new(0.5, 1.04, 0.16));
        let res = [0, 1, 2].map(|k| (region.extent()[k] / REST_CELL).round() as usize + 1);
        let rest_mesh = marching_cubes(&field, &region, res);
        let segments = bone_segments(&joints);
        let mut bone_dir = [Vec3::y(); JOINT_COUNT];
        for (j, dir) in bone_dir.iter_mut().enumerate() {
            if let Some(c) = JOINT_PARENTS.iter().position(|&p| p == Some(j)) {
                *dir = (joints[c] - joints[j]).normalize();
            } else if let Some(&(a, b)) = segments[j].first() {
                *dir = (b - a).normalize();
            }
        }
        let mut body = Self {
            joints,
            bone_dir,
            segments,
            rest_mesh,
            weights: Vec::new(),
        };
        body.weights = body.compute_weights(body.rest_mesh.vertices(), BODY_TAU);
        body
    }

    pub fn rest_joints(&self) -> &[Vec3; JOINT_COUNT] {
        &self.joints
    }

    pub fn rest_mesh(&self) -> &TriMesh {
        &self.rest_mesh
    }

    pub fn weights(&self) -> &SparseWeights {
        &self.weights
    }

    /// Weights from a softmax over distances to each joint's bone segments,
    /// truncated to the four strongest influences.
    pub fn compute_weights(&self, points: &[Vec3], tau: f64) -> SparseWeights {
        points
            .iter()
            .map(|p| {
                let d: Vec<f64> = self
                    .segments
                    .iter()
                    .map(|segs| {
                        segs.iter()
                            .map(|(a, b)| (p - point_segment_closest(p, a, b)).norm())
                            .fold(f64::INFINITY, f64::min)
                    })
                    .collect();
                let dmin = d.iter().cloned().fold(f64::INFINITY, f64::min);
                let mut w: Vec<(usize, f64)> =
                    d.iter().enumerate().map(|(j, &dj)| (j, (-(dj - dmin) / tau).exp())).collect();
                w.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                w.truncate(MAX_INFLUENCES);
                let total: f64 = w.iter().map(|x| x.1).sum();
                for x in &mut w {
                    x.1 /= total;
                }
                w.sort_by_key(|x| x.0);
                w
            })
            .collect()
    }

    /// Joint transforms for `pose` and `shape`.
    pub fn rig(&self, pose: &Pose, shape: &Shape) -> Rig {
        assert_eq!(pose.rotations.len(), JOINT_COUNT, "one rotation per joint");
        let mut limb = [1.0; JOINT_COUNT];
        for (j, l) in limb.iter_mut().enumerate() {
            *l = shape.limb_factor(j);
        }
        let mut rig = Rig {
            rest: self.joints,
            bone_dir: self.bone_dir,
            limb,
            scale: shape.scale,
            shape_delta: [Vec3::zeros(); JOINT_COUNT],
            pose_delta: [Vec3::zeros(); JOINT_COUNT],
            rot_minus_i: [Matrix3::zeros(); JOINT_COUNT],
        };
        let mut global = [Matrix3::identity(); JOINT_COUNT];
        // Parents precede children in joint order.
        for j in 0..JOINT_COUNT {
            let local = Rotation3::new(pose.rotations[j]).into_inner();
            match JOINT_PARENTS[j] {
                None => {
                    global[j] = local;
                    rig.pose_delta[j] = pose.translation;
                }
                Some(p) => {
                    let d = self.joints[j] - self.joints[p];
                    rig.shape_delta[j] = rig.shape_delta[p] + (rig.shaped_offset(p, &d) - d);
                    let bone = d + (rig.shape_delta[j] - rig.shape_delta[p]);
                    global[j] = global[p] * local;
                    rig.pose_delta[j] = rig.pose_delta[p] + (global[p] - Matrix3::identity()) * bone;
                }
            }
            rig.rot_minus_i[j] = global[j] - Matrix3::identity();
        }
        rig
    }

    /// Posed body mesh and joint positions.
    pub fn skin_pose(&self, pose: &Pose, shape: &Shape) -> (TriMesh, Vec<Vec3>) {
        let rig = self.rig(pose, shape);
        let verts = rig.apply(self.rest_mesh.vertices(), &self.weights);
        (self.rest_mesh.with_vertices(verts), rig.joints())
    }
}
