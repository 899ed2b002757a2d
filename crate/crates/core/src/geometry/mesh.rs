use std::collections::{BTreeSet, HashMap};

use super::Vec3;
use crate::error::{Error, Result};

/// Squared-area threshold for degenerate faces, relative to the fourth power
/// of the face's longest edge so the check does not depend on scene scale.
const DEGENERATE_RELATIVE: f64 = 1e-12;

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    pub fn empty() -> Self {
        Self {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Self {
        let mut b = Self::empty();
        for p in points {
            b.grow(p);
        }
        b
    }

    pub fn grow(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn is_empty(&self) -> bool {
        (0..3).any(|k| self.min[k] > self.max[k])
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn padded(&self, margin: f64) -> Aabb {
        Aabb {
            min: self.min - Vec3::repeat(margin),
            max: self.max + Vec3::repeat(margin),
        }
    }

    /// Squared distance from `p` to the box (zero inside).
    pub fn distance_squared(&self, p: &Vec3) -> f64 {
        let mut d = 0.0;
        for k in 0..3 {
            let v = if p[k] < self.min[k] {
                self.min[k] - p[k]
            } else if p[k] > self.max[k] {
                p[k] - self.max[k]
            } else {
                0.0
            };
            d += v * v;
        }
        d
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }
}

/// Indexed triangle mesh with counter-clockwise outward faces.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
}

impl TriMesh {
    /// Builds a mesh, rejecting out-of-range indices, faces that repeat a
    /// vertex and zero-area faces.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&i| i >= n) {
                return Err(Error::InvalidMesh(format!(
                    "face {fi} references vertex {bad} but the mesh has {n} vertices"
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidMesh(format!("face {fi} repeats a vertex: {f:?}")));
            }
            if is_degenerate(&vertices[f[0]], &vertices[f[1]], &vertices[f[2]]) {
                return Err(Error::InvalidMesh(format!("face {fi} has zero area")));
            }
        }
        if let Some(i) = vertices.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidMesh(format!("vertex {i} is not finite")));
        }
        Ok(Self { vertices, faces })
    }

    pub fn empty() -> Self {
        Self {
            vertices: Vec::new(),
            faces: Vec::new(),
        }
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    /// Same connectivity, new positions. Positions produced by the fitting
    /// stages are not re-validated for face area.
    ///
    /// Panics if the vertex count changes.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> TriMesh {
        assert_eq!(
            vertices.len(),
            self.vertices.len(),
            "with_vertices must preserve the vertex count"
        );
        TriMesh {
            vertices,
            faces: self.faces.clone(),
        }
    }

    pub fn triangle(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Unnormalized face normal; its length is twice the face area.
    pub fn face_cross(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.triangle(f);
        (b - a).cross(&(c - a))
    }

    pub fn face_area(&self, f: usize) -> f64 {
        0.5 * self.face_cross(f).norm()
    }

    pub fn area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter())
    }

    /// Area-weighted average of incident face normals, normalized.
    /// Vertices without faces get `+z` and a warning.
    pub fn vertex_normals(&self) -> Vec<Vec3> {
        let mut acc = vec![Vec3::zeros(); self.vertices.len()];
        for (fi, f) in self.faces.iter().enumerate() {
            let n = self.face_cross(fi);
            for &v in f {
                acc[v] += n;
            }
        }
        let mut isolated = 0usize;
        let normals = acc
            .into_iter()
            .map(|n| {
                let len = n.norm();
                if len > 0.0 {
                    n / len
                } else {
                    isolated += 1;
                    Vec3::z()
                }
            })
            .collect();
        if isolated > 0 {
            log::warn!("{isolated} vertices have no incident area; using +z as their normal");
        }
        normals
    }

    /// Unique undirected edges as `[lo, hi]`, sorted.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut set = BTreeSet::new();
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                set.insert([a.min(b), a.max(b)]);
            }
        }
        set.into_iter().collect()
    }

    /// Number of faces incident to each undirected edge.
    pub fn edge_face_counts(&self) -> HashMap<[usize; 2], usize> {
        let mut counts = HashMap::new();
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                *counts.entry([a.min(b), a.max(b)]).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Edges used by exactly one face, sorted.
    pub fn boundary_edges(&self) -> Vec<[usize; 2]> {
        let mut out: Vec<_> = self
            .edge_face_counts()
            .into_iter()
            .filter_map(|(e, c)| (c == 1).then_some(e))
            .collect();
        out.sort_unstable();
        out
    }

    /// Every edge shared by exactly two faces.
    pub fn is_closed(&self) -> bool {
        !self.faces.is_empty() && self.edge_face_counts().values().all(|&c| c == 2)
    }

    /// `V - E + F`, counting only vertices referenced by faces.
    pub fn euler_characteristic(&self) -> i64 {
        let mut used = vec![false; self.vertices.len()];
        for f in &self.faces {
            for &v in f {
                used[v] = true;
            }
        }
        let v = used.iter().filter(|&&u| u).count() as i64;
        v - self.edges().len() as i64 + self.faces.len() as i64
    }

    /// One-ring neighbours of every vertex, sorted.
    pub fn vertex_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for [a, b] in self.edges() {
            adj[a].push(b);
            adj[b].push(a);
        }
        for n in &mut adj {
            n.sort_unstable();
        }
        adj
    }

    /// Connected components over the edge graph; isolated vertices form
    /// their own components. Returns a component id per vertex.
    pub fn connected_components(&self) -> (usize, Vec<usize>) {
        components_from_adjacency(&self.vertex_adjacency())
    }

    /// Disjoint union; `other`'s indices are shifted past ours.
    pub fn merged(&self, other: &TriMesh) -> TriMesh {
        let offset = self.vertices.len();
        let mut vertices = self.vertices.clone();
        vertices.extend_from_slice(&other.vertices);
        let mut faces = self.faces.clone();
        faces.extend(other.faces.iter().map(|f| [f[0] + offset, f[1] + offset, f[2] + offset]));
        TriMesh { vertices, faces }
    }

    /// Reverses every face.
    pub fn flipped(&self) -> TriMesh {
        TriMesh {
            vertices: self.vertices.clone(),
            faces: self.faces.iter().map(|f| [f[0], f[2], f[1]]).collect(),
        }
    }

    /// Signed enclosed volume (positive for closed outward-oriented meshes).
    pub fn signed_volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                let (a, b, c) = (self.vertices[f[0]], self.vertices[f[1]], self.vertices[f[2]]);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }
}

pub(crate) fn components_from_adjacency(adj: &[Vec<usize>]) -> (usize, Vec<usize>) {
    let n = adj.len();
    let mut comp = vec![usize::MAX; n];
    let mut count = 0;
    let mut stack = Vec::new();
    for seed in 0..n {
        if comp[seed] != usize::MAX {
            continue;
        }
        comp[seed] = count;
        stack.push(seed);
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if comp[w] == usize::MAX {
                    comp[w] = count;
                    stack.push(w);
                }
            }
        }
        count += 1;
    }
    (count, comp)
}

pub(crate) fn is_degenerate(a: &Vec3, b: &Vec3, c: &Vec3) -> bool {
    let cross = (b - a).cross(&(c - a));
    let longest = (b - a)
        .norm_squared()
        .max((c - b).norm_squared())
        .max((a - c).norm_squared());
    cross.norm_squared() <= DEGENERATE_RELATIVE * longest * longest
}
