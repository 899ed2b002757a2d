use super::{closest_point_on_triangle, Aabb, TriMesh, Vec3};

const LEAF_SIZE: usize = 4;

/// Result of a nearest-triangle query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestHit {
    pub distance: f64,
    pub point: Vec3,
    pub triangle: usize,
}

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    /// Leaf: `start..start + count` into `order`. Interior nodes have
    /// `count == 0` and use `left`/`right`.
    start: usize,
    count: usize,
    left: usize,
    right: usize,
}

/// Bounding-volume hierarchy over the triangles of a mesh.
#[derive(Debug, Clone)]
pub struct DistanceAccelerator {
    tris: Vec<[Vec3; 3]>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl DistanceAccelerator {
    pub fn new(mesh: &TriMesh) -> Self {
        let tris: Vec<[Vec3; 3]> = (0..mesh.face_count()).map(|f| mesh.triangle(f)).collect();
        let boxes: Vec<Aabb> = tris.iter().map(|t| Aabb::from_points(t.iter())).collect();
        let centers: Vec<Vec3> = boxes.iter().map(Aabb::center).collect();
        let mut order: Vec<usize> = (0..tris.len()).collect();
        let mut nodes = Vec::new();
        if !tris.is_empty() {
            build(&mut nodes, &mut order, 0, tris.len(), &boxes, &centers);
        }
        Self { tris, order, nodes }
    }

    pub fn triangle_count(&self) -> usize {
        self.tris.len()
    }

    pub fn triangle(&self, t: usize) -> &[Vec3; 3] {
        &self.tris[t]
    }

    /// Nearest point on the mesh. `None` for an empty mesh.
    pub fn closest(&self, p: &Vec3) -> Option<ClosestHit> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = (f64::INFINITY, Vec3::zeros(), usize::MAX);
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if node.bounds.distance_squared(p) > best.0 {
                continue;
            }
            if node.count > 0 {
                for &t in &self.order[node.start..node.start + node.count] {
                    let [a, b, c] = &self.tris[t];
                    let q = closest_point_on_triangle(p, a, b, c);
                    let d2 = (p - q).norm_squared();
                    if d2 < best.0 || (d2 == best.0 && t < best.2) {
                        best = (d2, q, t);
                    }
                }
            } else {
                let (l, r) = (node.left, node.right);
                let dl = self.nodes[l].bounds.distance_squared(p);
                let dr = self.nodes[r].bounds.distance_squared(p);
                // Visit the nearer child first.
                if dl <= dr {
                    stack.push(r);
                    stack.push(l);
                } else {
                    stack.push(l);
                    stack.push(r);
                }
            }
        }
        Some(ClosestHit {
            distance: best.0.sqrt(),
            point: best.1,
            triangle: best.2,
        })
    }

    pub fn distance(&self, p: &Vec3) -> f64 {
        self.closest(p).map_or(f64::INFINITY, |h| h.distance)
    }

    /// Whether any triangle lies within `radius` of `p`.
    pub fn any_within(&self, p: &Vec3, radius: f64) -> bool {
        if self.nodes.is_empty() {
            return false;
        }
        let r2 = radius * radius;
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if node.bounds.distance_squared(p) > r2 {
                continue;
            }
            if node.count > 0 {
                for &t in &self.order[node.start..node.start + node.count] {
                    let [a, b, c] = &self.tris[t];
                    if (p - closest_point_on_triangle(p, a, b, c)).norm_squared() <= r2 {
                        return true;
                    }
                }
            } else {
                stack.push(node.left);
                stack.push(node.right);
            }
        }
        false
    }

    /// Number of triangles hit by the ray `origin + t·dir`, `t > 0`.
    pub fn ray_crossings(&self, origin: &Vec3, dir: &Vec3) -> usize {
        if self.nodes.is_empty() {
            return 0;
        }
        let inv = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut hits = 0;
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if !ray_hits_box(origin, &inv, &node.bounds) {
                continue;
            }
            if node.count > 0 {
                for &t in &self.order[node.start..node.start + node.count] {
                    let [a, b, c] = &self.tris[t];
                    if ray_triangle(origin, dir, a, b, c) {
                        hits += 1;
                    }
                }
            } else {
                stack.push(node.left);
                stack.push(node.right);
            }
        }
        hits
    }

    /// Nearest hit by scanning every triangle; reference for tests.
    pub fn closest_brute_force(&self, p: &Vec3) -> Option<ClosestHit> {
        let mut best: Option<ClosestHit> = None;
        for (t, [a, b, c]) in self.tris.iter().enumerate() {
            let q = closest_point_on_triangle(p, a, b, c);
            let d = (p - q).norm();
            if best.map_or(true, |h| d < h.distance) {
                best = Some(ClosestHit {
                    distance: d,
                    point: q,
                    triangle: t,
                });
            }
        }
        best
    }
}

fn build(
    nodes: &mut Vec<Node>,
    order: &mut [usize],
    start: usize,
    end: usize,
    boxes: &[Aabb],
    centers: &[Vec3],
) -> usize {
    let idx = nodes.len();
    let mut bounds = Aabb::empty();
    for &t in &order[start..end] {
        bounds = bounds.union(&boxes[t]);
    }
    nodes.push(Node {
        bounds,
        start,
        count: end - start,
        left: 0,
        right: 0,
    });
    if end - start <= LEAF_SIZE {
        return idx;
    }
    let mut cb = Aabb::empty();
    for &t in &order[start..end] {
        cb.grow(&centers[t]);
    }
    let ext = cb.extent();
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    let mid = (start + end) / 2;
    order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
        centers[a][axis]
            .total_cmp(&centers[b][axis])
            .then(a.cmp(&b))
    });
    let left = build(nodes, order, start, mid, boxes, centers);
    let right = build(nodes, order, mid, end, boxes, centers);
    let node = &mut nodes[idx];
    node.count = 0;
    node.left = left;
    node.right = right;
    idx
}

fn ray_hits_box(o: &Vec3, inv: &Vec3, b: &Aabb) -> bool {
    let mut t0 = 0.0f64;
    let mut t1 = f64::INFINITY;
    for k in 0..3 {
        let mut ta = (b.min[k] - o[k]) * inv[k];
        let mut tb = (b.max[k] - o[k]) * inv[k];
        if ta > tb {
            std::mem::swap(&mut ta, &mut tb);
        }
        // NaN arises when the origin sits on a slab plane of a flat box
        // with a zero direction component; treat it as overlapping.
        if ta.is_nan() || tb.is_nan() {
            if o[k] < b.min[k] || o[k] > b.max[k] {
                return false;
            }
            continue;
        }
        t0 = t0.max(ta);
        t1 = t1.min(tb);
        if t0 > t1 {
            return false;
        }
    }
    true
}

/// Möller–Trumbore ray/triangle test for `t > 0`.
fn ray_triangle(o: &Vec3, d: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> bool {
    let e1 = b - a;
    let e2 = c - a;
    let p = d.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-300 {
        return false;
    }
    let inv = 1.0 / det;
    let s = o - a;
    let u = s.dot(&p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return false;
    }
    let q = s.cross(&e1);
    let v = d.dot(&q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return false;
    }
    e2.dot(&q) * inv > 0.0
}
