use super::Vec3;

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

/// Static kd-tree over a point set for nearest-neighbour queries.
///
/// Tolerates arbitrarily many coincident or coplanar points.
#[derive(Debug, Clone)]
pub struct PointIndex {
    points: Vec<Vec3>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl PointIndex {
    pub fn new(points: &[Vec3]) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        let mut nodes = Vec::new();
        if !points.is_empty() {
            build(&mut nodes, &mut order, 0, points.len(), points);
        }
        Self {
            points: points.to_vec(),
            order,
            nodes,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    /// Index of and squared distance to the nearest point; ties go to the
    /// lowest index. `None` when empty.
    pub fn nearest(&self, q: &Vec3) -> Option<(usize, f64)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(0, q, &mut best);
        Some(best)
    }

    fn search(&self, ni: usize, q: &Vec3, best: &mut (usize, f64)) {
        match self.nodes[ni] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let d2 = (self.points[i] - q).norm_squared();
                    if d2 < best.1 || (d2 == best.1 && i < best.0) {
                        *best = (i, d2);
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[axis] - value;
                let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, best);
                if diff * diff <= best.1 {
                    self.search(far, q, best);
                }
            }
        }
    }
}

fn build(nodes: &mut Vec<Node>, order: &mut [usize], start: usize, end: usize, pts: &[Vec3]) -> usize {
    let idx = nodes.len();
    nodes.push(Node::Leaf { start, end });
    if end - start <= LEAF_SIZE {
        return idx;
    }
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for &i in &order[start..end] {
        lo = lo.inf(&pts[i]);
        hi = hi.sup(&pts[i]);
    }
    let ext = hi - lo;
    let axis = ext.imax();
    if ext[axis] == 0.0 {
        // All points coincide.
        return idx;
    }
    let mid = (start + end) / 2;
    order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
        pts[a][axis].total_cmp(&pts[b][axis]).then(a.cmp(&b))
    });
    let value = pts[order[mid]][axis];
    // Left holds coordinates <= value after the partition except for equal
    // values landing right; the search bound `diff^2 <= best` covers both.
    let left = build(nodes, order, start, mid, pts);
    let right = build(nodes, order, mid, end, pts);
    nodes[idx] = Node::Split { axis, value, left, right };
    idx
}
