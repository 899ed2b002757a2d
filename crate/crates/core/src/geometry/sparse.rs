use std::collections::BTreeMap;

use sprs::{CsMat, FillInReduction, TriMat};
use sprs_ldl::{Ldl, LdlNumeric};

use super::mesh::components_from_adjacency;
use super::{TriMesh, Vec3};
use crate::error::{Error, Result};

/// Square sparse matrix in compressed-row form.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    mat: CsMat<f64>,
}

impl SparseOperator {
    /// Builds an `n`×`n` operator; duplicate entries are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut tri = TriMat::new((n, n));
        for &(i, j, v) in triplets {
            assert!(i < n && j < n, "triplet ({i}, {j}) outside {n}x{n}");
            tri.add_triplet(i, j, v);
        }
        Self { mat: tri.to_csr() }
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn nnz(&self) -> usize {
        self.mat.nnz()
    }

    pub fn matrix(&self) -> &CsMat<f64> {
        &self.mat
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mat.get(i, j).copied().unwrap_or(0.0)
    }

    /// Nonzero entries of row `i` as `(column, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.mat.indptr().outer_inds_sz(i);
        self.mat.indices()[range.clone()]
            .iter()
            .copied()
            .zip(self.mat.data()[range].iter().copied())
    }

    pub fn mul_scalars(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim());
        (0..self.dim())
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// Applies the operator independently to each coordinate.
    pub fn mul_points(&self, x: &[Vec3]) -> Vec<Vec3> {
        assert_eq!(x.len(), self.dim());
        (0..self.dim())
            .map(|i| self.row(i).map(|(j, v)| x[j] * v).sum())
            .collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.dim()).all(|i| self.row(i).all(|(j, v)| (v - self.get(j, i)).abs() <= tol))
    }

    pub fn transpose(&self) -> SparseOperator {
        Self {
            mat: self.mat.transpose_view().to_csr(),
        }
    }

    /// Matrix product `self * other`.
    pub fn compose(&self, other: &SparseOperator) -> SparseOperator {
        Self {
            mat: (&self.mat * &other.mat).to_csr(),
        }
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.dim();
        let mut d = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            for (j, v) in self.row(i) {
                d[(i, j)] += v;
            }
        }
        d
    }

    /// Off-diagonal sparsity pattern as an adjacency list.
    fn adjacency(&self) -> Vec<Vec<usize>> {
        (0..self.dim())
            .map(|i| self.row(i).filter(|&(j, v)| j != i && v != 0.0).map(|(j, _)| j).collect())
            .collect()
    }
}

/// Uniform graph Laplacian: degree on the diagonal, -1 per edge.
pub fn graph_laplacian(mesh: &TriMesh) -> SparseOperator {
    let n = mesh.vertex_count();
    let edges = mesh.edges();
    let mut triplets = Vec::with_capacity(edges.len() * 4);
    for [a, b] in edges {
        triplets.push((a, b, -1.0));
        triplets.push((b, a, -1.0));
        triplets.push((a, a, 1.0));
        triplets.push((b, b, 1.0));
    }
    SparseOperator::from_triplets(n, &triplets)
}

/// Factorized bi-Laplacian system for a fixed constrained vertex set.
///
/// Solves for the displacement `d` minimizing `|L d|^2` with `d` prescribed
/// on the constrained vertices, then returns `free_init + d`. When the
/// initial positions are harmonic-free this is the plain bi-harmonic
/// interpolant; in general it keeps the initial shape wherever the
/// constraints do not move.
pub struct BiharmonicSolver {
    n: usize,
    constrained: Vec<usize>,
    free: Vec<usize>,
    /// Position in `free` (or usize::MAX) per vertex.
    free_slot: Vec<usize>,
    /// Rows of `L^2` restricted to free vertices, split by column kind.
    k_fc: Vec<Vec<(usize, f64)>>,
    k_ff: CsMat<f64>,
    factor: Option<LdlNumeric<f64, usize>>,
}

impl BiharmonicSolver {
    pub fn new(laplacian: &SparseOperator, constrained: &[usize]) -> Result<Self> {
        let n = laplacian.dim();
        if constrained.is_empty() {
            return Err(Error::EmptyInput("bi-harmonic constraint set"));
        }
        let mut is_constrained = vec![false; n];
        for &c in constrained {
            if c >= n {
                return Err(Error::Solve(format!(
                    "constrained vertex {c} out of range for {n} vertices"
                )));
            }
            is_constrained[c] = true;
        }

        let (count, comp) = components_from_adjacency(&laplacian.adjacency());
        let mut anchored = vec![false; count];
        for &c in constrained {
            anchored[comp[c]] = true;
        }
        if let Some(c) = anchored.iter().position(|&a| !a) {
            let vertex = comp.iter().position(|&k| k == c).unwrap();
            return Err(Error::SingularComponent { component: c, vertex });
        }

        let constrained: Vec<usize> = (0..n).filter(|&i| is_constrained[i]).collect();
        let free: Vec<usize> = (0..n).filter(|&i| !is_constrained[i]).collect();
        let mut free_slot = vec![usize::MAX; n];
        for (k, &i) in free.iter().enumerate() {
            free_slot[i] = k;
        }

        let k = laplacian.transpose().compose(laplacian);
        let mut ff = TriMat::new((free.len(), free.len()));
        let mut k_fc = Vec::with_capacity(free.len());
        for (r, &i) in free.iter().enumerate() {
            let mut fc = Vec::new();
            for (j, v) in k.row(i) {
                if is_constrained[j] {
                    fc.push((j, v));
                } else {
                    ff.add_triplet(r, free_slot[j], v);
                }
            }
            k_fc.push(fc);
        }
        let k_ff: CsMat<f64> = ff.to_csr();
        let factor = if free.is_empty() {
            None
        } else {
            Some(
                Ldl::new()
                    .fill_in_reduction(FillInReduction::ReverseCuthillMcKee)
                    .numeric(k_ff.view())
                    .map_err(|e| Error::Solve(format!("factorization failed: {e}")))?,
            )
        };
        Ok(Self {
            n,
            constrained,
            free,
            free_slot,
            k_fc,
            k_ff,
            factor,
        })
    }

    /// Constrained vertex indices, ascending.
    pub fn constrained(&self) -> &[usize] {
        &self.constrained
    }

    /// `targets` holds one position per constrained vertex, in the order of
    /// [`Self::constrained`].
    pub fn solve(&self, targets: &[Vec3], free_init: &[Vec3]) -> Result<Vec<Vec3>> {
        assert_eq!(targets.len(), self.constrained.len());
        assert_eq!(free_init.len(), self.n);
        let mut disp = vec![Vec3::zeros(); self.n];
        for (&c, t) in self.constrained.iter().zip(targets) {
            disp[c] = t - free_init[c];
        }
        if let Some(factor) = &self.factor {
            let m = self.free.len();
            for axis in 0..3 {
                let rhs: Vec<f64> = self
                    .k_fc
                    .iter()
                    .map(|row| -row.iter().map(|&(j, v)| v * disp[j][axis]).sum::<f64>())
                    .collect();
                let rhs_norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
                if rhs_norm == 0.0 {
                    continue;
                }
                let x: Vec<f64> = factor.solve(&rhs);
                let mut res2 = 0.0;
                for (r, row) in self.k_ff.outer_iterator().enumerate() {
                    let kx: f64 = row.iter().map(|(j, &v)| v * x[j]).sum();
                    res2 += (kx - rhs[r]).powi(2);
                }
                let rel = res2.sqrt() / rhs_norm;
                if !(rel <= 1e-8) {
                    return Err(Error::Solve(format!(
                        "relative residual {rel:e} exceeds 1e-8 on axis {axis}"
                    )));
                }
                for (k, &i) in self.free.iter().enumerate() {
                    debug_assert_eq!(self.free_slot[i], k);
                    disp[i][axis] = x[k];
                }
                debug_assert_eq!(x.len(), m);
            }
        }
        let mut out: Vec<Vec3> = free_init.iter().zip(&disp).map(|(p, d)| p + d).collect();
        // Constrained vertices are exact, not init + (target - init).
        for (&c, t) in self.constrained.iter().zip(targets) {
            out[c] = *t;
        }
        Ok(out)
    }
}

/// One-shot constrained bi-harmonic solve; see [`BiharmonicSolver`].
pub fn solve_constrained_bilaplacian(
    laplacian: &SparseOperator,
    constrained: &BTreeMap<usize, Vec3>,
    free_init: &[Vec3],
) -> Result<Vec<Vec3>> {
    let idx: Vec<usize> = constrained.keys().copied().collect();
    let solver = BiharmonicSolver::new(laplacian, &idx)?;
    let targets: Vec<Vec3> = solver.constrained().iter().map(|i| constrained[i]).collect();
    solver.solve(&targets, free_init)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives::{icosphere, open_cylinder};

    fn path_laplacian(n: usize) -> SparseOperator {
        let mut t = Vec::new();
        for i in 0..n - 1 {
            t.extend([(i, i + 1, -1.0), (i + 1, i, -1.0), (i, i, 1.0), (i + 1, i + 1, 1.0)]);
        }
        SparseOperator::from_triplets(n, &t)
    }

    #[test]
    fn triangle_laplacian() {
        let m = TriMesh::new(vec![Vec3::zeros(), Vec3::x(), Vec3::y()], vec![[0, 1, 2]]).unwrap();
        let l = graph_laplacian(&m).to_dense();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(l[(i, j)], if i == j { 2.0 } else { -1.0 });
            }
        }
    }

    #[test]
    fn laplacian_rows_and_linear_path() {
        let m = icosphere(1.0, 2);
        let l = graph_laplacian(&m);
        assert!(l.row_sums().iter().all(|s| s.abs() <= 1e-12));
        assert!(l.is_symmetric(0.0));
        let p = path_laplacian(3).mul_scalars(&[0.0, 1.0, 2.0]);
        assert_eq!(p[1], 0.0);
    }

    #[test]
    fn five_vertex_path_matches_dense_oracle() {
        let l = path_laplacian(5);
        let mut c = BTreeMap::new();
        c.insert(0, Vec3::zeros());
        c.insert(4, Vec3::new(1.0, 0.0, 0.0));
        let out = solve_constrained_bilaplacian(&l, &c, &vec![Vec3::zeros(); 5]).unwrap();

        // Oracle: K = L^T L restricted to the interior, dense LU.
        let ld = l.to_dense();
        let k = ld.transpose() * &ld;
        let kff = k.view((1, 1), (3, 3)).into_owned();
        let rhs = -k.view((1, 4), (3, 1)).into_owned() * 1.0;
        let x = kff.lu().solve(&rhs).unwrap();
        for i in 0..3 {
            assert!((out[i + 1].x - x[i]).abs() <= 1e-10, "{} vs {}", out[i + 1].x, x[i]);
        }
        assert_eq!(out[0].x, 0.0);
        assert_eq!(out[4].x, 1.0);
    }

    #[test]
    fn identity_and_translation() {
        let (m, bottom, top) = open_cylinder(0.3, 0.0, 1.0, 24, 10);
        let l = graph_laplacian(&m);
        let pinned: Vec<usize> = bottom.iter().chain(&top).copied().collect();
        let solver = BiharmonicSolver::new(&l, &pinned).unwrap();
        let v = m.vertices();
        let same: Vec<Vec3> = solver.constrained().iter().map(|&i| v[i]).collect();
        let out = solver.solve(&same, v).unwrap();
        for (a, b) in out.iter().zip(v) {
            assert!((a - b).norm() <= 1e-8);
        }
        let t = Vec3::new(0.1, -0.2, 0.3);
        let moved: Vec<Vec3> = same.iter().map(|p| p + t).collect();
        let out = solver.solve(&moved, v).unwrap();
        for (a, b) in out.iter().zip(v) {
            assert!((a - b - t).norm() <= 1e-8);
        }
    }

    #[test]
    fn unanchored_component_is_reported() {
        let a = icosphere(1.0, 1);
        let b = icosphere(1.0, 1);
        let m = a.merged(&b);
        let l = graph_laplacian(&m);
        let err = BiharmonicSolver::new(&l, &[0]).err().unwrap();
        match err {
            Error::SingularComponent { component, vertex } => {
                assert_eq!(component, 1);
                assert_eq!(vertex, a.vertex_count());
            }
            e => panic!("unexpected {e}"),
        }
    }
}
