//! Collars attached to a fitted garment's neckline.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Rotation3};

use crate::error::{Error, Result};
use crate::geometry::{graph_laplacian, solve_constrained_bilaplacian, TriMesh, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollarStyle {
    /// Short upright band.
    Band,
    /// Band that folds over and drapes outward.
    Turndown,
}

impl CollarStyle {
    pub const ALL: [CollarStyle; 2] = [CollarStyle::Band, CollarStyle::Turndown];

    pub fn name(self) -> &'static str {
        match self {
            CollarStyle::Band => "band",
            CollarStyle::Turndown => "turndown",
        }
    }
}

impl fmt::Display for CollarStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CollarStyle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "unknown collar `{s}`; expected one of: {}",
                Self::ALL.map(|c| c.name()).join(", ")
            ))
        })
    }
}

/// A collar mesh with a correspondence from some of its vertices to
/// positions along a garment neckline loop.
#[derive(Debug, Clone, PartialEq)]
pub struct Collar {
    pub mesh: TriMesh,
    /// `(collar vertex, index into the neckline loop)`.
    pub correspondence: Vec<(usize, usize)>,
}

impl Collar {
    /// A collar authored on `neckline` (loop positions in order): its bottom
    /// ring is the neckline itself and corresponds to it one to one.
    pub fn authored(style: CollarStyle, neckline: &[Vec3]) -> Result<Collar> {
        let n = neckline.len();
        if n < 3 {
            return Err(Error::UnderdeterminedCollar(n));
        }
        let center = neckline.iter().sum::<Vec3>() / n as f64;
        // (outward offset, height) of each ring relative to the neckline.
        let profile: &[(f64, f64)] = match style {
            CollarStyle::Band => &[(0.0, 0.0), (-0.002, 0.012), (-0.004, 0.024)],
            CollarStyle::Turndown => &[(0.0, 0.0), (0.0, 0.015), (0.006, 0.026), (0.016, 0.018), (0.026, 0.002)],
        };
        let mut verts = Vec::with_capacity(n * profile.len());
        for &(out, up) in profile {
            for p in neckline {
                let mut radial = p - center;
                radial.y = 0.0;
                let radial = radial.try_normalize(1e-12).unwrap_or_else(Vec3::x);
                verts.push(p + radial * out + Vec3::y() * up);
            }
        }
        let mut faces = Vec::new();
        for r in 0..profile.len() - 1 {
            for i in 0..n {
                let (a, b) = (r * n + i, r * n + (i + 1) % n);
                let (c, d) = (b + n, a + n);
                faces.push([a, c, b]);
                faces.push([a, d, c]);
            }
        }
        Ok(Collar {
            mesh: TriMesh::new(verts, faces)?,
            correspondence: (0..n).map(|i| (i, i)).collect(),
        })
    }
}

/// Least-squares rotation and translation taking `src` onto `dst`.
pub fn rigid_fit(src: &[Vec3], dst: &[Vec3]) -> Result<(Rotation3<f64>, Vec3)> {
    assert_eq!(src.len(), dst.len());
    if src.len() < 3 {
        return Err(Error::UnderdeterminedCollar(src.len()));
    }
    let cs = src.iter().sum::<Vec3>() / src.len() as f64;
    let cd = dst.iter().sum::<Vec3>() / dst.len() as f64;
    let mut h = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst) {
        h += (s - cs) * (d - cd).transpose();
    }
    let svd = h.svd(true, true);
    let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v requested"));
    let mut fix = Matrix3::identity();
    if (vt.transpose() * u.transpose()).determinant() < 0.0 {
        fix[(2, 2)] = -1.0;
    }
    let r = Rotation3::from_matrix_unchecked(vt.transpose() * fix * u.transpose());
    Ok((r, cd - r * cs))
}

/// Collar vertex positions after rigid alignment to the neckline and a
/// bi-harmonic relax with corresponded vertices pinned onto it.
pub fn fit_collar(garment: &TriMesh, neckline: &[usize], collar: &Collar) -> Result<Vec<Vec3>> {
    let corr = &collar.correspondence;
    if corr.len() < 3 {
        return Err(Error::UnderdeterminedCollar(corr.len()));
    }
    let cv = collar.mesh.vertices();
    let mut src = Vec::with_capacity(corr.len());
    let mut dst = Vec::with_capacity(corr.len());
    for &(c, k) in corr {
        let g = *neckline.get(k).ok_or_else(|| {
            Error::InvalidTemplate(format!("collar correspondence index {k} exceeds neckline length {}", neckline.len()))
        })?;
        if c >= cv.len() || g >= garment.vertex_count() {
            return Err(Error::InvalidTemplate("collar correspondence out of range".into()));
        }
        src.push(cv[c]);
        dst.push(garment.vertices()[g]);
    }
    let (r, t) = rigid_fit(&src, &dst)?;
    let aligned: Vec<Vec3> = cv.iter().map(|p| r * p + t).collect();
    let pins: BTreeMap<usize, Vec3> = corr.iter().map(|&(c, _)| c).zip(dst).collect();
    solve_constrained_bilaplacian(&graph_laplacian(&collar.mesh), &pins, &aligned)
}

/// Fits `collar` to the garment neckline and welds it on: corresponded
/// collar vertices are replaced by the neckline vertices they map to.
pub fn attach_collar(garment: &TriMesh, neckline: &[usize], collar: &Collar) -> Result<TriMesh> {
    let fitted = fit_collar(garment, neckline, collar)?;
    let welded: BTreeMap<usize, usize> = collar.correspondence.iter().map(|&(c, k)| (c, neckline[k])).collect();
    let mut verts = garment.vertices().to_vec();
    let mut map = vec![0; fitted.len()];
    for (i, p) in fitted.iter().enumerate() {
        map[i] = match welded.get(&i) {
            Some(&g) => g,
            None => {
                verts.push(*p);
                verts.len() - 1
            }
        };
    }
    let mut faces = garment.faces().to_vec();
    faces.extend(collar.mesh.faces().iter().map(|f| f.map(|v| map[v])));
    TriMesh::new(verts, faces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::garment::{procedural_template, BoundaryType, GarmentCategory, TemplateParams};

    fn top() -> (TriMesh, Vec<usize>) {
        let p = TemplateParams {
            around: 24,
            rings: 10,
            ..TemplateParams::default()
        };
        let t = procedural_template(GarmentCategory::NoSleeveUpper, &p).unwrap();
        let neck = t.boundaries().iter().find(|l| l.kind == BoundaryType::Neckline).unwrap().vertices.clone();
        (t.mesh().clone(), neck)
    }

    fn neck_points(m: &TriMesh, neck: &[usize]) -> Vec<Vec3> {
        neck.iter().map(|&i| m.vertices()[i]).collect()
    }

    #[test]
    fn authored_collar_attaches_unchanged() {
        let (m, neck) = top();
        for style in CollarStyle::ALL {
            let collar = Collar::authored(style, &neck_points(&m, &neck)).unwrap();
            let fitted = fit_collar(&m, &neck, &collar).unwrap();
            for (a, b) in fitted.iter().zip(collar.mesh.vertices()) {
                assert!((a - b).norm() < 1e-10);
            }
            let out = attach_collar(&m, &neck, &collar).unwrap();
            assert_eq!(out.vertex_count(), m.vertex_count() + collar.mesh.vertex_count() - neck.len());
            assert_eq!(&out.vertices()[..m.vertex_count()], m.vertices());
            // The neckline is sewn shut, so it is no longer an open boundary.
            let open: std::collections::HashSet<_> = out.boundary_edges().into_iter().collect();
            assert!(!open.contains(&[neck[0].min(neck[1]), neck[0].max(neck[1])]));
        }
    }

    #[test]
    fn translated_neckline_translates_collar() {
        let (m, neck) = top();
        let collar = Collar::authored(CollarStyle::Turndown, &neck_points(&m, &neck)).unwrap();
        let t = Vec3::new(0.03, -0.02, 0.05);
        let moved = m.with_vertices(m.vertices().iter().map(|v| v + t).collect());
        let fitted = fit_collar(&moved, &neck, &collar).unwrap();
        for (a, b) in fitted.iter().zip(collar.mesh.vertices()) {
            assert!((a - (b + t)).norm() < 1e-9);
        }
    }

    #[test]
    fn widened_neckline_is_matched_exactly() {
        let (m, neck) = top();
        let collar = Collar::authored(CollarStyle::Band, &neck_points(&m, &neck)).unwrap();
        let center = neck_points(&m, &neck).iter().sum::<Vec3>() / neck.len() as f64;
        let mut verts = m.vertices().to_vec();
        for &i in &neck {
            let d = verts[i] - center;
            verts[i] = center + Vec3::new(d.x * 1.1, d.y, d.z * 1.1);
        }
        let wide = m.with_vertices(verts);
        let fitted = fit_collar(&wide, &neck, &collar).unwrap();
        for &(c, k) in &collar.correspondence {
            assert!((fitted[c] - wide.vertices()[neck[k]]).norm() < 1e-8);
        }
    }

    #[test]
    fn rigid_fit_recovers_rotation() {
        let src = [Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 2.0, 0.0), Vec3::new(0.0, 0.0, 3.0), Vec3::new(1.0, 1.0, 1.0)];
        let r = Rotation3::new(Vec3::new(0.3, -0.7, 1.1));
        let t = Vec3::new(0.5, 0.1, -2.0);
        let dst: Vec<Vec3> = src.iter().map(|p| r * p + t).collect();
        let (rf, tf) = rigid_fit(&src, &dst).unwrap();
        assert!((rf.matrix() - r.matrix()).norm() < 1e-10);
        assert!((tf - t).norm() < 1e-10);
    }

    #[test]
    fn two_correspondences_are_underdetermined() {
        let (m, neck) = top();
        let mut collar = Collar::authored(CollarStyle::Band, &neck_points(&m, &neck)).unwrap();
        collar.correspondence.truncate(2);
        assert!(matches!(fit_collar(&m, &neck, &collar), Err(Error::UnderdeterminedCollar(2))));
    }

    #[test]
    fn collar_names_parse() {
        assert_eq!("turndown".parse::<CollarStyle>().unwrap(), CollarStyle::Turndown);
        assert!("mandarin".parse::<CollarStyle>().is_err());
    }
}
