//! Wavefront OBJ reading and writing (positions and triangle faces only).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{TriMesh, Vec3};
use crate::error::{Error, Result};

/// Parses OBJ text. Polygons with more than three vertices are fan
/// triangulated; normals, texture coordinates and groups are ignored.
pub fn parse_obj(text: &str, path: &Path) -> Result<TriMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let mut tok = line.split_whitespace();
        let bad = |msg: &str| Error::parse(path, format!("line {}: {msg}", lineno + 1));
        match tok.next() {
            Some("v") => {
                let mut c = [0.0; 3];
                for slot in &mut c {
                    *slot = tok
                        .next()
                        .and_then(|t| t.parse::<f64>().ok())
                        .ok_or_else(|| bad("malformed vertex"))?;
                }
                vertices.push(Vec3::from(c));
            }
            Some("f") => {
                let idx: Vec<usize> = tok
                    .map(|t| {
                        let first = t.split('/').next().unwrap_or("");
                        let i: i64 = first.parse().map_err(|_| bad("malformed face index"))?;
                        let resolved = if i < 0 { vertices.len() as i64 + i } else { i - 1 };
                        usize::try_from(resolved).map_err(|_| bad("face index out of range"))
                    })
                    .collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(bad("face with fewer than 3 vertices"));
                }
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    TriMesh::new(vertices, faces).map_err(|e| Error::parse(path, e))
}

pub fn read_obj(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_obj(&text, path)
}

/// OBJ text with round-trip exact coordinates.
pub fn to_obj_string(mesh: &TriMesh) -> String {
    let mut s = String::with_capacity(mesh.vertex_count() * 48 + mesh.face_count() * 24);
    for v in mesh.vertices() {
        let _ = writeln!(s, "v {:?} {:?} {:?}", v.x, v.y, v.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

pub fn write_obj(path: impl AsRef<Path>, mesh: &TriMesh) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_obj_string(mesh)).map_err(|e| Error::io(path, e))
}
