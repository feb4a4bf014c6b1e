//! ASCII OBJ and PLY mesh ingestion.

use nalgebra::Point3;
use std::io::Write;
use std::path::Path;

use crate::error::{GeomError, Result};
use crate::mesh::TriangleMesh;

/// Loads an ASCII OBJ or PLY file, dispatching on the extension.
pub fn load_mesh(path: &Path) -> Result<TriangleMesh> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    let text = std::fs::read_to_string(path).map_err(|source| GeomError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let name = path.display().to_string();
    match ext.as_str() {
        "obj" => parse_obj(&text, &name),
        "ply" => parse_ply(&text, &name),
        other => Err(GeomError::Parse {
            path: name,
            line: 0,
            message: format!("unsupported mesh format '{other}' (expected obj or ply)"),
        }),
    }
}

fn parse_obj(text: &str, name: &str) -> Result<TriangleMesh> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let mut coords = [0.0f64; 3];
                for c in coords.iter_mut() {
                    *c = parts
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| GeomError::Parse {
                            path: name.to_string(),
                            line: lineno + 1,
                            message: "malformed vertex record".to_string(),
                        })?;
                }
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let idx: Vec<&str> = parts.collect();
                if idx.len() != 3 {
                    return Err(GeomError::NonTriangularFace {
                        line: lineno + 1,
                        arity: idx.len(),
                    });
                }
                let mut tri = [0u32; 3];
                for (k, token) in idx.iter().enumerate() {
                    // "f 1", "f 1/2", "f 1/2/3" and "f 1//3" all reference vertex 1.
                    let v = token.split('/').next().unwrap_or("");
                    let parsed: i64 = v.parse().map_err(|_| GeomError::Parse {
                        path: name.to_string(),
                        line: lineno + 1,
                        message: format!("bad face index '{token}'"),
                    })?;
                    if parsed < 1 {
                        return Err(GeomError::Parse {
                            path: name.to_string(),
                            line: lineno + 1,
                            message: format!("face index {parsed} not positive"),
                        });
                    }
                    tri[k] = (parsed - 1) as u32;
                }
                triangles.push(tri);
            }
            _ => {}
        }
    }
    TriangleMesh::new(vertices, triangles)
}

fn parse_ply(text: &str, name: &str) -> Result<TriangleMesh> {
    let mut lines = text.lines().enumerate();
    let err = |line: usize, message: String| GeomError::Parse {
        path: name.to_string(),
        line,
        message,
    };

    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(err(1, "missing 'ply' magic".into())),
    }

    let mut vertex_count = 0usize;
    let mut face_count = 0usize;
    let mut vertex_props: Vec<String> = Vec::new();
    let mut in_vertex_element = false;
    let mut header_end = 0usize;
    for (lineno, raw) in lines.by_ref() {
        let line = raw.trim();
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("format") => {
                if parts.next() != Some("ascii") {
                    return Err(err(lineno + 1, "only ascii PLY is supported".into()));
                }
            }
            Some("element") => match parts.next() {
                Some("vertex") => {
                    vertex_count = parts
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| err(lineno + 1, "bad vertex count".into()))?;
                    in_vertex_element = true;
                }
                Some("face") => {
                    face_count = parts
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| err(lineno + 1, "bad face count".into()))?;
                    in_vertex_element = false;
                }
                _ => in_vertex_element = false,
            },
            Some("property") => {
                if in_vertex_element {
                    let tokens: Vec<&str> = parts.collect();
                    if let Some(prop_name) = tokens.last() {
                        vertex_props.push((*prop_name).to_string());
                    }
                }
            }
            Some("end_header") => {
                header_end = lineno + 1;
                break;
            }
            _ => {}
        }
    }
    if header_end == 0 {
        return Err(err(0, "missing end_header".into()));
    }

    let x_col = vertex_props.iter().position(|p| p == "x");
    let y_col = vertex_props.iter().position(|p| p == "y");
    let z_col = vertex_props.iter().position(|p| p == "z");
    let (x_col, y_col, z_col) = match (x_col, y_col, z_col) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return Err(err(header_end, "vertex element lacks x/y/z properties".into())),
    };

    let mut vertices = Vec::with_capacity(vertex_count);
    for _ in 0..vertex_count {
        let (lineno, raw) = lines
            .next()
            .ok_or_else(|| err(header_end, "truncated vertex data".into()))?;
        let cols: Vec<f64> = raw
            .split_whitespace()
            .map(|s| s.parse().unwrap_or(f64::NAN))
            .collect();
        let get = |c: usize| -> Result<f64> {
            cols.get(c)
                .copied()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(lineno + 1, "malformed vertex line".into()))
        };
        vertices.push(Point3::new(get(x_col)?, get(y_col)?, get(z_col)?));
    }

    let mut triangles = Vec::with_capacity(face_count);
    for _ in 0..face_count {
        let (lineno, raw) = lines
            .next()
            .ok_or_else(|| err(header_end, "truncated face data".into()))?;
        let cols: Vec<i64> = raw
            .split_whitespace()
            .map(|s| s.parse().unwrap_or(-1))
            .collect();
        let arity = *cols
            .first()
            .ok_or_else(|| err(lineno + 1, "empty face line".into()))?;
        if arity != 3 {
            return Err(GeomError::NonTriangularFace {
                line: lineno + 1,
                arity: arity.max(0) as usize,
            });
        }
        if cols.len() < 4 || cols[1..4].iter().any(|&v| v < 0) {
            return Err(err(lineno + 1, "malformed face line".into()));
        }
        triangles.push([cols[1] as u32, cols[2] as u32, cols[3] as u32]);
    }

    TriangleMesh::new(vertices, triangles)
}

/// Writes an ASCII OBJ file. Output is byte-deterministic for identical input.
pub fn write_obj(mesh: &TriangleMesh, path: &Path) -> Result<()> {
    let io_err = |source| GeomError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
    for v in mesh.vertices() {
        writeln!(out, "v {} {} {}", v.x, v.y, v.z).map_err(io_err)?;
    }
    for t in mesh.triangles() {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1).map_err(io_err)?;
    }
    out.flush().map_err(io_err)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn obj_round_trip_preserves_geometry() {
        let mesh = crate::primitives::icosphere(1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.obj");
        write_obj(&mesh, &path).unwrap();
        let loaded = load_mesh(&path).unwrap();
        assert_eq!(loaded.vertex_count(), mesh.vertex_count());
        assert_eq!(loaded.triangle_count(), mesh.triangle_count());
        for (a, b) in loaded.vertices().iter().zip(mesh.vertices()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn quad_faces_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("quad.obj");
        std::fs::write(
            &path,
            "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n",
        )
        .unwrap();
        match load_mesh(&path) {
            Err(GeomError::NonTriangularFace { arity, .. }) => assert_eq!(arity, 4),
            other => panic!("expected NonTriangularFace, got {other:?}"),
        }
    }

    #[test]
    fn ascii_ply_parses() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tet.ply");
        std::fs::write(
            &path,
            "ply\nformat ascii 1.0\nelement vertex 4\nproperty float x\nproperty float y\nproperty float z\nelement face 4\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 2 1\n3 0 1 3\n3 0 3 2\n3 1 2 3\n",
        )
        .unwrap();
        let mesh = load_mesh(&path).unwrap();
        assert_eq!(mesh.vertex_count(), 4);
        assert_eq!(mesh.triangle_count(), 4);
        assert_eq!(mesh.offending_edge_count(), 0);
    }

    #[test]
    fn icosahedron_obj_example() {
        let mesh = crate::primitives::icosahedron();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ico.obj");
        write_obj(&mesh, &path).unwrap();
        let loaded = load_mesh(&path).unwrap();
        assert_eq!(loaded.vertex_count(), 12);
        assert_eq!(loaded.triangle_count(), 20);
        for (p, n) in loaded.vertices().iter().zip(loaded.vertex_normals()) {
            assert!((p.coords.normalize() - n).norm() < 1e-9);
        }
    }
}
