//! Wavefront OBJ and OFF readers/writers.
//!
//! OBJ: `v x y z`, `vt u v`, and triangular `f` records with 1-based indices
//! in the `v`, `v/vt`, `v/vt/vn` or `v//vn` forms. OFF: `OFF` header line,
//! `V F E` counts, vertex lines, then `3 i j k` face lines with 0-based
//! indices. Coordinates are written with shortest round-trip formatting, so
//! write-then-read reproduces them exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::Point3;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mesh::TriMesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Off,
    Auto,
}

impl std::str::FromStr for MeshFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "obj" => Ok(MeshFormat::Obj),
            "off" => Ok(MeshFormat::Off),
            "auto" => Ok(MeshFormat::Auto),
            other => Err(Error::Config(format!("unknown mesh format '{other}'"))),
        }
    }
}

pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<TriMesh> {
    let (mesh, _) = load_mesh_impl(path, format)?;
    Ok(mesh)
}

/// Load an OBJ that carries per-vertex texture coordinates.
///
/// Accepts the layout written by [`write_mesh_with_uv`]: one `vt` per vertex,
/// with faces indexing position and texture slots consistently.
pub fn load_mesh_with_uv(path: &Path) -> Result<(TriMesh, Vec<Complex64>)> {
    let (mesh, uv) = load_mesh_impl(path, MeshFormat::Obj)?;
    match uv {
        Some(uv) if uv.len() == mesh.vertex_count() => Ok((mesh, uv)),
        Some(uv) => Err(Error::CountMismatch {
            uv: uv.len(),
            vertices: mesh.vertex_count(),
        }),
        None => Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: "file has no vt records".into(),
        }),
    }
}

fn load_mesh_impl(path: &Path, format: MeshFormat) -> Result<(TriMesh, Option<Vec<Complex64>>)> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let format = match format {
        MeshFormat::Auto => sniff_format(path, &text),
        f => f,
    };
    match format {
        MeshFormat::Obj => parse_obj(path, &text),
        MeshFormat::Off => parse_off(path, &text).map(|m| (m, None)),
        MeshFormat::Auto => unreachable!(),
    }
}

fn sniff_format(path: &Path, text: &str) -> MeshFormat {
    if let Some(ext) = path.extension().and_then(|e| e.to_str()) {
        match ext.to_ascii_lowercase().as_str() {
            "obj" => return MeshFormat::Obj,
            "off" => return MeshFormat::Off,
            _ => {}
        }
    }
    for line in text.lines() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        if t.eq_ignore_ascii_case("off") || t.to_ascii_uppercase().starts_with("OFF") {
            return MeshFormat::Off;
        }
        return MeshFormat::Obj;
    }
    MeshFormat::Obj
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_f64(path: &Path, line: usize, tok: &str) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| parse_err(path, line, format!("invalid number '{tok}'")))
}

fn parse_obj(path: &Path, text: &str) -> Result<(TriMesh, Option<Vec<Complex64>>)> {
    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut textures: Vec<Complex64> = Vec::new();
    // (position index, texture index or usize::MAX), per face corner
    let mut faces: Vec<([usize; 3], [usize; 3], usize)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut toks = line.split_whitespace();
        let key = toks.next().unwrap();
        match key {
            "v" => {
                let mut coords = [0.0; 3];
                for c in &mut coords {
                    let tok = toks
                        .next()
                        .ok_or_else(|| parse_err(path, lineno, "vertex needs 3 coordinates"))?;
                    *c = parse_f64(path, lineno, tok)?;
                }
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            "vt" => {
                let u = toks
                    .next()
                    .ok_or_else(|| parse_err(path, lineno, "vt needs 2 coordinates"))?;
                let v = toks.next().unwrap_or("0");
                textures.push(Complex64::new(
                    parse_f64(path, lineno, u)?,
                    parse_f64(path, lineno, v)?,
                ));
            }
            "f" => {
                let corners: Vec<&str> = toks.collect();
                if corners.len() != 3 {
                    return Err(parse_err(
                        path,
                        lineno,
                        format!("face has {} vertices, only triangles are supported", corners.len()),
                    ));
                }
                let mut pos = [0usize; 3];
                let mut tex = [usize::MAX; 3];
                for (k, corner) in corners.iter().enumerate() {
                    let mut parts = corner.split('/');
                    let p = parts
                        .next()
                        .filter(|s| !s.is_empty())
                        .ok_or_else(|| parse_err(path, lineno, "empty face corner"))?;
                    let p: i64 = p
                        .parse()
                        .map_err(|_| parse_err(path, lineno, format!("invalid index '{p}'")))?;
                    if p < 1 {
                        return Err(parse_err(
                            path,
                            lineno,
                            format!("face index {p} is not a positive 1-based index"),
                        ));
                    }
                    let p = (p - 1) as usize;
                    if p >= vertices.len() {
                        return Err(parse_err(
                            path,
                            lineno,
                            format!(
                                "face {} references vertex {} but only {} vertices are defined",
                                faces.len(),
                                p + 1,
                                vertices.len()
                            ),
                        ));
                    }
                    pos[k] = p;
                    if let Some(t) = parts.next().filter(|s| !s.is_empty()) {
                        let t: i64 = t.parse().map_err(|_| {
                            parse_err(path, lineno, format!("invalid texture index '{t}'"))
                        })?;
                        if t < 1 || (t as usize) > textures.len() {
                            return Err(parse_err(
                                path,
                                lineno,
                                format!("texture index {t} out of range"),
                            ));
                        }
                        tex[k] = (t - 1) as usize;
                    }
                }
                faces.push((pos, tex, lineno));
            }
            // Materials, normals, groups and the like are irrelevant here.
            _ => {}
        }
    }

    let face_list: Vec<[usize; 3]> = faces.iter().map(|(p, _, _)| *p).collect();
    let mesh = TriMesh::new(vertices, face_list)?;

    // Per-vertex uv: accept either one vt per vertex referenced identically,
    // or map texture slots through the face records.
    let uv = if textures.is_empty() {
        None
    } else {
        let mut per_vertex = vec![None; mesh.vertex_count()];
        for (pos, tex, lineno) in &faces {
            for k in 0..3 {
                let t = if tex[k] == usize::MAX { pos[k] } else { tex[k] };
                if t >= textures.len() {
                    return Err(parse_err(path, *lineno, "texture index out of range"));
                }
                match per_vertex[pos[k]] {
                    None => per_vertex[pos[k]] = Some(textures[t]),
                    Some(prev) if prev == textures[t] => {}
                    Some(_) => {
                        return Err(parse_err(
                            path,
                            *lineno,
                            format!("vertex {} has conflicting texture coordinates", pos[k] + 1),
                        ))
                    }
                }
            }
        }
        let mut out = Vec::with_capacity(mesh.vertex_count());
        for (v, slot) in per_vertex.into_iter().enumerate() {
            match slot {
                Some(c) => out.push(c),
                None => {
                    if v < textures.len() {
                        out.push(textures[v]);
                    } else {
                        return Err(parse_err(
                            path,
                            0,
                            format!("vertex {} has no texture coordinate", v + 1),
                        ));
                    }
                }
            }
        }
        Some(out)
    };
    Ok((mesh, uv))
}

fn parse_off(path: &Path, text: &str) -> Result<TriMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (lineno, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 0, "empty OFF file"))?;
    let mut counts_tokens: Vec<&str> = Vec::new();
    if header.eq_ignore_ascii_case("off") {
        // counts on the next line
    } else if let Some(rest) = header
        .strip_prefix("OFF")
        .or_else(|| header.strip_prefix("off"))
    {
        counts_tokens = rest.split_whitespace().collect();
    } else {
        return Err(parse_err(path, lineno, "missing OFF header"));
    }
    let (counts_line, counts): (usize, Vec<&str>) = if counts_tokens.is_empty() {
        let (l, c) = lines
            .next()
            .ok_or_else(|| parse_err(path, lineno, "missing OFF counts"))?;
        (l, c.split_whitespace().collect())
    } else {
        (lineno, counts_tokens)
    };
    if counts.len() < 2 {
        return Err(parse_err(path, counts_line, "OFF counts need V and F"));
    }
    let nv: usize = counts[0]
        .parse()
        .map_err(|_| parse_err(path, counts_line, "invalid vertex count"))?;
    let nf: usize = counts[1]
        .parse()
        .map_err(|_| parse_err(path, counts_line, "invalid face count"))?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (l, line) = lines
            .next()
            .ok_or_else(|| parse_err(path, 0, "unexpected end of file in vertex list"))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < 3 {
            return Err(parse_err(path, l, "vertex needs 3 coordinates"));
        }
        vertices.push(Point3::new(
            parse_f64(path, l, toks[0])?,
            parse_f64(path, l, toks[1])?,
            parse_f64(path, l, toks[2])?,
        ));
    }
    let mut faces = Vec::with_capacity(nf);
    for fi in 0..nf {
        let (l, line) = lines
            .next()
            .ok_or_else(|| parse_err(path, 0, "unexpected end of file in face list"))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            return Err(parse_err(path, l, "empty face line"));
        }
        let k: usize = toks[0]
            .parse()
            .map_err(|_| parse_err(path, l, "invalid face size"))?;
        if k != 3 {
            return Err(parse_err(
                path,
                l,
                format!("face {fi} has {k} vertices, only triangles are supported"),
            ));
        }
        if toks.len() < 4 {
            return Err(parse_err(path, l, "face needs 3 indices"));
        }
        let mut idx = [0usize; 3];
        for (slot, tok) in idx.iter_mut().zip(&toks[1..4]) {
            let v: usize = tok
                .parse()
                .map_err(|_| parse_err(path, l, format!("invalid index '{tok}'")))?;
            *slot = v;
        }
        faces.push(idx);
    }
    TriMesh::new(vertices, faces)
}

pub fn write_mesh(path: &Path, mesh: &TriMesh) -> Result<()> {
    let mut out = String::new();
    for v in mesh.vertices() {
        writeln!(out, "v {} {} {}", v.x, v.y, v.z).unwrap();
    }
    for f in mesh.faces() {
        writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1).unwrap();
    }
    fs::write(path, out).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Write an OBJ with one `vt` per vertex and `v/vt` face records.
pub fn write_mesh_with_uv(path: &Path, mesh: &TriMesh, uv: &[Complex64]) -> Result<()> {
    write_mesh_with_uv_mtl(path, mesh, uv, None)
}

/// Same as [`write_mesh_with_uv`] with an optional material library
/// reference (`mtllib`/`usemtl`) for textured exports.
pub fn write_mesh_with_uv_mtl(
    path: &Path,
    mesh: &TriMesh,
    uv: &[Complex64],
    material: Option<(&str, &str)>,
) -> Result<()> {
    if uv.len() != mesh.vertex_count() {
        return Err(Error::CountMismatch {
            uv: uv.len(),
            vertices: mesh.vertex_count(),
        });
    }
    let mut out = String::new();
    if let Some((mtllib, usemtl)) = material {
        writeln!(out, "mtllib {mtllib}").unwrap();
        writeln!(out, "usemtl {usemtl}").unwrap();
    }
    for v in mesh.vertices() {
        writeln!(out, "v {} {} {}", v.x, v.y, v.z).unwrap();
    }
    for t in uv {
        writeln!(out, "vt {} {}", t.re, t.im).unwrap();
    }
    for f in mesh.faces() {
        writeln!(
            out,
            "f {0}/{0} {1}/{1} {2}/{2}",
            f[0] + 1,
            f[1] + 1,
            f[2] + 1
        )
        .unwrap();
    }
    fs::write(path, out).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
