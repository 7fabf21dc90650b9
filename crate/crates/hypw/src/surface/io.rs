//! Mesh import/export: binary little-endian PLY (with `bdry` and `tag`
//! vertex properties) and Wavefront OBJ.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::mesh::TriMesh;
use crate::hyp3::Point3;
use crate::Error;

/// Writes binary little-endian PLY with double coordinates, `bdry` (uchar) and
/// `tag` (int) vertex properties.
pub fn write_ply<W: Write>(m: &TriMesh, mut w: W) -> Result<(), Error> {
    write!(
        w,
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nproperty uchar bdry\nproperty int tag\nelement face {}\nproperty list uchar int vertex_indices\nend_header\n",
        m.n_vertices(),
        m.triangles.len()
    )?;
    let mut buf = Vec::with_capacity(m.n_vertices() * 29 + m.triangles.len() * 13);
    for (i, p) in m.vertices.iter().enumerate() {
        for c in [p.x, p.y, p.z] {
            buf.extend_from_slice(&c.to_le_bytes());
        }
        buf.push(m.boundary[i] as u8);
        let tag = m.tags.as_ref().map_or(0, |t| t[i]);
        buf.extend_from_slice(&tag.to_le_bytes());
    }
    for t in &m.triangles {
        buf.push(3);
        for &v in t {
            buf.extend_from_slice(&(v as i32).to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

#[derive(Clone, Copy, PartialEq)]
enum Scalar {
    U8,
    I8,
    U16,
    I16,
    U32,
    I32,
    F32,
    F64,
}

impl Scalar {
    fn parse(s: &str) -> Result<Self, Error> {
        Ok(match s {
            "uchar" | "uint8" => Scalar::U8,
            "char" | "int8" => Scalar::I8,
            "ushort" | "uint16" => Scalar::U16,
            "short" | "int16" => Scalar::I16,
            "uint" | "uint32" => Scalar::U32,
            "int" | "int32" => Scalar::I32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            other => return Err(Error::Format(format!("unsupported PLY scalar type {other}"))),
        })
    }

    fn read(self, r: &mut impl Read) -> Result<f64, Error> {
        macro_rules! rd {
            ($t:ty) => {{
                let mut b = [0u8; std::mem::size_of::<$t>()];
                r.read_exact(&mut b)?;
                <$t>::from_le_bytes(b) as f64
            }};
        }
        Ok(match self {
            Scalar::U8 => rd!(u8),
            Scalar::I8 => rd!(i8),
            Scalar::U16 => rd!(u16),
            Scalar::I16 => rd!(i16),
            Scalar::U32 => rd!(u32),
            Scalar::I32 => rd!(i32),
            Scalar::F32 => rd!(f32),
            Scalar::F64 => rd!(f64),
        })
    }
}

/// Reads binary little-endian PLY written by [`write_ply`] (or any PLY with
/// `x, y, z` vertex properties and triangular faces; `bdry`/`tag` optional).
pub fn read_ply<R: Read>(r: R) -> Result<TriMesh, Error> {
    let mut r = BufReader::new(r);
    let mut line = String::new();
    let mut nv = 0usize;
    let mut nf = 0usize;
    let mut vprops: Vec<(String, Scalar)> = Vec::new();
    let mut face_list: Option<(Scalar, Scalar)> = None;
    let mut current = String::new();
    r.read_line(&mut line)?;
    if line.trim() != "ply" {
        return Err(Error::Format("missing PLY magic".into()));
    }
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(Error::Format("unterminated PLY header".into()));
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.as_slice() {
            ["end_header"] => break,
            ["format", f, _] if *f != "binary_little_endian" => {
                return Err(Error::Format(format!("unsupported PLY format {f}")))
            }
            ["element", name, n] => {
                current = name.to_string();
                let n: usize = n.parse().map_err(|_| Error::Format("bad element count".into()))?;
                if *name == "vertex" {
                    nv = n;
                } else if *name == "face" {
                    nf = n;
                }
            }
            ["property", "list", c, i, _] if current == "face" => {
                face_list = Some((Scalar::parse(c)?, Scalar::parse(i)?));
            }
            ["property", t, name] if current == "vertex" => vprops.push((name.to_string(), Scalar::parse(t)?)),
            _ => {}
        }
    }
    let mut vertices = Vec::with_capacity(nv);
    let mut boundary = Vec::with_capacity(nv);
    let mut tags = Vec::with_capacity(nv);
    let has_tag = vprops.iter().any(|p| p.0 == "tag");
    for _ in 0..nv {
        let (mut p, mut b, mut t) = ([0.0; 3], None, 0i32);
        for (name, ty) in &vprops {
            let v = ty.read(&mut r)?;
            match name.as_str() {
                "x" => p[0] = v,
                "y" => p[1] = v,
                "z" => p[2] = v,
                "bdry" => b = Some(v != 0.0),
                "tag" => t = v as i32,
                _ => {}
            }
        }
        boundary.push(b.unwrap_or(p[0] == 0.0));
        vertices.push(Point3::from_array(p));
        tags.push(t);
    }
    let (cty, ity) = face_list.ok_or_else(|| Error::Format("PLY has no face list".into()))?;
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let k = cty.read(&mut r)? as usize;
        if k != 3 {
            return Err(Error::Format(format!("non-triangular face with {k} vertices")));
        }
        let mut t = [0usize; 3];
        for v in &mut t {
            *v = ity.read(&mut r)? as usize;
        }
        triangles.push(t);
    }
    Ok(TriMesh { vertices, triangles, boundary, tags: if has_tag { Some(tags) } else { None } })
}

/// Writes OBJ; boundary flags and tags are recorded in comment lines.
pub fn write_obj<W: Write>(m: &TriMesh, mut w: W) -> Result<(), Error> {
    let mut out = String::new();
    for p in &m.vertices {
        out.push_str(&format!("v {:.17e} {:.17e} {:.17e}\n", p.x, p.y, p.z));
    }
    for t in &m.triangles {
        out.push_str(&format!("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
    }
    w.write_all(out.as_bytes())?;
    Ok(())
}

/// Reads the vertices and (triangulated) faces of an OBJ file.
pub fn read_obj<R: Read>(r: R) -> Result<TriMesh, Error> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for line in BufReader::new(r).lines() {
        let line = line?;
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it
                    .take(3)
                    .map(|s| s.parse().map_err(|_| Error::Format(format!("bad vertex line: {line}"))))
                    .collect::<Result<_, _>>()?;
                if c.len() != 3 {
                    return Err(Error::Format(format!("bad vertex line: {line}")));
                }
                vertices.push(Point3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = it
                    .map(|s| {
                        s.split('/')
                            .next()
                            .unwrap_or("")
                            .parse::<usize>()
                            .map(|i| i - 1)
                            .map_err(|_| Error::Format(format!("bad face line: {line}")))
                    })
                    .collect::<Result<_, _>>()?;
                for k in 1..idx.len().saturating_sub(1) {
                    triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Ok(TriMesh::new(vertices, triangles))
}

pub fn save_ply(m: &TriMesh, path: &Path) -> Result<(), Error> {
    write_ply(m, std::io::BufWriter::new(std::fs::File::create(path)?))
}

pub fn load_ply(path: &Path) -> Result<TriMesh, Error> {
    read_ply(std::fs::File::open(path)?)
}
