//! PLY (ascii and binary) and OBJ mesh input, binary PLY output.
//!
//! Only vertex positions and face index lists are read; normals, colors and
//! any other elements are skipped. Polygons with more than three corners are
//! fan-triangulated.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::Point3;

use super::mesh::{Mesh, MeshLoad};
use crate::error::{Error, Result};

/// Loads a `.ply` or `.obj` file. Degenerate triangles are dropped and
/// counted; a mesh with no triangles left is an error.
pub fn load_mesh(path: &Path) -> Result<MeshLoad> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    let load = match ext.as_deref() {
        Some("ply") => read_ply(&bytes),
        Some("obj") => read_obj(&String::from_utf8_lossy(&bytes)),
        _ if bytes.starts_with(b"ply") => read_ply(&bytes),
        _ => Err(Error::data("unsupported mesh format (expected .ply or .obj)")),
    }
    .map_err(|e| match e {
        Error::Data(msg) => Error::data(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    if load.mesh.num_triangles() == 0 {
        return Err(Error::data(format!(
            "{}: no non-degenerate triangles",
            path.display()
        )));
    }
    if load.dropped_degenerate > 0 {
        log::info!(
            "{}: dropped {} degenerate triangles",
            path.display(),
            load.dropped_degenerate
        );
    }
    Ok(load)
}

pub fn read_obj(text: &str) -> Result<MeshLoad> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let coords: Vec<f64> = it
                    .take(3)
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::data(format!("obj line {}: bad vertex", lineno + 1)))?;
                if coords.len() != 3 {
                    return Err(Error::data(format!("obj line {}: vertex needs 3 coordinates", lineno + 1)));
                }
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let mut idx = Vec::new();
                for tok in it {
                    let first = tok.split('/').next().unwrap_or("");
                    let raw: i64 = first
                        .parse()
                        .map_err(|_| Error::data(format!("obj line {}: bad face index {tok:?}", lineno + 1)))?;
                    let resolved = if raw > 0 {
                        raw - 1
                    } else if raw < 0 {
                        vertices.len() as i64 + raw
                    } else {
                        -1
                    };
                    if resolved < 0 || resolved >= vertices.len() as i64 {
                        return Err(Error::data(format!(
                            "obj line {}: face index {raw} out of range",
                            lineno + 1
                        )));
                    }
                    idx.push(resolved as u32);
                }
                fan(&idx, &mut triangles, lineno + 1)?;
            }
            _ => {}
        }
    }
    Mesh::new(vertices, triangles)
}

fn fan(idx: &[u32], out: &mut Vec<[u32; 3]>, record: usize) -> Result<()> {
    if idx.len() < 3 {
        return Err(Error::data(format!("face {record} has fewer than 3 vertices")));
    }
    for k in 1..idx.len() - 1 {
        out.push([idx[0], idx[k], idx[k + 1]]);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Encoding {
    Ascii,
    BinaryLe,
    BinaryBe,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            other => return Err(Error::data(format!("unknown ply type {other:?}"))),
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar(String, Scalar),
    List(String, Scalar, Scalar),
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

/// Reads values one at a time from either encoding.
struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
    enc: Encoding,
    tokens: std::str::SplitAsciiWhitespace<'a>,
}

impl<'a> Cursor<'a> {
    fn read(&mut self, ty: Scalar) -> Result<f64> {
        if self.enc == Encoding::Ascii {
            let tok = self
                .tokens
                .next()
                .ok_or_else(|| Error::data("ply body ends early"))?;
            return tok
                .parse::<f64>()
                .map_err(|_| Error::data(format!("bad ply value {tok:?}")));
        }
        let n = ty.size();
        let bytes = self
            .data
            .get(self.pos..self.pos + n)
            .ok_or_else(|| Error::data("ply body ends early"))?;
        self.pos += n;
        let mut buf = [0u8; 8];
        buf[..n].copy_from_slice(bytes);
        if self.enc == Encoding::BinaryBe {
            buf[..n].reverse();
        }
        Ok(match ty {
            Scalar::I8 => buf[0] as i8 as f64,
            Scalar::U8 => buf[0] as f64,
            Scalar::I16 => i16::from_le_bytes([buf[0], buf[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([buf[0], buf[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes(buf[..4].try_into().unwrap()) as f64,
            Scalar::U32 => u32::from_le_bytes(buf[..4].try_into().unwrap()) as f64,
            Scalar::F32 => f32::from_le_bytes(buf[..4].try_into().unwrap()) as f64,
            Scalar::F64 => f64::from_le_bytes(buf),
        })
    }
}

pub fn read_ply(bytes: &[u8]) -> Result<MeshLoad> {
    let header_end = find_header_end(bytes).ok_or_else(|| Error::data("ply header not terminated"))?;
    let header = std::str::from_utf8(&bytes[..header_end.0])
        .map_err(|_| Error::data("ply header is not utf-8"))?;
    let mut lines = header.lines();
    if lines.next().map(str::trim) != Some("ply") {
        return Err(Error::data("missing ply magic"));
    }
    let mut enc = None;
    let mut elements: Vec<Element> = Vec::new();
    for line in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["format", f, _] => {
                enc = Some(match *f {
                    "ascii" => Encoding::Ascii,
                    "binary_little_endian" => Encoding::BinaryLe,
                    "binary_big_endian" => Encoding::BinaryBe,
                    other => return Err(Error::data(format!("unknown ply format {other:?}"))),
                })
            }
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count
                    .parse()
                    .map_err(|_| Error::data(format!("bad element count {count:?}")))?,
                props: Vec::new(),
            }),
            ["property", "list", cnt, item, name] => elements
                .last_mut()
                .ok_or_else(|| Error::data("property before element"))?
                .props
                .push(Property::List(name.to_string(), Scalar::parse(cnt)?, Scalar::parse(item)?)),
            ["property", ty, name] => elements
                .last_mut()
                .ok_or_else(|| Error::data("property before element"))?
                .props
                .push(Property::Scalar(name.to_string(), Scalar::parse(ty)?)),
            ["end_header"] => break,
            _ => {}
        }
    }
    let enc = enc.ok_or_else(|| Error::data("ply header has no format line"))?;
    let body = &bytes[header_end.1..];
    let ascii_body = if enc == Encoding::Ascii {
        std::str::from_utf8(body).map_err(|_| Error::data("ascii ply body is not utf-8"))?
    } else {
        ""
    };
    let mut cur = Cursor {
        data: body,
        pos: 0,
        enc,
        tokens: ascii_body.split_ascii_whitespace(),
    };

    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for el in &elements {
        let xyz: Vec<Option<usize>> = ["x", "y", "z"]
            .iter()
            .map(|n| el.props.iter().position(|p| matches!(p, Property::Scalar(name, _) if name == n)))
            .collect();
        for record in 0..el.count {
            let mut pos = [0.0f64; 3];
            let mut face: Vec<u32> = Vec::new();
            for (pi, prop) in el.props.iter().enumerate() {
                match prop {
                    Property::Scalar(_, ty) => {
                        let val = cur.read(*ty)?;
                        if let Some(axis) = xyz.iter().position(|&p| p == Some(pi)) {
                            pos[axis] = val;
                        }
                    }
                    Property::List(name, cty, ity) => {
                        let n = cur.read(*cty)?;
                        if n.is_nan() || n < 0.0 || n.fract() != 0.0 {
                            return Err(Error::data(format!("bad list length {n}")));
                        }
                        let keep = el.name == "face" && (name == "vertex_indices" || name == "vertex_index");
                        for _ in 0..n as usize {
                            let v = cur.read(*ity)?;
                            if keep {
                                if v.is_nan() || v < 0.0 || v.fract() != 0.0 || v >= vertices.len() as f64 {
                                    return Err(Error::data(format!("face {record}: bad vertex index {v}")));
                                }
                                face.push(v as u32);
                            }
                        }
                    }
                }
            }
            if el.name == "vertex" {
                if xyz.iter().any(Option::is_none) {
                    return Err(Error::data("vertex element lacks x, y or z"));
                }
                vertices.push(Point3::new(pos[0], pos[1], pos[2]));
            } else if el.name == "face" {
                fan(&face, &mut triangles, record)?;
            }
        }
    }
    Mesh::new(vertices, triangles)
}

/// Returns (end of header text, start of body).
fn find_header_end(bytes: &[u8]) -> Option<(usize, usize)> {
    let needle = b"end_header";
    let start = bytes.windows(needle.len()).position(|w| w == needle)?;
    let mut body = start + needle.len();
    if bytes.get(body) == Some(&b'\r') {
        body += 1;
    }
    if bytes.get(body) == Some(&b'\n') {
        body += 1;
    }
    Some((start + needle.len(), body))
}

/// Writes a binary little-endian PLY with double-precision positions, plus
/// optional per-face RGB colors.
pub fn write_ply(path: &Path, mesh: &Mesh, face_colors: Option<&[[u8; 3]]>) -> Result<()> {
    if let Some(c) = face_colors {
        assert_eq!(c.len(), mesh.num_triangles());
    }
    let mut out = Vec::new();
    let mut header = format!(
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nelement face {}\nproperty list uchar int vertex_indices\n",
        mesh.num_vertices(),
        mesh.num_triangles()
    );
    if face_colors.is_some() {
        header.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\n");
    }
    header.push_str("end_header\n");
    out.extend_from_slice(header.as_bytes());
    for v in mesh.vertices() {
        for c in [v.x, v.y, v.z] {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    for (t, tri) in mesh.triangles().iter().enumerate() {
        out.push(3);
        for &i in tri {
            out.extend_from_slice(&(i as i32).to_le_bytes());
        }
        if let Some(colors) = face_colors {
            out.extend_from_slice(&colors[t]);
        }
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&out).map_err(|e| Error::io(path, e))
}
