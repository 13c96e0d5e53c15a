//! PLY mesh reader (ASCII and binary little-endian) and a binary
//! writer. Only vertex positions and face indices are kept; unknown
//! elements and properties are skipped. Quads and larger polygons are
//! fan-triangulated.

use thiserror::Error;

use crate::geom::{GeomError, TriMesh, Vector3};
use crate::{Mesh, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlyError {
    #[error("malformed header: {reason}")]
    MalformedHeader { reason: String },
    #[error("unsupported encoding {format:?}; only ascii and binary_little_endian are supported")]
    UnsupportedEncoding { format: String },
    #[error("face {face} references vertex {index} but the mesh has {vertex_count} vertices")]
    IndexOutOfRange {
        face: usize,
        index: u64,
        vertex_count: usize,
    },
    #[error("unexpected end of data in element {element}")]
    UnexpectedEof { element: String },
    #[error("bad value in element {element}: {detail}")]
    BadValue { element: String, detail: String },
    #[error("mesh invalid: {0}")]
    Geom(GeomError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn parse(word: &str) -> Option<Self> {
        Some(match word {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { ty: ScalarType, name: String },
    List {
        count_ty: ScalarType,
        item_ty: ScalarType,
        name: String,
    },
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Encoding {
    Ascii,
    BinaryLe,
}

fn parse_header(bytes: &[u8]) -> Result<(Encoding, Vec<Element>, usize), PlyError> {
    let bad = |reason: &str| PlyError::MalformedHeader {
        reason: reason.to_string(),
    };

    // The header is ASCII, terminated by an "end_header" line.
    let mut pos = 0;
    let mut lines: Vec<(String, usize)> = Vec::new();
    loop {
        let rest = &bytes[pos..];
        let nl = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| bad("missing end_header"))?;
        let line = String::from_utf8_lossy(&rest[..nl]).trim_end_matches('\r').to_string();
        pos += nl + 1;
        let is_end = line.trim() == "end_header";
        lines.push((line, pos));
        if is_end {
            break;
        }
        if pos >= bytes.len() {
            return Err(bad("missing end_header"));
        }
    }
    let body_start = pos;

    let mut iter = lines.iter().map(|(l, _)| l.as_str());
    if iter.next().map(str::trim) != Some("ply") {
        return Err(bad("missing ply magic"));
    }
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    for line in iter {
        let line = line.trim();
        if line.is_empty() || line.starts_with("comment") || line.starts_with("obj_info") {
            continue;
        }
        if line == "end_header" {
            break;
        }
        let mut words = line.split_whitespace();
        match words.next() {
            Some("format") => {
                let fmt = words.next().unwrap_or("");
                encoding = Some(match fmt {
                    "ascii" => Encoding::Ascii,
                    "binary_little_endian" => Encoding::BinaryLe,
                    other => {
                        return Err(PlyError::UnsupportedEncoding {
                            format: other.to_string(),
                        })
                    }
                });
            }
            Some("element") => {
                let name = words.next().ok_or_else(|| bad("element without name"))?;
                let count: usize = words
                    .next()
                    .and_then(|w| w.parse().ok())
                    .ok_or_else(|| bad("element without a valid count"))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| bad("property before any element"))?;
                let first = words.next().ok_or_else(|| bad("property without type"))?;
                if first == "list" {
                    let count_ty = words
                        .next()
                        .and_then(ScalarType::parse)
                        .ok_or_else(|| bad("bad list count type"))?;
                    let item_ty = words
                        .next()
                        .and_then(ScalarType::parse)
                        .ok_or_else(|| bad("bad list item type"))?;
                    let name = words.next().ok_or_else(|| bad("list without name"))?;
                    element.properties.push(Property::List {
                        count_ty,
                        item_ty,
                        name: name.to_string(),
                    });
                } else {
                    let ty = ScalarType::parse(first)
                        .ok_or_else(|| bad(&format!("unknown property type {first:?}")))?;
                    let name = words.next().ok_or_else(|| bad("property without name"))?;
                    element.properties.push(Property::Scalar {
                        ty,
                        name: name.to_string(),
                    });
                }
            }
            Some(other) => return Err(bad(&format!("unexpected header line {other:?}"))),
            None => {}
        }
    }
    let encoding = encoding.ok_or_else(|| bad("missing format line"))?;
    Ok((encoding, elements, body_start))
}

struct BinReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl BinReader<'_> {
    fn take(&mut self, n: usize, element: &str) -> Result<&[u8], PlyError> {
        if self.pos + n > self.data.len() {
            return Err(PlyError::UnexpectedEof {
                element: element.to_string(),
            });
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn scalar(&mut self, ty: ScalarType, element: &str) -> Result<f64, PlyError> {
        let raw = self.take(ty.size(), element)?;
        Ok(match ty {
            ScalarType::I8 => raw[0] as i8 as f64,
            ScalarType::U8 => raw[0] as f64,
            ScalarType::I16 => i16::from_le_bytes([raw[0], raw[1]]) as f64,
            ScalarType::U16 => u16::from_le_bytes([raw[0], raw[1]]) as f64,
            ScalarType::I32 => i32::from_le_bytes(raw.try_into().unwrap()) as f64,
            ScalarType::U32 => u32::from_le_bytes(raw.try_into().unwrap()) as f64,
            ScalarType::F32 => f32::from_le_bytes(raw.try_into().unwrap()) as f64,
            ScalarType::F64 => f64::from_le_bytes(raw.try_into().unwrap()),
        })
    }
}

fn face_indices(values: &[f64], face: usize, element: &str) -> Result<Vec<u64>, PlyError> {
    values
        .iter()
        .map(|&v| {
            if v < 0.0 || v.fract() != 0.0 {
                Err(PlyError::BadValue {
                    element: element.to_string(),
                    detail: format!("face {face} has non-integer or negative index {v}"),
                })
            } else {
                Ok(v as u64)
            }
        })
        .collect()
}

/// Parses an ASCII or binary little-endian PLY into a triangle mesh.
///
/// Vertex `x`/`y`/`z` must be scalar numeric properties; faces come
/// from a `vertex_indices` (or `vertex_index`) list. Polygons with
/// more than three corners are fan-triangulated around their first
/// vertex, in file order.
pub fn parse_ply(bytes: &[u8]) -> Result<Mesh, PlyError> {
    let (encoding, elements, body_start) = parse_header(bytes)?;

    let mut vertices: Vec<Vector3<Real>> = Vec::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();
    let mut face_count = 0usize;

    let mut push_face = |indices: Vec<u64>, vertex_count: usize| -> Result<(), PlyError> {
        let face = face_count;
        face_count += 1;
        for &i in &indices {
            if i as usize >= vertex_count {
                return Err(PlyError::IndexOutOfRange {
                    face,
                    index: i,
                    vertex_count,
                });
            }
        }
        for w in 1..indices.len().saturating_sub(1) {
            triangles.push([
                indices[0] as u32,
                indices[w] as u32,
                indices[w + 1] as u32,
            ]);
        }
        Ok(())
    };

    match encoding {
        Encoding::Ascii => {
            let body = std::str::from_utf8(&bytes[body_start..]).map_err(|_| PlyError::BadValue {
                element: "body".into(),
                detail: "ascii body is not valid UTF-8".into(),
            })?;
            let mut tokens = body.split_whitespace();
            let mut next_num = |element: &str| -> Result<f64, PlyError> {
                let tok = tokens.next().ok_or_else(|| PlyError::UnexpectedEof {
                    element: element.to_string(),
                })?;
                tok.parse::<f64>().map_err(|_| PlyError::BadValue {
                    element: element.to_string(),
                    detail: format!("not a number: {tok:?}"),
                })
            };
            for element in &elements {
                for _ in 0..element.count {
                    let mut scalars: Vec<(String, f64)> = Vec::new();
                    let mut lists: Vec<(String, Vec<f64>)> = Vec::new();
                    for prop in &element.properties {
                        match prop {
                            Property::Scalar { name, .. } => {
                                scalars.push((name.clone(), next_num(&element.name)?));
                            }
                            Property::List { name, .. } => {
                                let n = next_num(&element.name)? as usize;
                                let mut vals = Vec::with_capacity(n);
                                for _ in 0..n {
                                    vals.push(next_num(&element.name)?);
                                }
                                lists.push((name.clone(), vals));
                            }
                        }
                    }
                    consume_row(element, &scalars, &lists, &mut vertices, &mut push_face)?;
                }
            }
        }
        Encoding::BinaryLe => {
            let mut reader = BinReader {
                data: bytes,
                pos: body_start,
            };
            for element in &elements {
                for _ in 0..element.count {
                    let mut scalars: Vec<(String, f64)> = Vec::new();
                    let mut lists: Vec<(String, Vec<f64>)> = Vec::new();
                    for prop in &element.properties {
                        match prop {
                            Property::Scalar { ty, name } => {
                                scalars.push((name.clone(), reader.scalar(*ty, &element.name)?));
                            }
                            Property::List {
                                count_ty,
                                item_ty,
                                name,
                            } => {
                                let n = reader.scalar(*count_ty, &element.name)? as usize;
                                let mut vals = Vec::with_capacity(n);
                                for _ in 0..n {
                                    vals.push(reader.scalar(*item_ty, &element.name)?);
                                }
                                lists.push((name.clone(), vals));
                            }
                        }
                    }
                    consume_row(element, &scalars, &lists, &mut vertices, &mut push_face)?;
                }
            }
        }
    }

    TriMesh::new(vertices, triangles).map_err(PlyError::Geom)
}

fn consume_row(
    element: &Element,
    scalars: &[(String, f64)],
    lists: &[(String, Vec<f64>)],
    vertices: &mut Vec<Vector3<Real>>,
    push_face: &mut dyn FnMut(Vec<u64>, usize) -> Result<(), PlyError>,
) -> Result<(), PlyError> {
    match element.name.as_str() {
        "vertex" => {
            let coord = |axis: &str| -> Result<f64, PlyError> {
                scalars
                    .iter()
                    .find(|(n, _)| n == axis)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| PlyError::MalformedHeader {
                        reason: format!("vertex element lacks property {axis}"),
                    })
            };
            vertices.push(Vector3::new(coord("x")?, coord("y")?, coord("z")?));
        }
        "face" => {
            let indices = lists
                .iter()
                .find(|(n, _)| n == "vertex_indices" || n == "vertex_index")
                .map(|(_, v)| v.clone())
                .ok_or_else(|| PlyError::MalformedHeader {
                    reason: "face element lacks a vertex_indices list".into(),
                })?;
            if indices.len() >= 3 {
                let idx = face_indices(&indices, 0, &element.name)?;
                push_face(idx, vertices.len())?;
            }
        }
        _ => {}
    }
    Ok(())
}

/// Serializes a mesh as binary little-endian PLY with float32 vertex
/// positions and int32 face indices.
pub fn write_ply(mesh: &Mesh) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(b"ply\n");
    out.extend_from_slice(b"format binary_little_endian 1.0\n");
    out.extend_from_slice(format!("element vertex {}\n", mesh.vertices().len()).as_bytes());
    out.extend_from_slice(b"property float x\nproperty float y\nproperty float z\n");
    out.extend_from_slice(format!("element face {}\n", mesh.triangles().len()).as_bytes());
    out.extend_from_slice(b"property list uchar int vertex_indices\n");
    out.extend_from_slice(b"end_header\n");
    for v in mesh.vertices() {
        for c in v.to_array() {
            out.extend_from_slice(&(c as f32).to_le_bytes());
        }
    }
    for t in mesh.triangles() {
        out.push(3u8);
        for &i in t {
            out.extend_from_slice(&(i as i32).to_le_bytes());
        }
    }
    out
}
