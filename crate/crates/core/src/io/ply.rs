//! PLY (polygon file format) reader and writer for point clouds.
//!
//! The reader accepts ASCII and binary-little-endian 1.0 files whose
//! `vertex` element declares `x`, `y`, `z` as float32 or float64. Extra
//! vertex properties (colors, normals) and non-vertex elements are parsed
//! past and ignored. Big-endian files are rejected as unsupported.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::{Point3, PointCloud};
use crate::hull::HullMesh;

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
    fn parse(word: &str) -> Option<ScalarType> {
        Some(match word {
            "char" | "int8" => ScalarType::I8,
            "uchar" | "uint8" => ScalarType::U8,
            "short" | "int16" => ScalarType::I16,
            "ushort" | "uint16" => ScalarType::U16,
            "int" | "int32" => ScalarType::I32,
            "uint" | "uint32" => ScalarType::U32,
            "float" | "float32" => ScalarType::F32,
            "double" | "float64" => ScalarType::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            ScalarType::I8 | ScalarType::U8 => 1,
            ScalarType::I16 | ScalarType::U16 => 2,
            ScalarType::I32 | ScalarType::U32 | ScalarType::F32 => 4,
            ScalarType::F64 => 8,
        }
    }

    fn read_le(self, buf: &[u8]) -> f64 {
        match self {
            ScalarType::I8 => buf[0] as i8 as f64,
            ScalarType::U8 => buf[0] as f64,
            ScalarType::I16 => i16::from_le_bytes([buf[0], buf[1]]) as f64,
            ScalarType::U16 => u16::from_le_bytes([buf[0], buf[1]]) as f64,
            ScalarType::I32 => i32::from_le_bytes(buf[..4].try_into().unwrap()) as f64,
            ScalarType::U32 => u32::from_le_bytes(buf[..4].try_into().unwrap()) as f64,
            ScalarType::F32 => f32::from_le_bytes(buf[..4].try_into().unwrap()) as f64,
            ScalarType::F64 => f64::from_le_bytes(buf[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: ScalarType },
    List { count_ty: ScalarType, item_ty: ScalarType },
}

#[derive(Debug, Clone)]
struct ElementDecl {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Ascii,
    BinaryLittleEndian,
}

struct Header {
    format: Format,
    elements: Vec<ElementDecl>,
}

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn read_header_line<R: BufRead>(reader: &mut R, path: &Path) -> Result<String> {
    let mut line = Vec::new();
    let n = reader.read_until(b'\n', &mut line)?;
    if n == 0 {
        return Err(parse_err(path, "unexpected end of file in header"));
    }
    let text = String::from_utf8(line)
        .map_err(|_| parse_err(path, "header is not valid UTF-8"))?;
    Ok(text.trim_end_matches(['\r', '\n']).to_string())
}

fn parse_header<R: BufRead>(reader: &mut R, path: &Path) -> Result<Header> {
    let magic = read_header_line(reader, path)?;
    if magic.trim() != "ply" {
        return Err(parse_err(path, "missing 'ply' magic line"));
    }

    let mut format = None;
    let mut elements: Vec<ElementDecl> = Vec::new();
    loop {
        let line = read_header_line(reader, path)?;
        let mut words = line.split_whitespace();
        match words.next() {
            None | Some("comment") | Some("obj_info") => continue,
            Some("format") => {
                let kind = words.next().unwrap_or("");
                format = Some(match kind {
                    "ascii" => Format::Ascii,
                    "binary_little_endian" => Format::BinaryLittleEndian,
                    "binary_big_endian" => {
                        return Err(Error::UnsupportedFormat(
                            "big-endian PLY is not supported".into(),
                        ))
                    }
                    other => {
                        return Err(parse_err(path, format!("unknown PLY format '{other}'")))
                    }
                });
            }
            Some("element") => {
                let name = words
                    .next()
                    .ok_or_else(|| parse_err(path, "element without a name"))?;
                let count: usize = words
                    .next()
                    .and_then(|w| w.parse().ok())
                    .ok_or_else(|| parse_err(path, format!("bad count for element '{name}'")))?;
                elements.push(ElementDecl {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| parse_err(path, "property before any element"))?;
                let first = words
                    .next()
                    .ok_or_else(|| parse_err(path, "property without a type"))?;
                if first == "list" {
                    let count_ty = words
                        .next()
                        .and_then(ScalarType::parse)
                        .ok_or_else(|| parse_err(path, "bad list count type"))?;
                    let item_ty = words
                        .next()
                        .and_then(ScalarType::parse)
                        .ok_or_else(|| parse_err(path, "bad list item type"))?;
                    // list name is ignored; we never interpret list contents
                    element.properties.push(Property::List { count_ty, item_ty });
                } else {
                    let ty = ScalarType::parse(first)
                        .ok_or_else(|| parse_err(path, format!("unknown type '{first}'")))?;
                    let name = words
                        .next()
                        .ok_or_else(|| parse_err(path, "property without a name"))?;
                    element.properties.push(Property::Scalar {
                        name: name.to_string(),
                        ty,
                    });
                }
            }
            Some("end_header") => break,
            Some(other) => {
                return Err(parse_err(path, format!("unexpected header keyword '{other}'")))
            }
        }
    }

    let format = format.ok_or_else(|| parse_err(path, "header missing format line"))?;
    Ok(Header { format, elements })
}

/// Positions of x, y, z among the vertex properties plus their types.
fn vertex_coord_slots(decl: &ElementDecl, path: &Path) -> Result<[(usize, ScalarType); 3]> {
    let mut slots = [None; 3];
    for (i, prop) in decl.properties.iter().enumerate() {
        if let Property::Scalar { name, ty } = prop {
            let slot = match name.as_str() {
                "x" => 0,
                "y" => 1,
                "z" => 2,
                _ => continue,
            };
            if !matches!(ty, ScalarType::F32 | ScalarType::F64) {
                return Err(Error::UnsupportedFormat(format!(
                    "vertex property '{name}' must be float32 or float64"
                )));
            }
            slots[slot] = Some((i, *ty));
        }
    }
    match slots {
        [Some(x), Some(y), Some(z)] => Ok([x, y, z]),
        _ => Err(parse_err(path, "vertex element must declare x, y, z")),
    }
}

/// Reads a point cloud from a PLY file.
pub fn read_ply(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let mut reader = BufReader::new(File::open(path)?);
    let header = parse_header(&mut reader, path)?;

    let mut cloud = PointCloud::default();
    for decl in &header.elements {
        if decl.name == "vertex" {
            let slots = vertex_coord_slots(decl, path)?;
            cloud.points = match header.format {
                Format::Ascii => read_vertices_ascii(&mut reader, decl, slots, path)?,
                Format::BinaryLittleEndian => {
                    read_vertices_binary(&mut reader, decl, slots, path)?
                }
            };
        } else {
            match header.format {
                Format::Ascii => skip_element_ascii(&mut reader, decl, path)?,
                Format::BinaryLittleEndian => skip_element_binary(&mut reader, decl, path)?,
            }
        }
    }
    if !header.elements.iter().any(|e| e.name == "vertex") {
        return Err(parse_err(path, "file has no vertex element"));
    }
    Ok(cloud)
}

fn ascii_rows<'a, R: BufRead>(
    reader: &'a mut R,
    path: &'a Path,
) -> impl Iterator<Item = Result<String>> + 'a {
    let mut lines = reader.lines();
    std::iter::from_fn(move || loop {
        match lines.next() {
            None => return None,
            Some(Err(e)) => return Some(Err(e.into())),
            Some(Ok(line)) => {
                if line.split_whitespace().next().is_some() {
                    return Some(Ok(line));
                }
                // skip blank lines between rows
            }
        }
    })
    .map(move |r| r.map_err(|e: Error| parse_err(path, e.to_string())))
}

fn read_vertices_ascii<R: BufRead>(
    reader: &mut R,
    decl: &ElementDecl,
    slots: [(usize, ScalarType); 3],
    path: &Path,
) -> Result<Vec<Point3>> {
    let mut points = Vec::with_capacity(decl.count);
    let mut rows = ascii_rows(reader, path);
    for row in 0..decl.count {
        let line = rows
            .next()
            .ok_or_else(|| parse_err(path, format!("vertex data truncated at row {row}")))??;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let mut coords = [0.0f64; 3];
        let mut cursor = 0usize;
        for (i, prop) in decl.properties.iter().enumerate() {
            match prop {
                Property::Scalar { .. } => {
                    let tok = tokens.get(cursor).ok_or_else(|| {
                        parse_err(path, format!("vertex row {row} has too few values"))
                    })?;
                    if let Some(slot) = slots.iter().position(|&(idx, _)| idx == i) {
                        coords[slot] = tok.parse::<f64>().map_err(|_| {
                            parse_err(path, format!("bad float '{tok}' in vertex row {row}"))
                        })?;
                    }
                    cursor += 1;
                }
                Property::List { .. } => {
                    let n: usize = tokens
                        .get(cursor)
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| parse_err(path, format!("bad list count in row {row}")))?;
                    cursor += 1 + n;
                }
            }
        }
        let p = Point3::try_new(coords[0], coords[1], coords[2])
            .ok_or_else(|| parse_err(path, format!("non-finite coordinate in row {row}")))?;
        points.push(p);
    }
    Ok(points)
}

fn skip_element_ascii<R: BufRead>(reader: &mut R, decl: &ElementDecl, path: &Path) -> Result<()> {
    let mut rows = ascii_rows(reader, path);
    for row in 0..decl.count {
        rows.next().ok_or_else(|| {
            parse_err(path, format!("element '{}' truncated at row {row}", decl.name))
        })??;
    }
    Ok(())
}

fn read_exact_or_parse_err<R: Read>(reader: &mut R, buf: &mut [u8], path: &Path) -> Result<()> {
    reader
        .read_exact(buf)
        .map_err(|_| parse_err(path, "binary payload truncated"))
}

fn read_vertices_binary<R: BufRead>(
    reader: &mut R,
    decl: &ElementDecl,
    slots: [(usize, ScalarType); 3],
    path: &Path,
) -> Result<Vec<Point3>> {
    let mut points = Vec::with_capacity(decl.count);
    let mut scratch = [0u8; 8];
    for row in 0..decl.count {
        let mut coords = [0.0f64; 3];
        for (i, prop) in decl.properties.iter().enumerate() {
            match prop {
                Property::Scalar { ty, .. } => {
                    let buf = &mut scratch[..ty.size()];
                    read_exact_or_parse_err(reader, buf, path)?;
                    if let Some(slot) = slots.iter().position(|&(idx, _)| idx == i) {
                        coords[slot] = ty.read_le(buf);
                    }
                }
                Property::List { count_ty, item_ty } => {
                    let buf = &mut scratch[..count_ty.size()];
                    read_exact_or_parse_err(reader, buf, path)?;
                    let n = count_ty.read_le(buf) as usize;
                    let mut remaining = n * item_ty.size();
                    while remaining > 0 {
                        let take = remaining.min(8);
                        read_exact_or_parse_err(reader, &mut scratch[..take], path)?;
                        remaining -= take;
                    }
                }
            }
        }
        let p = Point3::try_new(coords[0], coords[1], coords[2])
            .ok_or_else(|| parse_err(path, format!("non-finite coordinate in row {row}")))?;
        points.push(p);
    }
    Ok(points)
}

fn skip_element_binary<R: BufRead>(reader: &mut R, decl: &ElementDecl, path: &Path) -> Result<()> {
    // Fixed-size rows can be skipped in one go; lists force row-by-row reads.
    let has_list = decl
        .properties
        .iter()
        .any(|p| matches!(p, Property::List { .. }));
    if !has_list {
        let row: usize = decl
            .properties
            .iter()
            .map(|p| match p {
                Property::Scalar { ty, .. } => ty.size(),
                Property::List { .. } => unreachable!(),
            })
            .sum();
        let mut remaining = row * decl.count;
        let mut buf = [0u8; 4096];
        while remaining > 0 {
            let take = remaining.min(buf.len());
            read_exact_or_parse_err(reader, &mut buf[..take], path)?;
            remaining -= take;
        }
        return Ok(());
    }
    let mut scratch = [0u8; 8];
    for _ in 0..decl.count {
        for prop in &decl.properties {
            match prop {
                Property::Scalar { ty, .. } => {
                    read_exact_or_parse_err(reader, &mut scratch[..ty.size()], path)?;
                }
                Property::List { count_ty, item_ty } => {
                    read_exact_or_parse_err(reader, &mut scratch[..count_ty.size()], path)?;
                    let n = count_ty.read_le(&scratch[..count_ty.size()]) as usize;
                    let mut remaining = n * item_ty.size();
                    while remaining > 0 {
                        let take = remaining.min(8);
                        read_exact_or_parse_err(reader, &mut scratch[..take], path)?;
                        remaining -= take;
                    }
                }
            }
        }
    }
    Ok(())
}

/// Writes a point cloud as PLY with float64 coordinates.
///
/// Binary output round-trips coordinates bit-exactly; ASCII uses Rust's
/// shortest round-trip float formatting.
pub fn write_ply(cloud: &PointCloud, path: impl AsRef<Path>, binary: bool) -> Result<()> {
    let mut w = BufWriter::new(File::create(path.as_ref())?);
    writeln!(w, "ply")?;
    if binary {
        writeln!(w, "format binary_little_endian 1.0")?;
    } else {
        writeln!(w, "format ascii 1.0")?;
    }
    writeln!(w, "element vertex {}", cloud.len())?;
    writeln!(w, "property double x")?;
    writeln!(w, "property double y")?;
    writeln!(w, "property double z")?;
    writeln!(w, "end_header")?;
    if binary {
        for p in cloud.iter() {
            w.write_all(&p.x.to_le_bytes())?;
            w.write_all(&p.y.to_le_bytes())?;
            w.write_all(&p.z.to_le_bytes())?;
        }
    } else {
        for p in cloud.iter() {
            writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes a hull mesh as ASCII PLY with a `face` element, for inspection.
pub fn write_hull_ply(mesh: &HullMesh, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path.as_ref())?);
    writeln!(w, "ply")?;
    writeln!(w, "format ascii 1.0")?;
    writeln!(w, "element vertex {}", mesh.vertices().len())?;
    writeln!(w, "property double x")?;
    writeln!(w, "property double y")?;
    writeln!(w, "property double z")?;
    writeln!(w, "element face {}", mesh.faces().len())?;
    writeln!(w, "property list uchar int vertex_indices")?;
    writeln!(w, "end_header")?;
    for p in mesh.vertices() {
        writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
    }
    for f in mesh.faces() {
        writeln!(w, "3 {} {} {}", f[0], f[1], f[2])?;
    }
    w.flush()?;
    Ok(())
}
