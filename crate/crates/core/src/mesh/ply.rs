//! PLY output (binary little-endian or ASCII) with float attribute channels,
//! and a reader for the same subset.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::Point3;

use super::{MeshError, TriangleMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlyFormat {
    #[default]
    BinaryLittleEndian,
    Ascii,
}

/// Per-face scalar channels written next to the vertex indices.
pub type FaceAttributes<'a> = &'a [(&'a str, &'a [f64])];

pub fn encode_ply(mesh: &TriangleMesh, face_attributes: FaceAttributes<'_>, format: PlyFormat) -> Result<Vec<u8>, MeshError> {
    mesh.validate()?;
    for (name, values) in face_attributes {
        if values.len() != mesh.triangles.len() {
            return Err(MeshError::Ply(format!(
                "face attribute `{name}` has {} values for {} faces",
                values.len(),
                mesh.triangles.len()
            )));
        }
    }
    let vertex_attrs: Vec<(&str, &[f64])> = mesh.attributes().collect();
    let mut header = String::from("ply\n");
    header.push_str(match format {
        PlyFormat::BinaryLittleEndian => "format binary_little_endian 1.0\n",
        PlyFormat::Ascii => "format ascii 1.0\n",
    });
    let _ = writeln!(header, "element vertex {}", mesh.vertices.len());
    header.push_str("property float x\nproperty float y\nproperty float z\n");
    for (name, _) in &vertex_attrs {
        let _ = writeln!(header, "property float {name}");
    }
    let _ = writeln!(header, "element face {}", mesh.triangles.len());
    header.push_str("property list uchar int vertex_indices\n");
    for (name, _) in face_attributes {
        let _ = writeln!(header, "property float {name}");
    }
    header.push_str("end_header\n");

    let mut out = header.into_bytes();
    match format {
        PlyFormat::BinaryLittleEndian => {
            for (v, p) in mesh.vertices.iter().enumerate() {
                for c in p.iter() {
                    out.extend_from_slice(&(*c as f32).to_le_bytes());
                }
                for (_, values) in &vertex_attrs {
                    out.extend_from_slice(&(values[v] as f32).to_le_bytes());
                }
            }
            for (f, tri) in mesh.triangles.iter().enumerate() {
                out.push(3);
                for &i in tri {
                    out.extend_from_slice(&(i as i32).to_le_bytes());
                }
                for (_, values) in face_attributes {
                    out.extend_from_slice(&(values[f] as f32).to_le_bytes());
                }
            }
        }
        PlyFormat::Ascii => {
            let mut body = String::new();
            for (v, p) in mesh.vertices.iter().enumerate() {
                let _ = write!(body, "{} {} {}", p.x as f32, p.y as f32, p.z as f32);
                for (_, values) in &vertex_attrs {
                    let _ = write!(body, " {}", values[v] as f32);
                }
                body.push('\n');
            }
            for (f, tri) in mesh.triangles.iter().enumerate() {
                let _ = write!(body, "3 {} {} {}", tri[0], tri[1], tri[2]);
                for (_, values) in face_attributes {
                    let _ = write!(body, " {}", values[f] as f32);
                }
                body.push('\n');
            }
            out.extend_from_slice(body.as_bytes());
        }
    }
    Ok(out)
}

pub fn write_ply(
    mesh: &TriangleMesh,
    face_attributes: FaceAttributes<'_>,
    path: impl AsRef<Path>,
    format: PlyFormat,
) -> Result<(), MeshError> {
    let path = path.as_ref();
    let bytes = encode_ply(mesh, face_attributes, format)?;
    fs::write(path, bytes).map_err(|source| MeshError::Io { path: path.display().to_string(), source })
}

/// A mesh read back from PLY together with its face channels.
#[derive(Debug, Clone, PartialEq)]
pub struct PlyMesh {
    pub mesh: TriangleMesh,
    pub face_attributes: Vec<(String, Vec<f64>)>,
}

pub fn read_ply(path: impl AsRef<Path>) -> Result<PlyMesh, MeshError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| MeshError::Io { path: path.display().to_string(), source })?;
    decode_ply(&bytes)
}

pub fn decode_ply(bytes: &[u8]) -> Result<PlyMesh, MeshError> {
    let err = |m: &str| MeshError::Ply(m.to_string());
    let marker = b"end_header\n";
    let end = bytes.windows(marker.len()).position(|w| w == marker).ok_or_else(|| err("missing end_header"))?;
    let header = std::str::from_utf8(&bytes[..end]).map_err(|_| err("header is not UTF-8"))?;
    let body = &bytes[end + marker.len()..];

    let mut format = None;
    let mut vertex_count = 0;
    let mut face_count = 0;
    let mut vertex_props: Vec<String> = Vec::new();
    let mut face_props: Vec<String> = Vec::new();
    let mut current = "";
    for line in header.lines().skip(1) {
        let parts: Vec<&str> = line.split_whitespace().collect();
        match parts.as_slice() {
            ["format", "binary_little_endian", _] => format = Some(PlyFormat::BinaryLittleEndian),
            ["format", "ascii", _] => format = Some(PlyFormat::Ascii),
            ["format", other, _] => return Err(MeshError::Ply(format!("unsupported format {other}"))),
            ["comment", ..] => {}
            ["element", "vertex", n] => {
                vertex_count = n.parse().map_err(|_| err("bad vertex count"))?;
                current = "vertex";
            }
            ["element", "face", n] => {
                face_count = n.parse().map_err(|_| err("bad face count"))?;
                current = "face";
            }
            ["property", "float", name] if current == "vertex" => vertex_props.push(name.to_string()),
            ["property", "list", "uchar", "int", "vertex_indices"] if current == "face" => {}
            ["property", "float", name] if current == "face" => face_props.push(name.to_string()),
            _ => return Err(MeshError::Ply(format!("unsupported header line `{line}`"))),
        }
    }
    let format = format.ok_or_else(|| err("missing format"))?;
    if vertex_props.len() < 3 || vertex_props[..3] != ["x", "y", "z"] {
        return Err(err("vertex element must start with x y z"));
    }

    let nv = vertex_props.len();
    let nf = face_props.len();
    let mut vertex_values = vec![vec![0.0f64; vertex_count]; nv];
    let mut face_values = vec![vec![0.0f64; face_count]; nf];
    let mut triangles = Vec::with_capacity(face_count);

    match format {
        PlyFormat::BinaryLittleEndian => {
            let mut pos = 0usize;
            let mut take = |n: usize| -> Result<&[u8], MeshError> {
                let s = body.get(pos..pos + n).ok_or_else(|| err("truncated body"))?;
                pos += n;
                Ok(s)
            };
            let f32_at = |s: &[u8]| f32::from_le_bytes([s[0], s[1], s[2], s[3]]) as f64;
            for v in 0..vertex_count {
                for values in vertex_values.iter_mut() {
                    values[v] = f32_at(take(4)?);
                }
            }
            for f in 0..face_count {
                if take(1)?[0] != 3 {
                    return Err(err("only triangles are supported"));
                }
                let mut tri = [0usize; 3];
                for t in &mut tri {
                    let s = take(4)?;
                    let i = i32::from_le_bytes([s[0], s[1], s[2], s[3]]);
                    *t = usize::try_from(i).map_err(|_| err("negative vertex index"))?;
                }
                triangles.push(tri);
                for values in face_values.iter_mut() {
                    values[f] = f32_at(take(4)?);
                }
            }
        }
        PlyFormat::Ascii => {
            let text = std::str::from_utf8(body).map_err(|_| err("body is not UTF-8"))?;
            let mut lines = text.lines();
            let mut next_numbers = |expected: usize| -> Result<Vec<f64>, MeshError> {
                let line = lines.next().ok_or_else(|| err("truncated body"))?;
                let nums: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse::<f64>).collect();
                let nums = nums.map_err(|_| err("bad number"))?;
                if nums.len() != expected {
                    return Err(err("wrong number of values on a line"));
                }
                Ok(nums)
            };
            for v in 0..vertex_count {
                for (values, x) in vertex_values.iter_mut().zip(next_numbers(nv)?) {
                    values[v] = x;
                }
            }
            for f in 0..face_count {
                let nums = next_numbers(4 + nf)?;
                if nums[0] != 3.0 {
                    return Err(err("only triangles are supported"));
                }
                triangles.push([nums[1] as usize, nums[2] as usize, nums[3] as usize]);
                for (values, &x) in face_values.iter_mut().zip(&nums[4..]) {
                    values[f] = x;
                }
            }
        }
    }

    let vertices =
        (0..vertex_count).map(|v| Point3::new(vertex_values[0][v], vertex_values[1][v], vertex_values[2][v])).collect();
    let mut mesh = TriangleMesh::new(vertices, triangles);
    for (name, values) in vertex_props.into_iter().zip(vertex_values).skip(3) {
        mesh.set_attribute(name, values)?;
    }
    mesh.validate()?;
    Ok(PlyMesh { mesh, face_attributes: face_props.into_iter().zip(face_values).collect() })
}
