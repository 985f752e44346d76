//! Strict NRRD subset: 3D, raw encoding, little-endian, axis-aligned.
//!
//! ```text
//! NRRD0004
//! type: uint8|int16|float32
//! dimension: 3
//! sizes: X Y Z
//! encoding: raw
//! endian: little
//! space origin: (x,y,z)
//! space directions: (sx,0,0) (0,sy,0) (0,0,sz)
//!
//! <raw samples, x-fastest>
//! ```

use std::fs;
use std::path::Path;

use super::{IntensityVolume, LabelVolume, VolumeError, VolumeGeometry, WALL};

/// Header fields that carry no geometry and are accepted but ignored on read.
const IGNORED_FIELDS: &[&str] = &["space", "kinds", "content", "space units"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleType {
    U8,
    I16,
    F32,
}

impl SampleType {
    fn size(self) -> usize {
        match self {
            SampleType::U8 => 1,
            SampleType::I16 => 2,
            SampleType::F32 => 4,
        }
    }

    fn name(self) -> &'static str {
        match self {
            SampleType::U8 => "uint8",
            SampleType::I16 => "int16",
            SampleType::F32 => "float32",
        }
    }

    fn parse(value: &str) -> Option<Self> {
        match value {
            "uint8" | "uchar" | "unsigned char" | "uint8_t" => Some(SampleType::U8),
            "int16" | "short" | "short int" | "signed short" | "int16_t" => Some(SampleType::I16),
            "float32" | "float" => Some(SampleType::F32),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NrrdData {
    U8(Vec<u8>),
    I16(Vec<i16>),
    F32(Vec<f32>),
}

/// A volume as stored on disk, before it is interpreted as labels or intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct NrrdVolume {
    pub geometry: VolumeGeometry,
    pub data: NrrdData,
}

impl NrrdVolume {
    pub fn sample_type(&self) -> SampleType {
        match self.data {
            NrrdData::U8(_) => SampleType::U8,
            NrrdData::I16(_) => SampleType::I16,
            NrrdData::F32(_) => SampleType::F32,
        }
    }

    pub fn into_labels(self) -> Result<LabelVolume, VolumeError> {
        let geometry = self.geometry;
        let labels = match self.data {
            NrrdData::U8(v) => {
                check_labels(&geometry, v.iter().map(|&x| x as i64))?;
                v
            }
            NrrdData::I16(v) => {
                check_labels(&geometry, v.iter().map(|&x| x as i64))?;
                v.into_iter().map(|x| x as u8).collect()
            }
            NrrdData::F32(_) => {
                return Err(VolumeError::Format {
                    field: "type".into(),
                    reason: "label volumes must be an integer type".into(),
                })
            }
        };
        LabelVolume::new(geometry, labels)
    }

    pub fn into_intensity(self) -> Result<IntensityVolume, VolumeError> {
        let values = match self.data {
            NrrdData::U8(v) => v.into_iter().map(f32::from).collect(),
            NrrdData::I16(v) => v.into_iter().map(f32::from).collect(),
            NrrdData::F32(v) => v,
        };
        IntensityVolume::new(self.geometry, values)
    }
}

fn check_labels(geometry: &VolumeGeometry, values: impl Iterator<Item = i64>) -> Result<(), VolumeError> {
    for (pos, value) in values.enumerate() {
        if !(0..=WALL as i64).contains(&value) {
            let [i, j, k] = geometry.unravel(pos);
            return Err(VolumeError::InvalidLabel { value, i, j, k });
        }
    }
    Ok(())
}

/// Anything that can be serialized into the NRRD subset.
pub trait NrrdWritable {
    fn geometry(&self) -> &VolumeGeometry;
    fn sample_type(&self) -> SampleType;
    fn sample_count(&self) -> usize;
    fn encode_samples(&self, out: &mut Vec<u8>);
}

impl NrrdWritable for LabelVolume {
    fn geometry(&self) -> &VolumeGeometry {
        LabelVolume::geometry(self)
    }
    fn sample_type(&self) -> SampleType {
        SampleType::U8
    }
    fn sample_count(&self) -> usize {
        self.labels().len()
    }
    fn encode_samples(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(self.labels());
    }
}

impl NrrdWritable for IntensityVolume {
    fn geometry(&self) -> &VolumeGeometry {
        IntensityVolume::geometry(self)
    }
    fn sample_type(&self) -> SampleType {
        SampleType::F32
    }
    fn sample_count(&self) -> usize {
        self.values().len()
    }
    fn encode_samples(&self, out: &mut Vec<u8>) {
        for v in self.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
}

impl NrrdWritable for NrrdVolume {
    fn geometry(&self) -> &VolumeGeometry {
        &self.geometry
    }
    fn sample_type(&self) -> SampleType {
        NrrdVolume::sample_type(self)
    }
    fn sample_count(&self) -> usize {
        match &self.data {
            NrrdData::U8(v) => v.len(),
            NrrdData::I16(v) => v.len(),
            NrrdData::F32(v) => v.len(),
        }
    }
    fn encode_samples(&self, out: &mut Vec<u8>) {
        match &self.data {
            NrrdData::U8(v) => out.extend_from_slice(v),
            NrrdData::I16(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            NrrdData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        }
    }
}

pub fn encode_nrrd<V: NrrdWritable + ?Sized>(volume: &V) -> Result<Vec<u8>, VolumeError> {
    let g = volume.geometry();
    g.validate()?;
    if volume.sample_count() != g.voxel_count() {
        return Err(VolumeError::Invalid(format!(
            "{} samples for dims {:?}",
            volume.sample_count(),
            g.dims
        )));
    }
    let [sx, sy, sz] = g.spacing;
    let [ox, oy, oz] = g.origin;
    let header = format!(
        "NRRD0004\ntype: {}\ndimension: 3\nsizes: {} {} {}\nencoding: raw\nendian: little\n\
         space origin: ({ox},{oy},{oz})\nspace directions: ({sx},0,0) (0,{sy},0) (0,0,{sz})\n\n",
        volume.sample_type().name(),
        g.dims[0],
        g.dims[1],
        g.dims[2],
    );
    let mut out = header.into_bytes();
    out.reserve(g.voxel_count() * volume.sample_type().size());
    volume.encode_samples(&mut out);
    Ok(out)
}

pub fn write_nrrd<V: NrrdWritable + ?Sized>(volume: &V, path: impl AsRef<Path>) -> Result<(), VolumeError> {
    let path = path.as_ref();
    let bytes = encode_nrrd(volume)?;
    fs::write(path, bytes).map_err(|source| VolumeError::Io { path: path.display().to_string(), source })
}

pub fn read_nrrd(path: impl AsRef<Path>) -> Result<NrrdVolume, VolumeError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| VolumeError::Io { path: path.display().to_string(), source })?;
    parse_nrrd(&bytes)
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<LabelVolume, VolumeError> {
    read_nrrd(path)?.into_labels()
}

pub fn read_intensity(path: impl AsRef<Path>) -> Result<IntensityVolume, VolumeError> {
    read_nrrd(path)?.into_intensity()
}

fn format_err(field: &str, reason: impl Into<String>) -> VolumeError {
    VolumeError::Format { field: field.to_string(), reason: reason.into() }
}

pub fn parse_nrrd(bytes: &[u8]) -> Result<NrrdVolume, VolumeError> {
    let header_end = bytes
        .windows(2)
        .position(|w| w == b"\n\n")
        .ok_or_else(|| format_err("header", "no blank line terminating the header"))?;
    let header = std::str::from_utf8(&bytes[..header_end]).map_err(|_| format_err("header", "not valid UTF-8"))?;
    let data = &bytes[header_end + 2..];

    let mut lines = header.lines();
    let magic = lines.next().unwrap_or_default().trim_end_matches('\r');
    if !magic.starts_with("NRRD000") || magic.len() != 8 {
        return Err(format_err("magic", format!("expected NRRD000x, found `{magic}`")));
    }

    let mut sample_type = None;
    let mut dimension = None;
    let mut sizes = None;
    let mut encoding = None;
    let mut endian = None;
    let mut origin = None;
    let mut directions = None;

    for line in lines {
        let line = line.trim_end_matches('\r');
        if line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once(':')
            .ok_or_else(|| format_err(line, "expected `field: value`"))?;
        let key = key.trim();
        // `key:=value` lines are key/value comments in NRRD.
        if value.starts_with('=') {
            continue;
        }
        let value = value.trim();
        match key {
            "type" => {
                sample_type =
                    Some(SampleType::parse(value).ok_or_else(|| format_err("type", format!("unsupported `{value}`")))?)
            }
            "dimension" => {
                if value != "3" {
                    return Err(format_err("dimension", format!("only 3 is supported, found `{value}`")));
                }
                dimension = Some(3);
            }
            "sizes" => sizes = Some(parse_sizes(value)?),
            "encoding" => {
                if value != "raw" {
                    return Err(VolumeError::UnsupportedEncoding(value.to_string()));
                }
                encoding = Some(());
            }
            "endian" => {
                if value != "little" {
                    return Err(format_err("endian", format!("only little is supported, found `{value}`")));
                }
                endian = Some(());
            }
            "space origin" => origin = Some(parse_vector("space origin", value)?),
            "space directions" => directions = Some(parse_directions(value)?),
            other if IGNORED_FIELDS.contains(&other) => {}
            other => return Err(format_err(other, "field not supported by this reader")),
        }
    }

    let sample_type = sample_type.ok_or_else(|| format_err("type", "missing"))?;
    dimension.ok_or_else(|| format_err("dimension", "missing"))?;
    let dims = sizes.ok_or_else(|| format_err("sizes", "missing"))?;
    encoding.ok_or_else(|| format_err("encoding", "missing"))?;
    if endian.is_none() && sample_type != SampleType::U8 {
        return Err(format_err("endian", "missing"));
    }
    let origin = origin.ok_or_else(|| format_err("space origin", "missing"))?;
    let spacing = directions.ok_or_else(|| format_err("space directions", "missing"))?;

    let geometry = VolumeGeometry { dims, spacing, origin };
    geometry.validate().map_err(|e| match e {
        VolumeError::Invalid(reason) => format_err(if dims.contains(&0) { "sizes" } else { "space directions" }, reason),
        other => other,
    })?;

    let count = geometry.voxel_count();
    let expected = count * sample_type.size();
    if data.len() < expected {
        return Err(VolumeError::Truncated { expected, found: data.len() });
    }
    if data.len() > expected {
        return Err(format_err("data", format!("{} trailing bytes after the data block", data.len() - expected)));
    }

    let data = match sample_type {
        SampleType::U8 => NrrdData::U8(data.to_vec()),
        SampleType::I16 => NrrdData::I16(data.chunks_exact(2).map(|c| i16::from_le_bytes([c[0], c[1]])).collect()),
        SampleType::F32 => {
            NrrdData::F32(data.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect())
        }
    };
    Ok(NrrdVolume { geometry, data })
}

fn parse_sizes(value: &str) -> Result<[usize; 3], VolumeError> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(format_err("sizes", format!("expected 3 sizes, found `{value}`")));
    }
    let mut dims = [0; 3];
    for (d, p) in dims.iter_mut().zip(parts) {
        *d = p.parse().map_err(|_| format_err("sizes", format!("`{p}` is not a size")))?;
    }
    Ok(dims)
}

fn parse_vector(field: &str, value: &str) -> Result<[f64; 3], VolumeError> {
    let inner = value
        .trim()
        .strip_prefix('(')
        .and_then(|v| v.strip_suffix(')'))
        .ok_or_else(|| format_err(field, format!("expected `(x,y,z)`, found `{value}`")))?;
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format_err(field, format!("expected 3 components, found `{value}`")));
    }
    let mut out = [0.0f64; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().map_err(|_| format_err(field, format!("`{p}` is not a number")))?;
        if !o.is_finite() {
            return Err(format_err(field, format!("non-finite component `{p}`")));
        }
    }
    Ok(out)
}

fn parse_directions(value: &str) -> Result<[f64; 3], VolumeError> {
    let field = "space directions";
    let vectors: Vec<&str> = value.split_whitespace().collect();
    if vectors.len() != 3 {
        return Err(format_err(field, format!("expected 3 vectors, found `{value}`")));
    }
    let mut spacing = [0.0; 3];
    for (axis, v) in vectors.iter().enumerate() {
        let vec = parse_vector(field, v)?;
        for (c, &x) in vec.iter().enumerate() {
            if c != axis && x != 0.0 {
                return Err(format_err(field, "only axis-aligned directions are supported"));
            }
        }
        spacing[axis] = vec[axis];
    }
    Ok(spacing)
}
