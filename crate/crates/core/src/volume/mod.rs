//! Voxel volumes: labeled vessel-wall masks and paired intensity images.
//!
//! All geometry is carried in millimeters. Voxel `(i, j, k)` has its center at
//! `origin + (i, j, k) * spacing`, and data is stored x-fastest.

mod nrrd;
mod phantom;

pub use nrrd::{
    encode_nrrd, parse_nrrd, read_intensity, read_labels, read_nrrd, write_nrrd, NrrdData, NrrdVolume, NrrdWritable,
    SampleType,
};
pub use phantom::{generate_phantom, Bump, BumpProfile, GroundTruth, PhantomKind, PhantomSpec};

use nalgebra::Point3;
use thiserror::Error;

pub const BACKGROUND: u8 = 0;
pub const LUMEN: u8 = 1;
pub const WALL: u8 = 2;

#[derive(Debug, Error)]
pub enum VolumeError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed NRRD header field `{field}`: {reason}")]
    Format { field: String, reason: String },
    #[error("unsupported NRRD encoding `{0}` (only raw is supported)")]
    UnsupportedEncoding(String),
    #[error("data block truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("invalid label {value} at voxel ({i}, {j}, {k})")]
    InvalidLabel { value: i64, i: usize, j: usize, k: usize },
    #[error("invalid volume: {0}")]
    Invalid(String),
}

/// Grid placement shared by label and intensity volumes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeGeometry {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub origin: [f64; 3],
}

impl VolumeGeometry {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], origin: [f64; 3]) -> Result<Self, VolumeError> {
        let geometry = Self { dims, spacing, origin };
        geometry.validate()?;
        Ok(geometry)
    }

    pub fn validate(&self) -> Result<(), VolumeError> {
        if self.dims.iter().any(|&d| d == 0) {
            return Err(VolumeError::Invalid(format!("zero-sized dimension in {:?}", self.dims)));
        }
        if self.spacing.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(VolumeError::Invalid(format!(
                "spacing must be strictly positive, got {:?}",
                self.spacing
            )));
        }
        if self.origin.iter().any(|o| !o.is_finite()) {
            return Err(VolumeError::Invalid(format!("non-finite origin {:?}", self.origin)));
        }
        Ok(())
    }

    pub fn voxel_count(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn voxel_volume(&self) -> f64 {
        self.spacing[0] * self.spacing[1] * self.spacing[2]
    }

    #[inline]
    pub fn linear_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn unravel(&self, index: usize) -> [usize; 3] {
        let i = index % self.dims[0];
        let rest = index / self.dims[0];
        [i, rest % self.dims[1], rest / self.dims[1]]
    }

    /// World position (mm) of a voxel center.
    #[inline]
    pub fn voxel_center(&self, i: usize, j: usize, k: usize) -> Point3<f64> {
        Point3::new(
            self.origin[0] + i as f64 * self.spacing[0],
            self.origin[1] + j as f64 * self.spacing[1],
            self.origin[2] + k as f64 * self.spacing[2],
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelVolume {
    geometry: VolumeGeometry,
    labels: Vec<u8>,
}

impl LabelVolume {
    pub fn new(geometry: VolumeGeometry, labels: Vec<u8>) -> Result<Self, VolumeError> {
        geometry.validate()?;
        if labels.len() != geometry.voxel_count() {
            return Err(VolumeError::Invalid(format!(
                "label array has {} entries, dims {:?} require {}",
                labels.len(),
                geometry.dims,
                geometry.voxel_count()
            )));
        }
        if let Some(pos) = labels.iter().position(|&l| l > WALL) {
            let [i, j, k] = geometry.unravel(pos);
            return Err(VolumeError::InvalidLabel { value: labels[pos] as i64, i, j, k });
        }
        Ok(Self { geometry, labels })
    }

    pub fn geometry(&self) -> &VolumeGeometry {
        &self.geometry
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> u8 {
        self.labels[self.geometry.linear_index(i, j, k)]
    }

    pub fn count(&self, label: u8) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntensityVolume {
    geometry: VolumeGeometry,
    values: Vec<f32>,
}

impl IntensityVolume {
    pub fn new(geometry: VolumeGeometry, values: Vec<f32>) -> Result<Self, VolumeError> {
        geometry.validate()?;
        if values.len() != geometry.voxel_count() {
            return Err(VolumeError::Invalid(format!(
                "intensity array has {} entries, dims {:?} require {}",
                values.len(),
                geometry.dims,
                geometry.voxel_count()
            )));
        }
        Ok(Self { geometry, values })
    }

    pub fn geometry(&self) -> &VolumeGeometry {
        &self.geometry
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_index_is_x_fastest() {
        let g = VolumeGeometry::new([3, 4, 5], [1.0, 1.0, 1.0], [0.0; 3]).unwrap();
        assert_eq!(g.linear_index(1, 0, 0), 1);
        assert_eq!(g.linear_index(0, 1, 0), 3);
        assert_eq!(g.linear_index(0, 0, 1), 12);
        for idx in 0..g.voxel_count() {
            let [i, j, k] = g.unravel(idx);
            assert_eq!(g.linear_index(i, j, k), idx);
        }
    }

    #[test]
    fn voxel_centers_follow_origin_and_spacing() {
        let g = VolumeGeometry::new([2, 2, 2], [0.5, 0.25, 2.0], [1.0, -1.0, 3.0]).unwrap();
        let c = g.voxel_center(1, 1, 1);
        assert_eq!(c, Point3::new(1.5, -0.75, 5.0));
    }

    #[test]
    fn rejects_bad_labels_and_geometry() {
        let g = VolumeGeometry::new([2, 1, 1], [1.0; 3], [0.0; 3]).unwrap();
        assert!(matches!(
            LabelVolume::new(g, vec![0, 3]),
            Err(VolumeError::InvalidLabel { value: 3, i: 1, j: 0, k: 0 })
        ));
        assert!(LabelVolume::new(g, vec![0]).is_err());
        assert!(VolumeGeometry::new([0, 1, 1], [1.0; 3], [0.0; 3]).is_err());
        assert!(VolumeGeometry::new([1, 1, 1], [1.0, 0.0, 1.0], [0.0; 3]).is_err());
    }
}
