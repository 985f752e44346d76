//! Intensity histogram over the voxels inside the plaque.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::volume::{IntensityVolume, VolumeGeometry};

use super::AnalysisError;

/// Number of bins the default width spreads the intensity range over.
pub const DEFAULT_BIN_COUNT: usize = 64;
/// Width used when the inside intensities are all equal or absent.
pub const FALLBACK_BIN_WIDTH: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub bin_lower: f64,
    pub bin_upper: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    /// Contiguous bins from the lowest to the highest occupied one.
    pub bins: Vec<HistogramBin>,
    /// Set when no voxel was inside the plaque.
    pub empty: bool,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lower,bin_upper,count\n");
        for b in &self.bins {
            let _ = writeln!(out, "{},{},{}", b.bin_lower, b.bin_upper, b.count);
        }
        out
    }

    /// Indices of bins whose count exceeds both neighbors (plateaus count once).
    pub fn local_maxima(&self) -> Vec<usize> {
        let counts: Vec<usize> = self.bins.iter().map(|b| b.count).collect();
        let mut peaks = Vec::new();
        let mut i = 0;
        while i < counts.len() {
            let mut j = i;
            while j + 1 < counts.len() && counts[j + 1] == counts[i] {
                j += 1;
            }
            let left = i == 0 || counts[i - 1] < counts[i];
            let right = j + 1 == counts.len() || counts[j + 1] < counts[i];
            if counts[i] > 0 && left && right {
                peaks.push(i);
            }
            i = j + 1;
        }
        peaks
    }
}

/// Checks that two grids coincide (dims exactly, spacing and origin to 1e-6 of a voxel).
pub fn check_same_grid(expected: &VolumeGeometry, actual: &VolumeGeometry) -> Result<(), AnalysisError> {
    let close = |a: f64, b: f64, scale: f64| (a - b).abs() <= 1e-6 * scale;
    let same = expected.dims == actual.dims
        && (0..3).all(|k| {
            close(expected.spacing[k], actual.spacing[k], expected.spacing[k])
                && close(expected.origin[k], actual.origin[k], expected.spacing[k])
        });
    if same {
        Ok(())
    } else {
        Err(AnalysisError::GeometryMismatch(format!(
            "intensity grid {:?}/{:?}/{:?} differs from label grid {:?}/{:?}/{:?}",
            actual.dims, actual.spacing, actual.origin, expected.dims, expected.spacing, expected.origin
        )))
    }
}

/// Fixed-width histogram with bin edges at integer multiples of the width.
/// Without an explicit width, (max − min)/64 of the selected intensities is
/// used, or 1.0 when that range is zero.
pub fn intensity_histogram(
    voxels: &[usize],
    intensities: &IntensityVolume,
    label_geometry: &VolumeGeometry,
    bin_width: Option<f64>,
) -> Result<Histogram, AnalysisError> {
    check_same_grid(label_geometry, intensities.geometry())?;
    if let Some(w) = bin_width {
        if !(w > 0.0 && w.is_finite()) {
            return Err(AnalysisError::InvalidInput(format!("bin width must be positive, got {w}")));
        }
    }
    let values = intensities.values();
    let mut selected = Vec::with_capacity(voxels.len());
    for &v in voxels {
        let x = *values
            .get(v)
            .ok_or_else(|| AnalysisError::InvalidInput(format!("voxel index {v} is outside the volume")))?
            as f64;
        if !x.is_finite() {
            return Err(AnalysisError::InvalidInput(format!("intensity at voxel {v} is not finite")));
        }
        selected.push(x);
    }
    if selected.is_empty() {
        return Ok(Histogram { bin_width: bin_width.unwrap_or(FALLBACK_BIN_WIDTH), bins: Vec::new(), empty: true });
    }
    let min = selected.iter().copied().fold(f64::INFINITY, f64::min);
    let max = selected.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = bin_width.unwrap_or_else(|| {
        let w = (max - min) / DEFAULT_BIN_COUNT as f64;
        if w > 0.0 {
            w
        } else {
            FALLBACK_BIN_WIDTH
        }
    });
    let bin_of = |x: f64| (x / width).floor() as i64;
    let (first, last) = (bin_of(min), bin_of(max));
    let mut counts = vec![0usize; (last - first + 1) as usize];
    for &x in &selected {
        counts[(bin_of(x) - first) as usize] += 1;
    }
    let bins = counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| {
            let b = (first + i as i64) as f64;
            HistogramBin { bin_lower: b * width, bin_upper: (b + 1.0) * width, count }
        })
        .collect();
    Ok(Histogram { bin_width: width, bins, empty: false })
}
