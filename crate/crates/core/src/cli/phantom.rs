//! The `phantom` command: synthetic tube volumes with ground truth.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::volume::{
    generate_phantom, write_nrrd, Bump, IntensityVolume, LabelVolume, PhantomSpec, LUMEN, WALL,
};

use super::CliError;

/// Mean synthetic intensity per label: background, lumen, wall.
const LABEL_INTENSITY: [f32; 3] = [0.0, 400.0, 150.0];
const INTENSITY_NOISE: f64 = 10.0;

#[derive(Debug, Args)]
pub struct PhantomArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Read the full phantom description from a JSON file; the shape flags are then ignored.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 0.3)]
    pub voxel: f64,
    #[arg(long, default_value_t = 3.0)]
    pub lumen_radius: f64,
    #[arg(long, default_value_t = 1.0)]
    pub wall: f64,
    #[arg(long, default_value_t = 40.0)]
    pub length: f64,
    /// Gaussian bump height in mm; no bump when omitted.
    #[arg(long)]
    pub bump_amplitude: Option<f64>,
    /// Axial position of the bump center; defaults to the tube middle.
    #[arg(long)]
    pub bump_position: Option<f64>,
    #[arg(long, default_value_t = 4.0)]
    pub bump_sigma_axial: f64,
    /// Angular width in radians.
    #[arg(long, default_value_t = 0.6)]
    pub bump_sigma_angular: f64,
    /// Standard deviation of the smooth wall-thickness noise (mm).
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write a synthetic intensity volume on the same grid.
    #[arg(long)]
    pub with_intensity: bool,
}

impl PhantomArgs {
    fn to_spec(&self) -> Result<PhantomSpec, CliError> {
        if let Some(path) = &self.spec {
            let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            return serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())));
        }
        let mut spec = PhantomSpec::straight(self.lumen_radius, self.wall, self.length, self.voxel)
            .with_noise(self.noise, self.seed);
        if let Some(amplitude) = self.bump_amplitude {
            let center = self.bump_position.unwrap_or(0.5 * self.length);
            spec = spec.with_bump(Bump::gaussian(center, 0.0, amplitude, self.bump_sigma_axial, self.bump_sigma_angular));
        }
        Ok(spec)
    }
}

/// Piecewise-constant intensities per label plus seeded Gaussian noise.
pub fn synthetic_intensity(labels: &LabelVolume, seed: u64) -> IntensityVolume {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1a7e_5175);
    let noise = Normal::new(0.0, INTENSITY_NOISE).expect("positive sigma");
    let values = labels
        .labels()
        .iter()
        .map(|&l| {
            let base = match l {
                LUMEN => LABEL_INTENSITY[1],
                WALL => LABEL_INTENSITY[2],
                _ => LABEL_INTENSITY[0],
            };
            base + noise.sample(&mut rng) as f32
        })
        .collect();
    IntensityVolume::new(*labels.geometry(), values).expect("same grid")
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(value).expect("serializes") + "\n";
    fs::write(path, json).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

pub(crate) fn phantom_command(args: &PhantomArgs) -> Result<(), CliError> {
    let spec = args.to_spec()?;
    let (labels, truth) = generate_phantom(&spec).map_err(|e| CliError::Input(e.to_string()))?;
    fs::create_dir_all(&args.out).map_err(|e| CliError::Output(format!("{}: {e}", args.out.display())))?;
    let output = |e: crate::volume::VolumeError| CliError::Output(e.to_string());
    write_nrrd(&labels, args.out.join("labels.nrrd")).map_err(output)?;
    write_json(&args.out.join("spec.json"), &spec)?;
    write_json(&args.out.join("ground_truth.json"), &truth)?;
    if args.with_intensity {
        write_nrrd(&synthetic_intensity(&labels, spec.seed), args.out.join("intensity.nrrd")).map_err(output)?;
    }
    println!(
        "phantom: {:?} voxels, excess volume {:.3} mm3 (bumps {:.3} mm3)",
        labels.geometry().dims,
        truth.excess_volume_mm3,
        truth.bump_excess_volume_mm3
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intensity_is_seeded_and_follows_labels() {
        let (labels, _) = generate_phantom(&PhantomSpec::straight(2.0, 1.0, 6.0, 0.5)).unwrap();
        let a = synthetic_intensity(&labels, 3);
        assert_eq!(a.values(), synthetic_intensity(&labels, 3).values());
        assert_ne!(a.values(), synthetic_intensity(&labels, 4).values());
        let mean = |label: u8| {
            let v: Vec<f64> = labels
                .labels()
                .iter()
                .zip(a.values())
                .filter(|(&l, _)| l == label)
                .map(|(_, &x)| x as f64)
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!((mean(WALL) - 150.0).abs() < 3.0);
        assert!((mean(LUMEN) - 400.0).abs() < 3.0);
    }
}
