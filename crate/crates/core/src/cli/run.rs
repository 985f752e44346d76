//! The `run` command: one artery per label volume.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{build_report, PlaqueReport, UnfoldSummary};
use crate::mesh::ply::{encode_ply, PlyFormat};
use crate::mesh::{TriangleMesh, VWT};
use crate::plaque::{extract_from_surfaces, wall_surfaces, ExtractionOutcome, PipelineConfig, ThresholdMode};
use crate::unfold::{lscm_unfold, render_unfolded};
use crate::volume::{read_intensity, read_labels, IntensityVolume};

use super::{CliError, RunArgs, ThresholdChoice};

/// Everything one artery run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub labels_path: PathBuf,
    pub intensity_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// Threshold modes to run; with more than one each writes to its own subdirectory.
    pub modes: Vec<ThresholdMode>,
    pub pipeline: PipelineConfig,
    pub bin_width: Option<f64>,
    pub vwt_range: Option<[f64; 2]>,
    pub debug_stages: bool,
    pub ply_format: PlyFormat,
}

impl RunConfig {
    pub fn new(labels_path: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            labels_path: labels_path.into(),
            intensity_path: None,
            output_dir: output_dir.into(),
            modes: vec![ThresholdMode::CaseSpecific],
            pipeline: PipelineConfig::default(),
            bin_width: None,
            vwt_range: None,
            debug_stages: false,
            ply_format: PlyFormat::BinaryLittleEndian,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSummary {
    pub mode: ThresholdMode,
    pub pt: f64,
    pub plaque: bool,
    pub volume_mm3: Option<f64>,
    pub area_mm2: Option<f64>,
    /// Output subdirectory relative to the run directory.
    pub directory: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub labels: String,
    pub modes: Vec<ModeSummary>,
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

fn write_mesh(path: &Path, mesh: &TriangleMesh, format: PlyFormat) -> Result<(), CliError> {
    let bytes = encode_ply(mesh, &[], format).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
    write_file(path, bytes)
}

/// Default color range: 0 up to the region maximum rounded up to 0.5 mm.
fn default_vwt_range(vwt: &[f64]) -> [f64; 2] {
    let max = vwt.iter().copied().fold(0.0, f64::max);
    [0.0, ((max / 0.5).ceil() * 0.5).max(0.5)]
}

/// Runs the pipeline on one artery and writes all artifacts.
pub fn run(config: &RunConfig) -> Result<RunSummary, CliError> {
    let labels = read_labels(&config.labels_path)
        .map_err(|e| CliError::Input(format!("{}: {e}", config.labels_path.display())))?;
    let intensity: Option<IntensityVolume> = match &config.intensity_path {
        Some(path) => {
            let volume = read_intensity(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            crate::analysis::histogram::check_same_grid(labels.geometry(), volume.geometry())
                .map_err(|e| CliError::Input(e.to_string()))?;
            Some(volume)
        }
        None => None,
    };
    if config.modes.is_empty() {
        return Err(CliError::Input("no threshold mode selected".into()));
    }
    let mut pipeline = config.pipeline.clone();
    pipeline.keep_stages = config.debug_stages;
    pipeline.validate().map_err(|e| CliError::Input(e.to_string()))?;
    if let Some(w) = config.bin_width {
        if !(w > 0.0 && w.is_finite()) {
            return Err(CliError::Input(format!("bin width must be positive, got {w}")));
        }
    }
    if let Some([lo, hi]) = config.vwt_range {
        if !(lo < hi) {
            return Err(CliError::Input(format!("color range [{lo}, {hi}] must satisfy min < max")));
        }
    }

    let surfaces = wall_surfaces(&labels, pipeline.smooth_iterations, pipeline.smooth_relaxation)
        .map_err(|e| CliError::stage("surface", e))?;
    create_dir(&config.output_dir)?;
    write_mesh(&config.output_dir.join("inner.ply"), &surfaces.inner, config.ply_format)?;

    let mut summary = RunSummary { labels: config.labels_path.display().to_string(), modes: Vec::new() };
    let mut outer_written = false;
    for &mode in &config.modes {
        let dir = if config.modes.len() > 1 { config.output_dir.join(mode.label()) } else { config.output_dir.clone() };
        create_dir(&dir)?;
        pipeline.mode = mode;
        let outcome = extract_from_surfaces(&surfaces, &pipeline).map_err(CliError::from_pipeline)?;
        if !outer_written {
            let mut outer = surfaces.outer.clone();
            outer.set_attribute(VWT, outcome.outer_distances.clone()).map_err(|e| CliError::stage("distance", e))?;
            write_mesh(&config.output_dir.join("outer.ply"), &outer, config.ply_format)?;
            outer_written = true;
        }
        let report = write_mode_artifacts(&dir, config, &labels, intensity.as_ref(), &outcome)?;
        summary.modes.push(ModeSummary {
            mode,
            pt: outcome.threshold.pt,
            plaque: report.geometry.is_some(),
            volume_mm3: report.geometry.map(|g| g.volume_mm3),
            area_mm2: report.geometry.map(|g| g.area_mm2),
            directory: if config.modes.len() > 1 { mode.label().to_string() } else { ".".to_string() },
        });
    }
    if config.modes.len() > 1 {
        let json = serde_json::to_string_pretty(&summary.modes).expect("summary serializes") + "\n";
        write_file(&config.output_dir.join("comparison.json"), json)?;
    }
    Ok(summary)
}

fn write_mode_artifacts(
    dir: &Path,
    config: &RunConfig,
    labels: &crate::volume::LabelVolume,
    intensity: Option<&IntensityVolume>,
    outcome: &ExtractionOutcome,
) -> Result<PlaqueReport, CliError> {
    for stale in ["plaque.ply", "unfolded.svg", "unfolded.ply", "histogram.csv"] {
        let path = dir.join(stale);
        if path.exists() {
            fs::remove_file(&path).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
        }
    }
    let (mut report, histogram) = build_report(outcome, labels.geometry(), intensity, config.bin_width)
        .map_err(|e| CliError::stage("analysis", e))?;

    if let Some(plaque) = &outcome.plaque {
        write_mesh(&dir.join("plaque.ply"), &plaque.mesh, config.ply_format)?;
    }
    if let (Some(region), Some(_)) = (&outcome.outer_region, &outcome.plaque) {
        let patch = lscm_unfold(&region.mesh).map_err(|e| CliError::stage("unfold", e))?;
        let range = config.vwt_range.unwrap_or_else(|| default_vwt_range(&patch.vwt));
        let svg = render_unfolded(&patch, range).map_err(|e| CliError::stage("unfold", e))?;
        write_file(&dir.join("unfolded.svg"), svg)?;
        let ply = patch.encode_ply(config.ply_format).map_err(|e| CliError::stage("unfold", e))?;
        write_file(&dir.join("unfolded.ply"), ply)?;
        if patch.flipped_triangles > 0 {
            report.warnings.push(format!("{} triangles are flipped in the unfolded map", patch.flipped_triangles));
        }
        report.unfold = Some(UnfoldSummary::from(&patch));
    }
    if let Some(h) = &histogram {
        write_file(&dir.join("histogram.csv"), h.to_csv())?;
    }
    if config.debug_stages {
        let stages = dir.join("stages");
        create_dir(&stages)?;
        for stage in &outcome.stages {
            write_mesh(&stages.join(format!("{}.ply", stage.name)), &stage.mesh, config.ply_format)?;
        }
    }
    write_file(&dir.join("report.json"), report.to_json())?;
    Ok(report)
}

fn print_summary(summary: &RunSummary) {
    println!("{}", summary.labels);
    println!("  {:<14} {:>8} {:>9} {:>12} {:>10}", "mode", "pt_mm", "plaque", "volume_mm3", "area_mm2");
    for m in &summary.modes {
        let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.3}"));
        println!(
            "  {:<14} {:>8.4} {:>9} {:>12} {:>10}",
            m.mode.label(),
            m.pt,
            if m.plaque { "extracted" } else { "none" },
            fmt(m.volume_mm3),
            fmt(m.area_mm2)
        );
    }
}

pub(crate) fn run_command(args: &RunArgs) -> Result<(), CliError> {
    if !args.intensity.is_empty() && args.intensity.len() != args.labels.len() {
        return Err(CliError::Input(format!(
            "{} intensity volumes given for {} label volumes",
            args.intensity.len(),
            args.labels.len()
        )));
    }
    if args.jobs == 0 {
        return Err(CliError::Input("--jobs must be at least 1".into()));
    }
    let modes = match args.threshold_mode {
        ThresholdChoice::Global => vec![ThresholdMode::Global],
        ThresholdChoice::Case => vec![ThresholdMode::CaseSpecific],
        ThresholdChoice::Both => vec![ThresholdMode::Global, ThresholdMode::CaseSpecific],
    };
    let pipeline = PipelineConfig {
        k: args.k,
        smooth_iterations: args.smooth_iters,
        smooth_relaxation: args.smooth_relax,
        min_region_area: args.min_area,
        ..PipelineConfig::default()
    };
    let vwt_range = args.vwt_range.as_ref().map(|r| [r[0], r[1]]);
    let configs: Vec<RunConfig> = args
        .labels
        .iter()
        .enumerate()
        .map(|(i, labels)| {
            let output_dir = if args.labels.len() == 1 {
                args.out.clone()
            } else {
                let stem = labels.file_stem().map_or_else(|| format!("artery{i}"), |s| s.to_string_lossy().into_owned());
                args.out.join(stem)
            };
            RunConfig {
                labels_path: labels.clone(),
                intensity_path: args.intensity.get(i).cloned(),
                output_dir,
                modes: modes.clone(),
                pipeline: pipeline.clone(),
                bin_width: args.bin_width,
                vwt_range,
                debug_stages: args.debug_stages,
                ply_format: if args.ascii_ply { PlyFormat::Ascii } else { PlyFormat::BinaryLittleEndian },
            }
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| CliError::Input(format!("thread pool: {e}")))?;
    let results: Vec<Result<RunSummary, CliError>> = if args.jobs > 1 && configs.len() > 1 {
        pool.install(|| configs.par_iter().map(run).collect())
    } else {
        configs.iter().map(run).collect()
    };
    // report every artery, then fail with the most severe error
    let mut worst: Option<CliError> = None;
    for (config, result) in configs.iter().zip(results) {
        match result {
            Ok(summary) => print_summary(&summary),
            Err(e) => {
                if configs.len() > 1 {
                    eprintln!("error: {}: {e}", config.labels_path.display());
                }
                let replace = worst.as_ref().is_none_or(|w| severity(&e) > severity(w));
                if replace {
                    worst = Some(e);
                }
            }
        }
    }
    match worst {
        None => Ok(()),
        Some(e) => Err(e),
    }
}

fn severity(e: &CliError) -> u8 {
    match e {
        CliError::Output(_) => 0,
        CliError::Input(_) => 1,
        CliError::Stage(_) => 2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_published_values() {
        let config = RunConfig::new("labels.nrrd", "out");
        assert_eq!(config.modes, vec![ThresholdMode::CaseSpecific]);
        assert_eq!(config.pipeline.k, 3.0);
        assert_eq!(config.pipeline.smooth_iterations, 10);
        assert_eq!(config.pipeline.smooth_relaxation, 0.2);
        assert_eq!(config.pipeline.min_region_area, 10.0);
        assert!(config.bin_width.is_none());
    }

    #[test]
    fn cli_defaults_match_run_config_defaults() {
        use clap::Parser;
        let cli = super::super::Cli::try_parse_from(["plaquemesh", "run", "--labels", "a.nrrd", "--out", "o"]).unwrap();
        let super::super::Command::Run(args) = cli.command else { panic!("run expected") };
        let defaults = PipelineConfig::default();
        assert_eq!(args.threshold_mode, ThresholdChoice::Case);
        assert_eq!(args.k, defaults.k);
        assert_eq!(args.smooth_iters, defaults.smooth_iterations);
        assert_eq!(args.smooth_relax, defaults.smooth_relaxation);
        assert_eq!(args.min_area, defaults.min_region_area);
        assert_eq!(args.jobs, 1);
    }

    #[test]
    fn color_range_rounds_up() {
        assert_eq!(default_vwt_range(&[0.9, 2.26]), [0.0, 2.5]);
        assert_eq!(default_vwt_range(&[]), [0.0, 0.5]);
    }
}
