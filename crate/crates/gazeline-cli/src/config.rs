//! Run configuration: defaults, optional JSON config file, CLI overrides.

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use gazeline_core::ModelConfig;
use serde::Deserialize;
use std::fs;
use std::path::{Path, PathBuf};

/// Which filter tracks the trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FilterKind {
    /// Plain Kalman filter: denoising only, no line detection.
    Regular,
    /// Slip filter: resets on line returns and counts lines.
    Slip,
}

/// Output encoding for summaries and tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Pixel geometry used to convert raw gaze coordinates to page units.
/// The text region is the rectangle the page occupies on screen; the
/// default is the unit square, i.e. input that is already normalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreenGeometry {
    pub screen_width_px: f64,
    pub screen_height_px: f64,
    pub text_left_px: f64,
    pub text_top_px: f64,
    pub text_width_px: f64,
    pub text_height_px: f64,
}

impl Default for ScreenGeometry {
    fn default() -> Self {
        Self {
            screen_width_px: 1.0,
            screen_height_px: 1.0,
            text_left_px: 0.0,
            text_top_px: 0.0,
            text_width_px: 1.0,
            text_height_px: 1.0,
        }
    }
}

impl ScreenGeometry {
    pub fn validate(&self) -> Result<()> {
        for (v, name) in [
            (self.screen_width_px, "screen_width_px"),
            (self.screen_height_px, "screen_height_px"),
            (self.text_width_px, "text_width_px"),
            (self.text_height_px, "text_height_px"),
        ] {
            if !v.is_finite() || v <= 0.0 {
                bail!("{name} must be positive, got {v}");
            }
        }
        for (v, name) in [
            (self.text_left_px, "text_left_px"),
            (self.text_top_px, "text_top_px"),
        ] {
            if !v.is_finite() || v < 0.0 {
                bail!("{name} must be non-negative, got {v}");
            }
        }
        if self.text_left_px + self.text_width_px > self.screen_width_px
            || self.text_top_px + self.text_height_px > self.screen_height_px
        {
            bail!("text region extends outside the screen bounds");
        }
        Ok(())
    }

    /// Converts pixel coordinates to page units.
    pub fn normalize(&self, x_px: f64, y_px: f64) -> (f64, f64) {
        (
            (x_px - self.text_left_px) / self.text_width_px,
            (y_px - self.text_top_px) / self.text_height_px,
        )
    }
}

/// Optional JSON config file: a flat document whose fields mirror
/// [`RunConfig`]. Every field may be omitted; CLI flags override.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub delta_t: Option<f64>,
    pub q_x: Option<f64>,
    pub q_y: Option<f64>,
    pub sigma_x: Option<f64>,
    pub sigma_y: Option<f64>,
    pub gamma: Option<f64>,
    pub slip_threshold: Option<f64>,
    pub reinit_x_velocity: Option<f64>,
    pub refractory_samples: Option<usize>,
    pub screen_width_px: Option<f64>,
    pub screen_height_px: Option<f64>,
    pub text_left_px: Option<f64>,
    pub text_top_px: Option<f64>,
    pub text_width_px: Option<f64>,
    pub text_height_px: Option<f64>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub filter: Option<String>,
    pub format: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub screen: ScreenGeometry,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub filter: FilterKind,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            screen: ScreenGeometry::default(),
            input: None,
            output: None,
            filter: FilterKind::Slip,
            format: OutputFormat::Csv,
        }
    }
}

fn parse_filter(s: &str) -> Result<FilterKind> {
    match s {
        "regular" => Ok(FilterKind::Regular),
        "slip" => Ok(FilterKind::Slip),
        other => bail!("unknown filter {other:?}, expected \"regular\" or \"slip\""),
    }
}

fn parse_format(s: &str) -> Result<OutputFormat> {
    match s {
        "csv" => Ok(OutputFormat::Csv),
        "json" => Ok(OutputFormat::Json),
        other => bail!("unknown format {other:?}, expected \"csv\" or \"json\""),
    }
}

/// Flag values that override the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub filter: Option<FilterKind>,
    pub format: Option<OutputFormat>,
}

impl RunConfig {
    /// Resolves defaults, then the config file, then CLI flag overrides,
    /// and validates the result.
    pub fn assemble(config_path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut run = RunConfig::default();
        if let Some(path) = config_path {
            let file = FileConfig::load(path)?;
            let m = &mut run.model;
            if let Some(v) = file.delta_t {
                m.delta_t = v;
            }
            if let Some(v) = file.q_x {
                m.q_x = v;
            }
            if let Some(v) = file.q_y {
                m.q_y = v;
            }
            if let Some(v) = file.sigma_x {
                m.sigma_x = v;
            }
            if let Some(v) = file.sigma_y {
                m.sigma_y = v;
            }
            if let Some(v) = file.gamma {
                m.gamma = v;
            }
            if let Some(v) = file.slip_threshold {
                m.slip_threshold = v;
            }
            if let Some(v) = file.reinit_x_velocity {
                m.reinit_x_velocity = v;
            }
            if let Some(v) = file.refractory_samples {
                m.refractory_samples = v;
            }
            let s = &mut run.screen;
            if let Some(v) = file.screen_width_px {
                s.screen_width_px = v;
            }
            if let Some(v) = file.screen_height_px {
                s.screen_height_px = v;
            }
            if let Some(v) = file.text_left_px {
                s.text_left_px = v;
            }
            if let Some(v) = file.text_top_px {
                s.text_top_px = v;
            }
            if let Some(v) = file.text_width_px {
                s.text_width_px = v;
            }
            if let Some(v) = file.text_height_px {
                s.text_height_px = v;
            }
            if let Some(v) = file.input {
                run.input = Some(v);
            }
            if let Some(v) = file.output {
                run.output = Some(v);
            }
            if let Some(v) = file.filter.as_deref() {
                run.filter = parse_filter(v)?;
            }
            if let Some(v) = file.format.as_deref() {
                run.format = parse_format(v)?;
            }
        }
        if let Some(v) = &overrides.input {
            run.input = Some(v.clone());
        }
        if let Some(v) = &overrides.output {
            run.output = Some(v.clone());
        }
        if let Some(v) = overrides.filter {
            run.filter = v;
        }
        if let Some(v) = overrides.format {
            run.format = v;
        }
        run.model.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
        run.screen.validate()?;
        Ok(run)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn defaults_pass_validation() {
        let run = RunConfig::assemble(None, &Overrides::default()).unwrap();
        assert_eq!(run.filter, FilterKind::Slip);
        assert_eq!(run.format, OutputFormat::Csv);
        assert_eq!(run.model, ModelConfig::default());
    }

    #[test]
    fn file_values_override_defaults_and_flags_override_file() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(
            f,
            r#"{{"sigma_x": 0.02, "filter": "regular", "refractory_samples": 8}}"#
        )
        .unwrap();
        let run = RunConfig::assemble(Some(f.path()), &Overrides::default()).unwrap();
        assert_eq!(run.model.sigma_x, 0.02);
        assert_eq!(run.model.refractory_samples, 8);
        assert_eq!(run.filter, FilterKind::Regular);

        let flags = Overrides {
            filter: Some(FilterKind::Slip),
            ..Overrides::default()
        };
        let run = RunConfig::assemble(Some(f.path()), &flags).unwrap();
        assert_eq!(run.filter, FilterKind::Slip);
        assert_eq!(run.model.sigma_x, 0.02);
    }

    #[test]
    fn unknown_fields_and_bad_values_are_rejected() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, r#"{{"sigma_z": 1.0}}"#).unwrap();
        assert!(RunConfig::assemble(Some(f.path()), &Overrides::default()).is_err());

        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, r#"{{"gamma": -1.0}}"#).unwrap();
        assert!(RunConfig::assemble(Some(f.path()), &Overrides::default()).is_err());

        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, r#"{{"filter": "both"}}"#).unwrap();
        assert!(RunConfig::assemble(Some(f.path()), &Overrides::default()).is_err());
    }

    #[test]
    fn geometry_normalizes_pixel_coordinates() {
        let screen = ScreenGeometry {
            screen_width_px: 1920.0,
            screen_height_px: 1080.0,
            text_left_px: 320.0,
            text_top_px: 90.0,
            text_width_px: 1280.0,
            text_height_px: 900.0,
        };
        screen.validate().unwrap();
        let (x, y) = screen.normalize(320.0, 90.0);
        assert_eq!((x, y), (0.0, 0.0));
        let (x, y) = screen.normalize(1600.0, 990.0);
        assert!((x - 1.0).abs() < 1e-12);
        assert!((y - 1.0).abs() < 1e-12);
        let bad = ScreenGeometry {
            text_width_px: 2000.0,
            ..screen
        };
        assert!(bad.validate().is_err());
    }
}
