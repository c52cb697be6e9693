//! Settings from flags and a flat `key=value` file; flags win.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use num_complex::Complex64;

use crate::pipeline::{AnalysisConfig, PipelineError};
use crate::solve::Window;

pub const KEYS: &[&str] = &[
    "domain",
    "image",
    "grid",
    "tol-dedup",
    "tol-cluster",
    "tol-residual",
    "tol-order",
    "tol-pole",
    "growth-steps",
    "infinity-threshold",
    "closure-cap",
    "samples-circle",
    "samples-segment",
    "format",
    "svg",
    "dump",
    "jobs",
    "base",
];

#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// Domain window in the x-plane
    #[arg(long, allow_hyphen_values = true, value_name = "RE_MIN,RE_MAX,IM_MIN,IM_MAX")]
    pub domain: Option<String>,
    /// Image window in the a-plane (loops and base point live here)
    #[arg(long, allow_hyphen_values = true, value_name = "RE_MIN,RE_MAX,IM_MIN,IM_MAX")]
    pub image: Option<String>,
    /// Seed grid points per unit length
    #[arg(long)]
    pub grid: Option<f64>,
    #[arg(long)]
    pub tol_dedup: Option<f64>,
    #[arg(long)]
    pub tol_cluster: Option<f64>,
    #[arg(long)]
    pub tol_residual: Option<f64>,
    #[arg(long)]
    pub tol_order: Option<f64>,
    #[arg(long)]
    pub tol_pole: Option<f64>,
    /// Number of nested windows for growth evidence
    #[arg(long)]
    pub growth_steps: Option<usize>,
    /// Critical value count the last growth window must reach
    #[arg(long)]
    pub infinity_threshold: Option<usize>,
    /// Maximum number of enumerated group elements
    #[arg(long)]
    pub closure_cap: Option<usize>,
    #[arg(long)]
    pub samples_circle: Option<usize>,
    #[arg(long)]
    pub samples_segment: Option<usize>,
    /// Output format: json or text
    #[arg(long)]
    pub format: Option<String>,
    /// Write an SVG of the a-plane to this file
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Write continuation records to this file
    #[arg(long)]
    pub dump: Option<PathBuf>,
    /// Loops tracked concurrently
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Base point in the a-plane instead of the automatic choice
    #[arg(long, allow_hyphen_values = true, value_name = "RE,IM")]
    pub base: Option<String>,
    /// Flat key=value settings file
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub analysis: AnalysisConfig,
    pub format: Format,
    pub svg: Option<PathBuf>,
    pub dump: Option<PathBuf>,
    pub jobs: usize,
}

fn bad(key: &str, value: &str) -> PipelineError {
    PipelineError::Config(format!("invalid value for {key}: {value:?}"))
}

/// Reads `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, PipelineError> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(PipelineError::Config(format!("line {}: expected key=value", n + 1)));
        };
        let k = k.trim().replace('_', "-");
        if !KEYS.contains(&k.as_str()) {
            return Err(PipelineError::Config(format!("line {}: unknown key {k:?}", n + 1)));
        }
        out.insert(k, v.trim().to_string());
    }
    Ok(out)
}

fn numbers(key: &str, value: &str, n: usize) -> Result<Vec<f64>, PipelineError> {
    let v: Vec<f64> = value
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad(key, value))?;
    if v.len() != n {
        return Err(bad(key, value));
    }
    Ok(v)
}

fn window(key: &str, value: &str, density: f64) -> Result<Window, PipelineError> {
    let v = numbers(key, value, 4)?;
    Ok(Window::new(v[0], v[1], v[2], v[3], density)?)
}

fn scalar<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, PipelineError> {
    value.trim().parse::<T>().map_err(|_| bad(key, value))
}

impl Options {
    fn flag_values(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                m.insert(k.to_string(), v);
            }
        };
        put("domain", self.domain.clone());
        put("image", self.image.clone());
        put("grid", self.grid.map(|v| v.to_string()));
        put("tol-dedup", self.tol_dedup.map(|v| v.to_string()));
        put("tol-cluster", self.tol_cluster.map(|v| v.to_string()));
        put("tol-residual", self.tol_residual.map(|v| v.to_string()));
        put("tol-order", self.tol_order.map(|v| v.to_string()));
        put("tol-pole", self.tol_pole.map(|v| v.to_string()));
        put("growth-steps", self.growth_steps.map(|v| v.to_string()));
        put("infinity-threshold", self.infinity_threshold.map(|v| v.to_string()));
        put("closure-cap", self.closure_cap.map(|v| v.to_string()));
        put("samples-circle", self.samples_circle.map(|v| v.to_string()));
        put("samples-segment", self.samples_segment.map(|v| v.to_string()));
        put("format", self.format.clone());
        put("svg", self.svg.as_ref().map(|p| p.display().to_string()));
        put("dump", self.dump.as_ref().map(|p| p.display().to_string()));
        put("jobs", self.jobs.map(|v| v.to_string()));
        put("base", self.base.clone());
        m
    }

    /// Defaults, overridden by the config file, overridden by flags.
    pub fn resolve(&self) -> Result<Settings, PipelineError> {
        let mut values = match &self.config {
            Some(path) => parse_config_text(&std::fs::read_to_string(path)?)?,
            None => BTreeMap::new(),
        };
        values.extend(self.flag_values());
        settings_from(&values)
    }
}

pub fn settings_from(values: &BTreeMap<String, String>) -> Result<Settings, PipelineError> {
    let mut cfg = AnalysisConfig::default();
    let get = |k: &str| values.get(k).map(String::as_str);
    let density = match get("grid") {
        Some(v) => scalar::<f64>("grid", v)?,
        None => cfg.domain.grid_density,
    };
    cfg.domain = match get("domain") {
        Some(v) => window("domain", v, density)?,
        None => cfg.domain.with_density(density),
    };
    cfg.image = match get("image") {
        Some(v) => window("image", v, density)?,
        None => cfg.image.with_density(density),
    };
    let t = &mut cfg.tolerances;
    for (key, slot) in [
        ("tol-dedup", &mut t.dedup),
        ("tol-cluster", &mut t.cluster),
        ("tol-residual", &mut t.residual),
        ("tol-order", &mut t.order),
        ("tol-pole", &mut t.pole),
    ] {
        if let Some(v) = get(key) {
            *slot = scalar(key, v)?;
        }
    }
    for (key, slot) in [
        ("growth-steps", &mut cfg.growth_steps),
        ("infinity-threshold", &mut cfg.infinity_threshold),
        ("closure-cap", &mut cfg.closure_cap),
        ("samples-circle", &mut cfg.loops.circle_samples),
        ("samples-segment", &mut cfg.loops.segment_samples),
    ] {
        if let Some(v) = get(key) {
            *slot = scalar(key, v)?;
        }
    }
    if let Some(v) = get("base") {
        let b = numbers("base", v, 2)?;
        cfg.base = Some(Complex64::new(b[0], b[1]));
    }
    let format = match get("format") {
        None | Some("json") => Format::Json,
        Some("text") => Format::Text,
        Some(other) => return Err(bad("format", other)),
    };
    let jobs = match get("jobs") {
        Some(v) => scalar::<usize>("jobs", v)?,
        None => 1,
    };
    if jobs == 0 {
        return Err(bad("jobs", "0"));
    }
    crate::pipeline::validate(&cfg)?;
    Ok(Settings {
        analysis: cfg,
        format,
        svg: get("svg").map(PathBuf::from),
        dump: get("dump").map(PathBuf::from),
        jobs,
    })
}
