//! Run configuration: one validated record of every tunable, loadable from
//! a flat `key=value` file with CLI flags taking precedence.

use crate::model::ProjectionMode;
use crate::synth::{DistanceClass, ElevationClass, SuiteConfig};
use crate::{Error, Result};
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    // Windowing
    pub window_count: usize,
    pub window_stride: usize,
    // ROI
    pub trim_fraction: f64,
    pub smooth_dist: u16,
    pub side: usize,
    // Model
    pub n_hidden: usize,
    pub k: usize,
    pub c: f64,
    pub mode: ProjectionMode,
    pub eps: f64,
    pub seed: u64,
    // Synthesis
    pub objects: u32,
    pub speeds: Vec<f64>,
    pub distances: Vec<DistanceClass>,
    pub elevations: Vec<ElevationClass>,
    pub events_per_degree: f64,
    pub noise_rate: f64,
    pub total_rotation_deg: f64,
    pub width: u16,
    pub height: u16,
    pub pose_bins: u32,
    // Evaluation
    pub k_sweep: Vec<usize>,
    pub multiview_spans_deg: Vec<f64>,
    pub balance_seed: u64,
    // Benchmarking
    pub bench_duration_secs: f64,
    pub bench_batch: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            window_count: 2000,
            window_stride: 2000,
            trim_fraction: 0.9,
            smooth_dist: 10,
            side: 60,
            n_hidden: 3000,
            k: 200,
            c: 1.0,
            mode: ProjectionMode::Slow,
            eps: 1e-10,
            seed: 1,
            objects: 8,
            speeds: vec![
                std::f64::consts::PI / 2.0,
                std::f64::consts::PI,
                2.0 * std::f64::consts::PI,
            ],
            distances: vec![DistanceClass::Near, DistanceClass::Mid, DistanceClass::Far],
            elevations: vec![ElevationClass::Low, ElevationClass::High],
            events_per_degree: 25.0,
            noise_rate: 0.05,
            total_rotation_deg: 1080.0,
            width: 128,
            height: 128,
            pose_bins: 8,
            k_sweep: vec![10, 25, 50, 100, 200, 400, 800],
            multiview_spans_deg: vec![0.0, 45.0, 90.0, 180.0, 270.0, 360.0],
            balance_seed: 7,
            bench_duration_secs: 10.0,
            bench_batch: 256,
        }
    }
}

fn parse_list<T: FromStr>(value: &str, key: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::Config(format!("bad element '{s}' in {key}")))
        })
        .collect()
}

fn parse_distance(s: &str) -> Result<DistanceClass> {
    match s {
        "near" => Ok(DistanceClass::Near),
        "mid" => Ok(DistanceClass::Mid),
        "far" => Ok(DistanceClass::Far),
        other => Err(Error::Config(format!("unknown distance '{other}'"))),
    }
}

fn parse_elevation(s: &str) -> Result<ElevationClass> {
    match s {
        "low" => Ok(ElevationClass::Low),
        "high" => Ok(ElevationClass::High),
        other => Err(Error::Config(format!("unknown elevation '{other}'"))),
    }
}

impl RunConfig {
    /// Apply one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |k: &str, v: &str| Error::Config(format!("invalid value '{v}' for {k}"));
        match key {
            "window_count" => self.window_count = value.parse().map_err(|_| bad(key, value))?,
            "window_stride" => self.window_stride = value.parse().map_err(|_| bad(key, value))?,
            "trim_fraction" => self.trim_fraction = value.parse().map_err(|_| bad(key, value))?,
            "smooth_dist" => self.smooth_dist = value.parse().map_err(|_| bad(key, value))?,
            "side" => self.side = value.parse().map_err(|_| bad(key, value))?,
            "n_hidden" => self.n_hidden = value.parse().map_err(|_| bad(key, value))?,
            "k" => self.k = value.parse().map_err(|_| bad(key, value))?,
            "c" => self.c = value.parse().map_err(|_| bad(key, value))?,
            "mode" => self.mode = value.parse()?,
            "eps" => self.eps = value.parse().map_err(|_| bad(key, value))?,
            "seed" => self.seed = value.parse().map_err(|_| bad(key, value))?,
            "objects" => self.objects = value.parse().map_err(|_| bad(key, value))?,
            "speeds" => self.speeds = parse_list(value, key)?,
            "distances" => {
                self.distances = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(parse_distance)
                    .collect::<Result<_>>()?
            }
            "elevations" => {
                self.elevations = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(parse_elevation)
                    .collect::<Result<_>>()?
            }
            "events_per_degree" => {
                self.events_per_degree = value.parse().map_err(|_| bad(key, value))?
            }
            "noise_rate" => self.noise_rate = value.parse().map_err(|_| bad(key, value))?,
            "total_rotation_deg" => {
                self.total_rotation_deg = value.parse().map_err(|_| bad(key, value))?
            }
            "width" => self.width = value.parse().map_err(|_| bad(key, value))?,
            "height" => self.height = value.parse().map_err(|_| bad(key, value))?,
            "pose_bins" => self.pose_bins = value.parse().map_err(|_| bad(key, value))?,
            "k_sweep" => self.k_sweep = parse_list(value, key)?,
            "multiview_spans_deg" => self.multiview_spans_deg = parse_list(value, key)?,
            "balance_seed" => self.balance_seed = value.parse().map_err(|_| bad(key, value))?,
            "bench_duration_secs" => {
                self.bench_duration_secs = value.parse().map_err(|_| bad(key, value))?
            }
            "bench_batch" => self.bench_batch = value.parse().map_err(|_| bad(key, value))?,
            other => return Err(Error::Config(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Load settings from a flat `key=value` file (comments with `#`).
    pub fn apply_file(&mut self, path: &std::path::Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("{}:{}: expected key=value", path.display(), i + 1))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Re-check every downstream constraint up front.
    pub fn validate(&self) -> Result<()> {
        if self.window_count == 0 || self.window_stride == 0 {
            return Err(Error::Config("window count/stride must be >= 1".into()));
        }
        if !(self.trim_fraction > 0.0 && self.trim_fraction <= 1.0) {
            return Err(Error::Config("trim_fraction must be in (0, 1]".into()));
        }
        if self.side == 0 {
            return Err(Error::Config("side must be >= 1".into()));
        }
        if self.n_hidden == 0 || self.k == 0 {
            return Err(Error::Config("n_hidden and k must be >= 1".into()));
        }
        if self.k > self.n_hidden {
            return Err(Error::Config(format!(
                "k ({}) cannot exceed n_hidden ({})",
                self.k, self.n_hidden
            )));
        }
        if self.c <= 0.0 {
            return Err(Error::Config("c must be positive".into()));
        }
        if self.objects == 0 || self.pose_bins == 0 {
            return Err(Error::Config("objects and pose_bins must be >= 1".into()));
        }
        if self.speeds.iter().any(|&s| s <= 0.0) || self.speeds.is_empty() {
            return Err(Error::Config("speeds must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.noise_rate) {
            return Err(Error::Config("noise_rate must be in [0, 1)".into()));
        }
        if self.events_per_degree <= 0.0 || self.total_rotation_deg <= 0.0 {
            return Err(Error::Config(
                "events_per_degree and total_rotation_deg must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn suite_config(&self) -> SuiteConfig {
        SuiteConfig {
            num_objects: self.objects,
            omegas_rad_s: self.speeds.clone(),
            distances: self.distances.clone(),
            elevations: self.elevations.clone(),
            events_per_degree: self.events_per_degree,
            noise_rate: self.noise_rate,
            total_rotation_deg: self.total_rotation_deg,
            seed: self.seed,
            width: self.width,
            height: self.height,
            window_count: self.window_count,
            window_stride: self.window_stride,
            pose_bins: self.pose_bins,
        }
    }

    /// Full resolved configuration, one key per line, for logs.
    pub fn render(&self) -> String {
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut s = String::new();
        s.push_str(&format!("window_count={}\n", self.window_count));
        s.push_str(&format!("window_stride={}\n", self.window_stride));
        s.push_str(&format!("trim_fraction={}\n", self.trim_fraction));
        s.push_str(&format!("smooth_dist={}\n", self.smooth_dist));
        s.push_str(&format!("side={}\n", self.side));
        s.push_str(&format!("n_hidden={}\n", self.n_hidden));
        s.push_str(&format!("k={}\n", self.k));
        s.push_str(&format!("c={}\n", self.c));
        s.push_str(&format!("mode={}\n", self.mode.as_str()));
        s.push_str(&format!("eps={}\n", self.eps));
        s.push_str(&format!("seed={}\n", self.seed));
        s.push_str(&format!("objects={}\n", self.objects));
        s.push_str(&format!("speeds={}\n", list(&self.speeds)));
        s.push_str(&format!(
            "distances={}\n",
            self.distances
                .iter()
                .map(|d| d.as_str())
                .collect::<Vec<_>>()
                .join(",")
        ));
        s.push_str(&format!(
            "elevations={}\n",
            self.elevations
                .iter()
                .map(|e| e.as_str())
                .collect::<Vec<_>>()
                .join(",")
        ));
        s.push_str(&format!("events_per_degree={}\n", self.events_per_degree));
        s.push_str(&format!("noise_rate={}\n", self.noise_rate));
        s.push_str(&format!("total_rotation_deg={}\n", self.total_rotation_deg));
        s.push_str(&format!("width={}\n", self.width));
        s.push_str(&format!("height={}\n", self.height));
        s.push_str(&format!("pose_bins={}\n", self.pose_bins));
        s.push_str(&format!(
            "k_sweep={}\n",
            self.k_sweep
                .iter()
                .map(|k| k.to_string())
                .collect::<Vec<_>>()
                .join(",")
        ));
        s.push_str(&format!(
            "multiview_spans_deg={}\n",
            list(&self.multiview_spans_deg)
        ));
        s.push_str(&format!("balance_seed={}\n", self.balance_seed));
        s.push_str(&format!("bench_duration_secs={}\n", self.bench_duration_secs));
        s.push_str(&format!("bench_batch={}\n", self.bench_batch));
        s
    }
}
