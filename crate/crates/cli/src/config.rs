//! Line-based `key = value` pipeline configuration. Blank lines and lines
//! starting with `#` are ignored; unknown keys are rejected, never skipped.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use gl_saddle::boundary::{DEFAULT_CAP_RADIUS, DEFAULT_MESH_LEVEL};
use gl_saddle::solver::{InitMode, Optimizer, SolveConfig};

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub r: f64,
    pub h: f64,
    pub cap_radius: f64,
    pub mesh_level: u32,
    pub epsilon: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub energy_tol: f64,
    pub truncate_every: usize,
    pub optimizer: Optimizer,
    pub seed: u64,
    pub analysis_radii: Vec<f64>,
    pub blowdown_radii: Vec<f64>,
    pub delta_fraction: f64,
    pub zero_threshold: f64,
    pub degree_offset: f64,
    pub degree_radius: f64,
    pub out_dir: PathBuf,
}

impl PipelineConfig {
    pub fn solve_config(&self) -> SolveConfig {
        SolveConfig {
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            energy_tol: self.energy_tol,
            truncate_every: self.truncate_every,
            optimizer: self.optimizer,
            seed: self.seed,
            epsilon: self.epsilon,
            init: InitMode::Competitor,
        }
    }
}

pub fn default_analysis_radii(r: f64, h: f64) -> Vec<f64> {
    let lo = (3.0_f64).max(2.0 * h + h);
    let hi = r - 2.0 * h;
    if hi <= lo {
        return vec![];
    }
    let count = (((hi - lo).floor() as usize) + 1).clamp(5, 9);
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

pub fn default_blowdown_radii(r: f64) -> Vec<f64> {
    let picks = [4.0, 6.0, 8.0, 10.0];
    let mut out: Vec<f64> = picks.iter().copied().filter(|&x| x <= r - 2.0).collect();
    if out.is_empty() && r - 2.0 > std::f64::consts::E {
        out.push(r - 2.0);
    }
    out
}

fn parse_radii(value: &str) -> anyhow::Result<Vec<f64>> {
    let radii: Vec<f64> = value
        .split(',')
        .map(|s| s.trim().parse::<f64>().context("bad radius list"))
        .collect::<anyhow::Result<_>>()?;
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        bail!("radius list must be strictly increasing: {value}");
    }
    Ok(radii)
}

pub fn parse_config(path: &Path) -> anyhow::Result<PipelineConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let mut r = None;
    let mut h = None;
    let mut cap_radius = DEFAULT_CAP_RADIUS;
    let mut mesh_level = DEFAULT_MESH_LEVEL;
    let mut epsilon = 1.0;
    let mut max_iters = 5000usize;
    let mut grad_tol = 1e-3;
    let mut energy_tol = 1e-13;
    let mut truncate_every = 10usize;
    let mut optimizer = Optimizer::LimitedMemoryQuasiNewton;
    let mut seed = 0u64;
    let mut analysis_radii = None;
    let mut blowdown_radii = None;
    let mut delta_fraction = 0.15;
    let mut zero_threshold = 0.5;
    let mut degree_offset = None;
    let mut degree_radius = 2.0;
    let mut out_dir = PathBuf::from("out");

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("config line {} is not 'key = value': '{raw}'", lineno + 1);
        };
        let key = key.trim();
        let value = value.trim();
        let bad = |e: std::num::ParseFloatError| {
            anyhow::anyhow!("bad value for key '{key}' on line {}: {e}", lineno + 1)
        };
        let bad_int = |e: std::num::ParseIntError| {
            anyhow::anyhow!("bad value for key '{key}' on line {}: {e}", lineno + 1)
        };
        match key {
            "R" => r = Some(value.parse::<f64>().map_err(bad)?),
            "h" => h = Some(value.parse::<f64>().map_err(bad)?),
            "cap_radius" => cap_radius = value.parse::<f64>().map_err(bad)?,
            "mesh_level" => mesh_level = value.parse::<u32>().map_err(bad_int)?,
            "epsilon" => epsilon = value.parse::<f64>().map_err(bad)?,
            "max_iters" => max_iters = value.parse::<usize>().map_err(bad_int)?,
            "grad_tol" => grad_tol = value.parse::<f64>().map_err(bad)?,
            "energy_tol" => energy_tol = value.parse::<f64>().map_err(bad)?,
            "truncate_every" => truncate_every = value.parse::<usize>().map_err(bad_int)?,
            "optimizer" => {
                optimizer = value
                    .parse::<Optimizer>()
                    .map_err(|e| anyhow::anyhow!("{e}"))?
            }
            "seed" => seed = value.parse::<u64>().map_err(bad_int)?,
            "analysis_radii" => analysis_radii = Some(parse_radii(value)?),
            "blowdown_radii" => blowdown_radii = Some(parse_radii(value)?),
            "delta_fraction" => delta_fraction = value.parse::<f64>().map_err(bad)?,
            "zero_threshold" => zero_threshold = value.parse::<f64>().map_err(bad)?,
            "degree_offset" => degree_offset = Some(value.parse::<f64>().map_err(bad)?),
            "degree_radius" => degree_radius = value.parse::<f64>().map_err(bad)?,
            "out_dir" => out_dir = PathBuf::from(value),
            other => bail!("unknown config key '{other}' on line {}", lineno + 1),
        }
    }
    let Some(r) = r else {
        bail!("config is missing required key 'R'");
    };
    let Some(h) = h else {
        bail!("config is missing required key 'h'");
    };
    let analysis_radii = analysis_radii.unwrap_or_else(|| default_analysis_radii(r, h));
    if analysis_radii.is_empty() {
        bail!("no admissible analysis radii for R = {r}; set analysis_radii");
    }
    let blowdown_radii = blowdown_radii.unwrap_or_else(|| default_blowdown_radii(r));
    let degree_offset = degree_offset.unwrap_or_else(|| (0.5 * r).min(6.0));
    Ok(PipelineConfig {
        r,
        h,
        cap_radius,
        mesh_level,
        epsilon,
        max_iters,
        grad_tol,
        energy_tol,
        truncate_every,
        optimizer,
        seed,
        analysis_radii,
        blowdown_radii,
        delta_fraction,
        zero_threshold,
        degree_offset,
        degree_radius,
        out_dir,
    })
}
