//! The synthetic 2D peak problem `z = A exp(-(x^2 + y^2) / 2)` on a disk,
//! and a grid exporter for contour plots.

use std::fmt::Write as _;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeded_rng;
use crate::tabular::{AttributeSchema, Dataset, Value};

/// How sample radii are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    /// Uniform over the disk area: `r = R sqrt(u)`.
    #[default]
    AreaUniform,
    /// Uniform radius `r = R u` with a uniform direction, as in the MLBench
    /// `peak` generator. Concentrates points near the centre.
    RadiusUniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakConfig {
    pub amplitude: f64,
    pub radius: f64,
    pub samples: usize,
    pub seed: u64,
    pub sampling: Sampling,
    /// The grid covers `[-extent, extent]^2`.
    pub extent: f64,
    /// Grid points per axis, endpoints included.
    pub resolution: usize,
}

impl Default for PeakConfig {
    fn default() -> Self {
        PeakConfig {
            amplitude: 25.0,
            radius: 3.0,
            samples: 100,
            seed: 0,
            sampling: Sampling::AreaUniform,
            extent: 3.0,
            resolution: 121,
        }
    }
}

impl PeakConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0) || !(self.radius > 0.0) || !(self.extent > 0.0) {
            return Err(Error::Config("amplitude, radius and extent must be positive".into()));
        }
        if self.resolution < 2 {
            return Err(Error::Config("grid resolution must be at least 2".into()));
        }
        Ok(())
    }

    pub fn height(&self, x: f64, y: f64) -> f64 {
        self.amplitude * (-(x * x + y * y) / 2.0).exp()
    }
}

pub fn peak_schema() -> Vec<AttributeSchema> {
    vec![
        AttributeSchema::numeric("x"),
        AttributeSchema::numeric("y"),
        AttributeSchema::target("z"),
    ]
}

/// `cfg.samples` points on the disk of radius `cfg.radius`, without label
/// noise.
pub fn generate_peak(cfg: &PeakConfig) -> Dataset {
    let mut rng = seeded_rng(cfg.seed);
    let rows = (0..cfg.samples)
        .map(|_| {
            let u = rng.random::<f64>();
            let r = match cfg.sampling {
                Sampling::AreaUniform => cfg.radius * u.sqrt(),
                Sampling::RadiusUniform => cfg.radius * u,
            };
            let theta = std::f64::consts::TAU * rng.random::<f64>();
            let (x, y) = (r * theta.cos(), r * theta.sin());
            vec![Value::Numeric(x), Value::Numeric(y), Value::Numeric(cfg.height(x, y))]
        })
        .collect();
    Dataset::new(peak_schema(), rows).expect("peak rows match the peak schema")
}

/// Grid coordinates `-extent + 2 extent i / (resolution - 1)`.
pub fn grid_axis(cfg: &PeakConfig) -> Vec<f64> {
    let intervals = (cfg.resolution - 1) as f64;
    (0..cfg.resolution)
        .map(|i| -cfg.extent + 2.0 * cfg.extent * i as f64 / intervals)
        .collect()
}

/// Predictions over the grid as `(x, y, z)`, `x` outer and `y` inner.
pub fn contour_grid<F>(predictor: F, cfg: &PeakConfig) -> Result<Vec<(f64, f64, f64)>>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    cfg.validate()?;
    let axis = grid_axis(cfg);
    let mut out = Vec::with_capacity(axis.len() * axis.len());
    for &x in &axis {
        for &y in &axis {
            out.push((x, y, predictor(x, y)?));
        }
    }
    Ok(out)
}

pub fn grid_to_csv(grid: &[(f64, f64, f64)]) -> String {
    let mut s = String::from("x,y,z\n");
    for (x, y, z) in grid {
        let _ = writeln!(s, "{x},{y},{z}");
    }
    s
}

/// A feature row for the peak schema (target left missing).
pub fn query_row(x: f64, y: f64) -> [Value; 3] {
    [Value::Numeric(x), Value::Numeric(y), Value::Missing]
}
