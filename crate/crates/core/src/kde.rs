//! Gaussian kernel density estimators with bandwidths chosen by minimising
//! leave-one-out cross-validated cross-entropy over a grid.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::tabular::mean_stddev;

/// Densities below this value are replaced by it before taking logarithms.
pub const DENSITY_FLOOR: f64 = 1e-300;

/// `ln(DENSITY_FLOOR)`.
pub fn ln_floor() -> f64 {
    DENSITY_FLOOR.ln()
}

const GRID_SIZE: usize = 20;
const GRID_LOW: f64 = 0.1;
const GRID_HIGH: f64 = 10.0;
const MIN_STDDEV: f64 = 1e-6;

/// Grid members whose pairwise kernel tables are cached during a 2D scan
/// as long as the table stays below this many entries.
const KERNEL_CACHE_LIMIT: usize = 1 << 22;

fn ln_sqrt_2pi() -> f64 {
    0.5 * (2.0 * PI).ln()
}

/// Log of a sum of exponentials, stable for large negative arguments.
fn log_sum_exp(terms: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Univariate Gaussian KDE.
#[derive(Debug, Clone, PartialEq)]
pub struct Kde1 {
    points: Vec<f64>,
    bandwidth: f64,
}

impl Kde1 {
    pub fn new(points: Vec<f64>, bandwidth: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        if !(bandwidth > 0.0) {
            return Err(Error::Config(format!("bandwidth {bandwidth} must be positive")));
        }
        Ok(Kde1 { points, bandwidth })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn density(&self, y: f64) -> f64 {
        let h = self.bandwidth;
        let inv = 1.0 / (2.0 * h * h);
        let sum: f64 = self
            .points
            .iter()
            .map(|&p| (-(y - p) * (y - p) * inv).exp())
            .sum();
        sum / (self.points.len() as f64 * h * (2.0 * PI).sqrt())
    }

    /// Log-density computed by log-sum-exp; finite for every finite `y`.
    pub fn log_density(&self, y: f64) -> f64 {
        let h = self.bandwidth;
        let inv = 1.0 / (2.0 * h * h);
        let terms = self.points.iter().map(move |&p| -(y - p) * (y - p) * inv);
        log_sum_exp(terms) - (self.points.len() as f64).ln() - h.ln() - ln_sqrt_2pi()
    }
}

/// Bivariate product-kernel Gaussian KDE over `(x, y)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Kde2 {
    points: Vec<(f64, f64)>,
    bandwidths: (f64, f64),
}

impl Kde2 {
    pub fn new(points: Vec<(f64, f64)>, bandwidths: (f64, f64)) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        if !(bandwidths.0 > 0.0 && bandwidths.1 > 0.0) {
            return Err(Error::Config(format!(
                "bandwidths {bandwidths:?} must be positive"
            )));
        }
        Ok(Kde2 { points, bandwidths })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn bandwidths(&self) -> (f64, f64) {
        self.bandwidths
    }

    pub fn density(&self, x: f64, y: f64) -> f64 {
        let (hx, hy) = self.bandwidths;
        let (ix, iy) = (1.0 / (2.0 * hx * hx), 1.0 / (2.0 * hy * hy));
        let sum: f64 = self
            .points
            .iter()
            .map(|&(px, py)| (-(x - px) * (x - px) * ix - (y - py) * (y - py) * iy).exp())
            .sum();
        sum / (self.points.len() as f64 * 2.0 * PI * hx * hy)
    }

    pub fn log_density(&self, x: f64, y: f64) -> f64 {
        let (hx, hy) = self.bandwidths;
        let (ix, iy) = (1.0 / (2.0 * hx * hx), 1.0 / (2.0 * hy * hy));
        let terms = self
            .points
            .iter()
            .map(move |&(px, py)| -(x - px) * (x - px) * ix - (y - py) * (y - py) * iy);
        log_sum_exp(terms) - (self.points.len() as f64).ln() - hx.ln() - hy.ln() - 2.0 * ln_sqrt_2pi()
    }
}

/// Strictly increasing list of positive candidate bandwidths.
#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthGrid(Vec<f64>);

impl BandwidthGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if values.iter().any(|&h| !(h > 0.0) || !h.is_finite()) {
            return Err(Error::InvalidGrid("bandwidths must be positive and finite".into()));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("bandwidths must be strictly increasing".into()));
        }
        Ok(BandwidthGrid(values))
    }

    pub fn single(h: f64) -> Result<Self> {
        Self::new(vec![h])
    }

    /// 20 geometrically spaced values from 0.1 to 10 times Silverman's
    /// bandwidth `1.06 * sigma * n^(-1/5)`. `None` when the sample is
    /// degenerate (fewer than two points or zero spread).
    pub fn default_for(values: &[f64]) -> Option<BandwidthGrid> {
        let n = values.len();
        if n < 2 {
            return None;
        }
        let (_, sd) = mean_stddev(values);
        if !(sd > 0.0) {
            return None;
        }
        let silverman = 1.06 * sd.max(MIN_STDDEV) * (n as f64).powf(-0.2);
        let ratio = (GRID_HIGH / GRID_LOW).powf(1.0 / (GRID_SIZE - 1) as f64);
        let grid = (0..GRID_SIZE)
            .map(|k| GRID_LOW * silverman * ratio.powi(k as i32))
            .collect();
        Some(BandwidthGrid(grid))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Squared distances of all unordered pairs `(i, j)`, `i < j`, in
/// row-major order.
fn pair_sq_distances(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut out = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let d = values[i] - values[j];
            out.push(d * d);
        }
    }
    out
}

fn kernel_table(sq: &[f64], h: f64) -> Vec<f64> {
    let inv = 1.0 / (2.0 * h * h);
    sq.iter().map(|d| (-d * inv).exp()).collect()
}

/// `-sum_i ln max(norm * S_i, floor)` where `S_i` is the sum of pair
/// weights touching point `i`.
fn loo_from_pair_weights(n: usize, weights: impl Iterator<Item = f64>, norm: f64, sums: &mut [f64]) -> f64 {
    sums.iter_mut().for_each(|s| *s = 0.0);
    let mut it = weights;
    for i in 0..n {
        for j in i + 1..n {
            let w = it.next().expect("pair table matches point count");
            sums[i] += w;
            sums[j] += w;
        }
    }
    -sums
        .iter()
        .map(|&s| (s * norm).max(DENSITY_FLOOR).ln())
        .sum::<f64>()
}

fn loo1_from_sq(n: usize, sq: &[f64], h: f64, sums: &mut [f64]) -> f64 {
    let inv = 1.0 / (2.0 * h * h);
    let norm = 1.0 / ((n - 1) as f64 * h * (2.0 * PI).sqrt());
    loo_from_pair_weights(n, sq.iter().map(|d| (-d * inv).exp()), norm, sums)
}

/// Leave-one-out cross-entropy `-sum_i ln f_{-i}(y_i)` of a univariate KDE.
pub fn loo_cross_entropy1(points: &[f64], h: f64) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: points.len(),
        });
    }
    let sq = pair_sq_distances(points);
    let mut sums = vec![0.0; points.len()];
    Ok(loo1_from_sq(points.len(), &sq, h, &mut sums))
}

/// Leave-one-out cross-entropy of a bivariate product-kernel KDE.
pub fn loo_cross_entropy2(points: &[(f64, f64)], hx: f64, hy: f64) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: points.len(),
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let kx = kernel_table(&pair_sq_distances(&xs), hx);
    let ky = kernel_table(&pair_sq_distances(&ys), hy);
    let mut sums = vec![0.0; points.len()];
    Ok(loo2_from_tables(points.len(), &kx, &ky, hx, hy, &mut sums))
}

fn loo2_from_tables(n: usize, kx: &[f64], ky: &[f64], hx: f64, hy: f64, sums: &mut [f64]) -> f64 {
    let norm = 1.0 / ((n - 1) as f64 * 2.0 * PI * hx * hy);
    loo_from_pair_weights(n, kx.iter().zip(ky).map(|(a, b)| a * b), norm, sums)
}

/// Grid member minimising the univariate LOO cross-entropy, with its score.
/// Ties go to the smaller bandwidth.
pub fn select_bandwidth1(points: &[f64], grid: &BandwidthGrid) -> Result<(f64, f64)> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let n = points.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let sq = pair_sq_distances(points);
    let mut sums = vec![0.0; n];
    let mut best: Option<(f64, f64)> = None;
    for &h in grid.values() {
        let score = loo1_from_sq(n, &sq, h, &mut sums);
        if best.is_none_or(|(_, s)| score < s) {
            best = Some((h, score));
        }
    }
    Ok(best.expect("grid is non-empty"))
}

/// Exhaustive scan of `grid_x x grid_y` minimising the bivariate LOO
/// cross-entropy. Ties go to the lexicographically smaller `(h_x, h_y)`.
pub fn select_bandwidth2(
    points: &[(f64, f64)],
    grid_x: &BandwidthGrid,
    grid_y: &BandwidthGrid,
) -> Result<(f64, f64, f64)> {
    if grid_x.is_empty() || grid_y.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let n = points.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let sqx = pair_sq_distances(&xs);
    let sqy = pair_sq_distances(&ys);
    let cached: Option<Vec<Vec<f64>>> = (sqy.len() * grid_y.len() <= KERNEL_CACHE_LIMIT)
        .then(|| grid_y.values().iter().map(|&h| kernel_table(&sqy, h)).collect());

    let mut sums = vec![0.0; n];
    let mut scratch;
    let mut best: Option<(f64, f64, f64)> = None;
    for &hx in grid_x.values() {
        let kx = kernel_table(&sqx, hx);
        for (k, &hy) in grid_y.values().iter().enumerate() {
            let ky: &[f64] = match &cached {
                Some(tables) => &tables[k],
                None => {
                    scratch = kernel_table(&sqy, hy);
                    &scratch
                }
            };
            let score = loo2_from_tables(n, &kx, ky, hx, hy, &mut sums);
            if best.is_none_or(|(_, _, s)| score < s) {
                best = Some((hx, hy, score));
            }
        }
    }
    Ok(best.expect("grids are non-empty"))
}

/// Bandwidth for a univariate sample: grid selection over the default grid,
/// or `fallback` when the sample is degenerate.
pub fn choose_bandwidth1(points: &[f64], fallback: f64) -> f64 {
    match BandwidthGrid::default_for(points) {
        Some(grid) => select_bandwidth1(points, &grid)
            .map(|(h, _)| h)
            .unwrap_or(fallback),
        None => fallback,
    }
}

/// Joint bandwidths for `(x, y)` pairs. A degenerate coordinate gets a
/// singleton grid holding its fallback; with fewer than two points both
/// fallbacks are used directly.
pub fn choose_bandwidth2(points: &[(f64, f64)], fallback: (f64, f64)) -> (f64, f64) {
    if points.len() < 2 {
        return fallback;
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let gx = BandwidthGrid::default_for(&xs);
    let gy = BandwidthGrid::default_for(&ys);
    if gx.is_none() && gy.is_none() {
        return fallback;
    }
    let gx = gx.unwrap_or_else(|| BandwidthGrid(vec![fallback.0]));
    let gy = gy.unwrap_or_else(|| BandwidthGrid(vec![fallback.1]));
    select_bandwidth2(points, &gx, &gy)
        .map(|(hx, hy, _)| (hx, hy))
        .unwrap_or(fallback)
}

/// Fixed bandwidth for degenerate samples: `max(1e-3, 1e-3 * range)` where
/// `range` is the value range of the corresponding real training column.
pub fn fallback_bandwidth(reference_range: f64) -> f64 {
    (1e-3 * reference_range.abs()).max(1e-3)
}
