//! Naive Bayes for regression.
//!
//! Every continuous attribute contributes `q_i = f(x_i, y) / f(y)` where
//! both densities are Gaussian KDEs sharing the jointly selected target
//! bandwidth. Every categorical attribute contributes `P(x_i | y)` obtained
//! by Bayes' rule from one target KDE per category and Laplace-smoothed
//! category priors. The prediction is the mode of
//! `f(y) * prod_i q_i(x_i | y)`, found by recursive grid search; the
//! normalising integral is never needed.
//!
//! Training rows are put into a canonical order first, so a model (and
//! every prediction it makes) does not depend on the order of its
//! training rows.

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kde::{self, Kde1, Kde2};
use crate::tabular::{AttributeKind, ColumnStats, Dataset, Value};

/// Recursive grid search settings for locating the posterior mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSearchConfig {
    /// Points in the first grid, spanning the whole search range.
    pub coarse_points: usize,
    /// Points per refinement level.
    pub grid_points: usize,
    /// Number of levels.
    pub levels: usize,
    /// The search range is the training target range widened by this
    /// fraction of its width on each side.
    pub range_expansion: f64,
}

impl Default for ModeSearchConfig {
    fn default() -> Self {
        ModeSearchConfig {
            coarse_points: 101,
            grid_points: 11,
            levels: 6,
            range_expansion: 0.1,
        }
    }
}

impl ModeSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 3 || self.coarse_points < 3 {
            return Err(Error::Config("mode search needs at least 3 grid points".into()));
        }
        if self.levels < 1 {
            return Err(Error::Config("mode search needs at least 1 level".into()));
        }
        if !(self.range_expansion >= 0.0) {
            return Err(Error::Config("range expansion must be non-negative".into()));
        }
        Ok(())
    }

    /// Width of the final grid cell for a search range of `width`.
    pub fn resolution(&self, width: f64) -> f64 {
        let c = (self.coarse_points - 1) as f64;
        let g = (self.grid_points - 1) as f64;
        width / c * (2.0 / g).powi(self.levels as i32 - 1)
    }
}

/// Per-column value ranges of the real training data. Degenerate samples
/// (constant, or a single point) fall back to a bandwidth scaled by the
/// matching range.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceRanges(Vec<f64>);

impl ReferenceRanges {
    pub fn from_dataset(ds: &Dataset) -> Self {
        let stats = crate::tabular::stats(ds);
        ReferenceRanges(
            stats
                .columns
                .iter()
                .map(|c| match c {
                    ColumnStats::Numeric { count, min, max, .. } if *count > 0 => max - min,
                    _ => 0.0,
                })
                .collect(),
        )
    }

    fn fallback(&self, column: usize) -> f64 {
        kde::fallback_bandwidth(self.0.get(column).copied().unwrap_or(0.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureModel {
    Numeric {
        column: usize,
        /// Joint density of `(x_i, y)`.
        joint: Kde2,
        /// Target density with the joint's target bandwidth.
        marginal: Kde1,
    },
    Categorical {
        column: usize,
        /// Target density per category; `None` when the category never
        /// occurs in training, in which case the target marginal stands in.
        per_category: Vec<Option<Kde1>>,
        /// Laplace-smoothed `P(X_i = v)`.
        priors: Vec<f64>,
    },
}

impl FeatureModel {
    pub fn column(&self) -> usize {
        match self {
            FeatureModel::Numeric { column, .. } | FeatureModel::Categorical { column, .. } => {
                *column
            }
        }
    }
}

/// One Gaussian target kernel shared by several estimators.
#[derive(Debug, Clone, PartialEq)]
struct TargetKernel {
    inv_two_h2: f64,
    /// `ln(N h sqrt(2 pi))`.
    ln_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum CompiledFeature {
    Numeric {
        column: usize,
        xs: Vec<f64>,
        inv_two_hx2: f64,
        /// `-ln(h_x sqrt(2 pi))`.
        ln_scale: f64,
        kernel: usize,
    },
    Categorical {
        column: usize,
        categories: Vec<CategoryDensity>,
        ln_priors: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum CategoryDensity {
    Own { points: Vec<f64>, inv_two_h2: f64, ln_norm: f64 },
    Marginal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NbrModel {
    n_columns: usize,
    target_column: usize,
    target_marginal: Kde1,
    features: Vec<FeatureModel>,
    y_range: (f64, f64),
    /// Canonically ordered training targets.
    ys: Vec<f64>,
    kernels: Vec<TargetKernel>,
    target_kernel: usize,
    compiled: Vec<CompiledFeature>,
}

fn canonical_rows(ds: &Dataset) -> Vec<Vec<f64>> {
    let t = ds.target_index();
    let mut rows: Vec<Vec<f64>> = ds
        .rows()
        .iter()
        .map(|r| r.iter().map(|v| v.as_f64().unwrap_or(f64::NAN)).collect())
        .collect();
    rows.sort_by(|a, b| {
        a[t].total_cmp(&b[t]).then_with(|| {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
        })
    });
    rows
}

impl NbrModel {
    /// Trains on `ds`, using its own column ranges for degenerate-sample
    /// fallbacks.
    pub fn train(ds: &Dataset, cfg: &ModeSearchConfig) -> Result<NbrModel> {
        Self::train_with_reference(ds, cfg, &ReferenceRanges::from_dataset(ds))
    }

    pub fn train_with_reference(
        ds: &Dataset,
        cfg: &ModeSearchConfig,
        reference: &ReferenceRanges,
    ) -> Result<NbrModel> {
        cfg.validate()?;
        if ds.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if ds.has_missing() {
            return Err(Error::Schema("training data has missing values; impute first".into()));
        }
        let t = ds.target_index();
        let rows = canonical_rows(ds);
        let ys: Vec<f64> = rows.iter().map(|r| r[t]).collect();
        let n = ys.len();
        let target_fallback = reference.fallback(t);

        let target_h = kde::choose_bandwidth1(&ys, target_fallback);
        let target_marginal = Kde1::new(ys.clone(), target_h)?;

        let mut features = Vec::new();
        for (c, attr) in ds.schema().iter().enumerate() {
            if attr.is_target {
                continue;
            }
            match attr.kind {
                AttributeKind::Numeric => {
                    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r[c], r[t])).collect();
                    let (hx, hy) =
                        kde::choose_bandwidth2(&pairs, (reference.fallback(c), target_fallback));
                    features.push(FeatureModel::Numeric {
                        column: c,
                        joint: Kde2::new(pairs, (hx, hy))?,
                        marginal: Kde1::new(ys.clone(), hy)?,
                    });
                }
                AttributeKind::Categorical => {
                    let k = attr.category_count();
                    if k == 0 {
                        return Err(Error::Schema(format!(
                            "attribute `{}` has no categories",
                            attr.name
                        )));
                    }
                    let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); k];
                    for r in &rows {
                        buckets[r[c] as usize].push(r[t]);
                    }
                    let priors = buckets
                        .iter()
                        .map(|b| (b.len() + 1) as f64 / (n + k) as f64)
                        .collect();
                    let per_category = buckets
                        .into_iter()
                        .map(|b| {
                            if b.is_empty() {
                                Ok(None)
                            } else {
                                let h = kde::choose_bandwidth1(&b, target_fallback);
                                Kde1::new(b, h).map(Some)
                            }
                        })
                        .collect::<Result<Vec<_>>>()?;
                    features.push(FeatureModel::Categorical {
                        column: c,
                        per_category,
                        priors,
                    });
                }
            }
        }

        let (lo, hi) = ys
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| (a.min(y), b.max(y)));
        let width = hi - lo;
        let y_range = if width > 0.0 {
            (lo - cfg.range_expansion * width, hi + cfg.range_expansion * width)
        } else {
            (lo - target_fallback, hi + target_fallback)
        };

        let mut model = NbrModel {
            n_columns: ds.n_attributes(),
            target_column: t,
            target_marginal,
            features,
            y_range,
            ys,
            kernels: Vec::new(),
            target_kernel: 0,
            compiled: Vec::new(),
        };
        model.compile();
        Ok(model)
    }

    fn compile(&mut self) {
        let n = self.ys.len() as f64;
        let mut kernels: Vec<(f64, TargetKernel)> = Vec::new();
        let mut kernel_for = |h: f64| -> usize {
            if let Some(i) = kernels.iter().position(|(k, _)| *k == h) {
                return i;
            }
            kernels.push((
                h,
                TargetKernel {
                    inv_two_h2: 1.0 / (2.0 * h * h),
                    ln_norm: (n * h * (2.0 * PI).sqrt()).ln(),
                },
            ));
            kernels.len() - 1
        };
        let target_kernel = kernel_for(self.target_marginal.bandwidth());
        let mut compiled = Vec::with_capacity(self.features.len());
        for f in &self.features {
            compiled.push(match f {
                FeatureModel::Numeric { column, joint, .. } => {
                    let (hx, hy) = joint.bandwidths();
                    CompiledFeature::Numeric {
                        column: *column,
                        xs: joint.points().iter().map(|p| p.0).collect(),
                        inv_two_hx2: 1.0 / (2.0 * hx * hx),
                        ln_scale: -(hx * (2.0 * PI).sqrt()).ln(),
                        kernel: kernel_for(hy),
                    }
                }
                FeatureModel::Categorical {
                    column,
                    per_category,
                    priors,
                } => CompiledFeature::Categorical {
                    column: *column,
                    categories: per_category
                        .iter()
                        .map(|k| match k {
                            Some(k) => {
                                let h = k.bandwidth();
                                CategoryDensity::Own {
                                    points: k.points().to_vec(),
                                    inv_two_h2: 1.0 / (2.0 * h * h),
                                    ln_norm: (k.points().len() as f64 * h * (2.0 * PI).sqrt()).ln(),
                                }
                            }
                            None => CategoryDensity::Marginal,
                        })
                        .collect(),
                    ln_priors: priors.iter().map(|p| p.ln()).collect(),
                },
            });
        }
        self.kernels = kernels.into_iter().map(|(_, k)| k).collect();
        self.target_kernel = target_kernel;
        self.compiled = compiled;
    }

    pub fn target_marginal(&self) -> &Kde1 {
        &self.target_marginal
    }

    pub fn features(&self) -> &[FeatureModel] {
        &self.features
    }

    /// Search interval `[y_lo, y_hi]` for the posterior mode.
    pub fn y_range(&self) -> (f64, f64) {
        self.y_range
    }

    pub fn target_column(&self) -> usize {
        self.target_column
    }

    /// Converts a schema row into the internal numeric layout, checking
    /// category indices. Missing cells become NaN and are skipped.
    fn encode_row(&self, row: &[Value]) -> Result<Vec<f64>> {
        if row.len() != self.n_columns {
            return Err(Error::DimensionMismatch {
                expected: self.n_columns,
                got: row.len(),
            });
        }
        for f in &self.compiled {
            if let CompiledFeature::Categorical { column, categories, .. } = f {
                if let Value::Category(v) = row[*column] {
                    if v >= categories.len() {
                        return Err(Error::CategoryOutOfRange {
                            attribute: format!("#{column}"),
                            index: v,
                            count: categories.len(),
                        });
                    }
                }
            }
        }
        Ok(row.iter().map(|v| v.as_f64().unwrap_or(f64::NAN)).collect())
    }

    /// `ln f(y) + sum_i ln q_i(x_i | y)` for one row; each `q_i` is floored
    /// at the KDE density floor before the log.
    pub fn log_posterior_unnorm(&self, row: &[Value], y: f64) -> Result<f64> {
        let row = self.encode_row(row)?;
        let pre = self.prepare_row(&row);
        let mut terms = YTerms::default();
        self.y_terms(y, &mut terms);
        Ok(self.combine(&pre, &terms))
    }

    /// `P(X_i = v | y)` for every category `v` of the categorical feature
    /// stored at `feature` (an index into [`NbrModel::features`]).
    pub fn categorical_conditional(&self, feature: usize, y: f64) -> Option<Vec<f64>> {
        let mut terms = YTerms::default();
        self.y_terms(y, &mut terms);
        match &self.compiled[feature] {
            CompiledFeature::Categorical { .. } => {
                let slot = self.categorical_slot(feature);
                Some(terms.categorical[slot].iter().map(|l| l.exp()).collect())
            }
            CompiledFeature::Numeric { .. } => None,
        }
    }

    fn categorical_slot(&self, feature: usize) -> usize {
        self.compiled[..feature]
            .iter()
            .filter(|f| matches!(f, CompiledFeature::Categorical { .. }))
            .count()
    }

    /// Row-dependent, target-independent quantities.
    fn prepare_row(&self, row: &[f64]) -> RowTerms {
        let mut numeric = Vec::new();
        let mut categorical = Vec::new();
        for f in &self.compiled {
            match f {
                CompiledFeature::Numeric {
                    column,
                    xs,
                    inv_two_hx2,
                    ln_scale,
                    ..
                } => {
                    let x = row[*column];
                    if x.is_nan() {
                        numeric.push(None);
                        continue;
                    }
                    let mut a: Vec<f64> = xs.iter().map(|&xj| -(x - xj) * (x - xj) * inv_two_hx2).collect();
                    let amax = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    a.iter_mut().for_each(|v| *v = (*v - amax).exp());
                    numeric.push(Some((a, ln_scale + amax)));
                }
                CompiledFeature::Categorical { column, .. } => {
                    let v = row[*column];
                    categorical.push((!v.is_nan()).then_some(v as usize));
                }
            }
        }
        RowTerms { numeric, categorical }
    }

    /// Target-dependent, row-independent quantities at `y`.
    fn y_terms(&self, y: f64, out: &mut YTerms) {
        let n = self.ys.len();
        let dmin = self
            .ys
            .iter()
            .map(|&yj| (y - yj) * (y - yj))
            .fold(f64::INFINITY, f64::min);
        out.weights.clear();
        out.ln_sums.clear();
        out.ln_density.clear();
        for k in &self.kernels {
            let shift = -dmin * k.inv_two_h2;
            let mut sum = 0.0;
            for &yj in &self.ys {
                let e = (-(y - yj) * (y - yj) * k.inv_two_h2 - shift).exp();
                out.weights.push(e);
                sum += e;
            }
            let ln_sum = sum.ln();
            out.ln_sums.push(ln_sum);
            out.ln_density.push(shift + ln_sum - k.ln_norm);
        }
        debug_assert_eq!(out.weights.len(), n * self.kernels.len());

        let ln_marginal = out.ln_density[self.target_kernel];
        out.categorical.clear();
        for f in &self.compiled {
            if let CompiledFeature::Categorical {
                categories,
                ln_priors,
                ..
            } = f
            {
                let joint: Vec<f64> = categories
                    .iter()
                    .zip(ln_priors)
                    .map(|(c, lp)| {
                        let ld = match c {
                            CategoryDensity::Own {
                                points,
                                inv_two_h2,
                                ln_norm,
                            } => {
                                let t = points.iter().map(|&p| -(y - p) * (y - p) * inv_two_h2);
                                let m = t.clone().fold(f64::NEG_INFINITY, f64::max);
                                m + t.map(|v| (v - m).exp()).sum::<f64>().ln() - ln_norm
                            }
                            CategoryDensity::Marginal => ln_marginal,
                        };
                        ld + lp
                    })
                    .collect();
                let m = joint.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = m + joint.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
                out.categorical
                    .push(joint.iter().map(|v| (v - lse).max(kde::ln_floor())).collect());
            }
        }
    }

    fn combine(&self, row: &RowTerms, yt: &YTerms) -> f64 {
        let n = self.ys.len();
        let floor = kde::ln_floor();
        let mut total = yt.ln_density[self.target_kernel];
        let mut num_i = 0;
        let mut cat_i = 0;
        for f in &self.compiled {
            match f {
                CompiledFeature::Numeric { kernel, .. } => {
                    if let Some((w, offset)) = &row.numeric[num_i] {
                        let e = &yt.weights[kernel * n..(kernel + 1) * n];
                        let num: f64 = w.iter().zip(e).map(|(a, b)| a * b).sum();
                        total += (offset + num.ln() - yt.ln_sums[*kernel]).max(floor);
                    }
                    num_i += 1;
                }
                CompiledFeature::Categorical { .. } => {
                    if let Some(v) = row.categorical[cat_i] {
                        total += yt.categorical[cat_i][v];
                    }
                    cat_i += 1;
                }
            }
        }
        total
    }

    fn level_one(&self, cfg: &ModeSearchConfig) -> (Vec<f64>, Vec<YTerms>) {
        let (lo, hi) = self.y_range;
        let g = cfg.coarse_points;
        let grid: Vec<f64> = (0..g)
            .map(|i| {
                if i == g - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (g - 1) as f64
                }
            })
            .collect();
        let terms = grid
            .iter()
            .map(|&y| {
                let mut t = YTerms::default();
                self.y_terms(y, &mut t);
                t
            })
            .collect();
        (grid, terms)
    }

    fn search_mode(
        &self,
        row: &RowTerms,
        cfg: &ModeSearchConfig,
        level_one: &(Vec<f64>, Vec<YTerms>),
        scratch: &mut YTerms,
    ) -> f64 {
        let g = cfg.grid_points;
        let mut ys = level_one.0.clone();
        let mut vals: Vec<f64> = level_one.1.iter().map(|t| self.combine(row, t)).collect();
        let mut best = argmax_first(&vals);
        let mid = (g - 1) / 2;
        for _ in 1..cfg.levels {
            let left = best.saturating_sub(1);
            let right = (best + 1).min(ys.len() - 1);
            let (a, b) = (ys[left], ys[right]);
            let (va, vb) = (vals[left], vals[right]);
            let centre = (left + 1 == best && best + 1 == right && g % 2 == 1)
                .then(|| (ys[best], vals[best]));
            let mut next_ys = Vec::with_capacity(g);
            let mut next_vals = Vec::with_capacity(g);
            for i in 0..g {
                let (y, v) = if i == 0 {
                    (a, va)
                } else if i == g - 1 {
                    (b, vb)
                } else if let (true, Some(c)) = (i == mid, centre) {
                    c
                } else {
                    let y = a + (b - a) * i as f64 / (g - 1) as f64;
                    self.y_terms(y, scratch);
                    (y, self.combine(row, scratch))
                };
                next_ys.push(y);
                next_vals.push(v);
            }
            ys = next_ys;
            vals = next_vals;
            best = argmax_first(&vals);
        }
        ys[best]
    }

    pub fn predict(&self, row: &[Value], cfg: &ModeSearchConfig) -> Result<f64> {
        cfg.validate()?;
        let row = self.encode_row(row)?;
        let level_one = self.level_one(cfg);
        let mut scratch = YTerms::default();
        Ok(self.search_mode(&self.prepare_row(&row), cfg, &level_one, &mut scratch))
    }

    pub fn predict_many(&self, rows: &EvalSet, cfg: &ModeSearchConfig) -> Result<Vec<f64>> {
        cfg.validate()?;
        if rows.n_columns != self.n_columns {
            return Err(Error::DimensionMismatch {
                expected: self.n_columns,
                got: rows.n_columns,
            });
        }
        let level_one = self.level_one(cfg);
        let mut scratch = YTerms::default();
        Ok(rows
            .rows
            .iter()
            .map(|r| self.search_mode(&self.prepare_row(r), cfg, &level_one, &mut scratch))
            .collect())
    }

    pub fn rmse(&self, ds: &Dataset, cfg: &ModeSearchConfig) -> Result<f64> {
        self.rmse_prepared(&EvalSet::from_dataset(ds)?, cfg)
    }

    pub fn rmse_prepared(&self, rows: &EvalSet, cfg: &ModeSearchConfig) -> Result<f64> {
        if rows.rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let preds = self.predict_many(rows, cfg)?;
        Ok(crate::rmse_of(&preds, &rows.targets))
    }
}

/// Rows pre-converted for repeated evaluation (e.g. inside a fitness
/// function).
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSet {
    n_columns: usize,
    rows: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl EvalSet {
    pub fn from_dataset(ds: &Dataset) -> Result<Self> {
        let t = ds.target_index();
        let mut rows = Vec::with_capacity(ds.n_rows());
        let mut targets = Vec::with_capacity(ds.n_rows());
        for r in ds.rows() {
            let target = r[t].as_f64().ok_or_else(|| {
                Error::Schema("evaluation rows need a target value".into())
            })?;
            rows.push(r.iter().map(|v| v.as_f64().unwrap_or(f64::NAN)).collect());
            targets.push(target);
        }
        Ok(EvalSet {
            n_columns: ds.n_attributes(),
            rows,
            targets,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }
}

#[derive(Debug, Default, Clone)]
struct YTerms {
    /// Shifted target-kernel weights, one block of `n` per kernel.
    weights: Vec<f64>,
    ln_sums: Vec<f64>,
    ln_density: Vec<f64>,
    /// `ln P(X_i = v | y)` per categorical feature, floored.
    categorical: Vec<Vec<f64>>,
}

struct RowTerms {
    /// Per numeric feature: normalised x-kernel weights and the log offset
    /// that restores their scale (`None` for a missing cell).
    numeric: Vec<Option<(Vec<f64>, f64)>>,
    categorical: Vec<Option<usize>>,
}

/// First index of the maximum; NaN never wins.
fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] || values[best].is_nan() && !v.is_nan() {
            best = i;
        }
    }
    best
}
