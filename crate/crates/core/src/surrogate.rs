//! Evolving small artificial training sets for NBR.
//!
//! A particle of dimension `d * n` is decoded row-major into an `n`-row
//! dataset over the real schema (`d` attributes, target included). Its
//! fitness is the RMSE, on the real training data, of an NBR model trained
//! on the decoded rows.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nbr::{EvalSet, ModeSearchConfig, NbrModel, ReferenceRanges};
use crate::swarm::{self, CsoConfig, OptResult, SpsoConfig};
use crate::tabular::{self, AttributeSchema, ColumnStats, Dataset, Value};
use crate::seeded_rng;

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateCodec {
    schema: Vec<AttributeSchema>,
    rows: usize,
}

impl SurrogateCodec {
    pub fn new(schema: Vec<AttributeSchema>, rows: usize) -> Result<Self> {
        if rows == 0 {
            return Err(Error::Config("surrogate datasets need at least one row".into()));
        }
        // Validates the schema.
        Dataset::new(schema.clone(), Vec::new())?;
        Ok(SurrogateCodec { schema, rows })
    }

    pub fn schema(&self) -> &[AttributeSchema] {
        &self.schema
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Particle dimension `d * n`.
    pub fn dimension(&self) -> usize {
        self.schema.len() * self.rows
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: len,
            });
        }
        Ok(())
    }

    /// Numeric cells are copied verbatim; categorical cells are clamped to
    /// `[0, k - 1]` and rounded half-up to a category index.
    pub fn decode(&self, x: &[f64]) -> Result<Dataset> {
        self.check_len(x.len())?;
        let d = self.schema.len();
        let rows = x
            .chunks_exact(d)
            .map(|chunk| {
                chunk
                    .iter()
                    .zip(&self.schema)
                    .map(|(&v, attr)| {
                        if attr.is_categorical() {
                            Value::Category(nearest_category(v, attr.category_count()))
                        } else {
                            Value::Numeric(v)
                        }
                    })
                    .collect()
            })
            .collect();
        Dataset::new(self.schema.clone(), rows)
    }

    /// Inverse of [`decode`](Self::decode) for datasets with this schema
    /// and row count.
    pub fn encode(&self, ds: &Dataset) -> Result<Vec<f64>> {
        if ds.schema() != self.schema.as_slice() {
            return Err(Error::Schema("dataset schema differs from the codec schema".into()));
        }
        self.check_len(ds.n_rows() * ds.n_attributes())?;
        ds.rows()
            .iter()
            .flatten()
            .map(|v| {
                v.as_f64()
                    .ok_or_else(|| Error::Schema("cannot encode a missing cell".into()))
            })
            .collect()
    }

    /// Per-dimension initialisation box: the attribute's `(min, max)` in
    /// `train` for numeric columns, `(0, k - 1)` for categorical ones.
    pub fn init_bounds(&self, train: &Dataset) -> Result<Vec<(f64, f64)>> {
        if train.schema() != self.schema.as_slice() {
            return Err(Error::Schema("training schema differs from the codec schema".into()));
        }
        let stats = tabular::stats(train);
        let per_attr = stats
            .columns
            .iter()
            .zip(&self.schema)
            .map(|(c, attr)| match c {
                ColumnStats::Categorical { .. } => Ok((0.0, (attr.category_count() - 1) as f64)),
                ColumnStats::Numeric { .. } => c
                    .range()
                    .ok_or_else(|| Error::AllMissing(attr.name.clone())),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((0..self.rows).flat_map(|_| per_attr.iter().copied()).collect())
    }
}

fn nearest_category(v: f64, k: usize) -> usize {
    if v.is_nan() {
        return 0;
    }
    let clamped = v.clamp(0.0, (k - 1) as f64);
    ((clamped + 0.5).floor() as usize).min(k - 1)
}

/// The CSO-NBR fitness: decode, train NBR on the decoded rows, return the
/// RMSE on the real training rows. Total: any failure maps to `+inf`.
#[derive(Debug, Clone)]
pub struct SurrogateFitness {
    codec: SurrogateCodec,
    reference: ReferenceRanges,
    eval: EvalSet,
    mode: ModeSearchConfig,
}

impl SurrogateFitness {
    pub fn new(codec: SurrogateCodec, train: &Dataset, mode: ModeSearchConfig) -> Result<Self> {
        Self::with_eval_rows(codec, train, train, mode)
    }

    /// Fitness evaluated on `eval_rows` (e.g. a subsample of `train`);
    /// fallback bandwidth scales still come from `train`.
    pub fn with_eval_rows(
        codec: SurrogateCodec,
        train: &Dataset,
        eval_rows: &Dataset,
        mode: ModeSearchConfig,
    ) -> Result<Self> {
        mode.validate()?;
        if eval_rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(SurrogateFitness {
            codec,
            reference: ReferenceRanges::from_dataset(train),
            eval: EvalSet::from_dataset(eval_rows)?,
            mode,
        })
    }

    pub fn codec(&self) -> &SurrogateCodec {
        &self.codec
    }

    /// Trains the model a particle stands for.
    pub fn model(&self, x: &[f64]) -> Result<NbrModel> {
        let ds = self.codec.decode(x)?;
        NbrModel::train_with_reference(&ds, &self.mode, &self.reference)
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.model(x)
            .and_then(|m| m.rmse_prepared(&self.eval, &self.mode))
            .ok()
            .filter(|v| !v.is_nan())
            .unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Optimizer {
    Cso {
        swarm_size: usize,
        iterations: usize,
        phi: f64,
    },
    Spso {
        swarm_size: usize,
        iterations: usize,
        inertia: f64,
        cognitive: f64,
        social: f64,
    },
}

impl Optimizer {
    pub fn cso(swarm_size: usize, iterations: usize, phi: f64) -> Self {
        Optimizer::Cso {
            swarm_size,
            iterations,
            phi,
        }
    }

    /// SPSO with inertia 0.6 and acceleration constants 1.7.
    pub fn spso(swarm_size: usize, iterations: usize) -> Self {
        Optimizer::Spso {
            swarm_size,
            iterations,
            inertia: 0.6,
            cognitive: 1.7,
            social: 1.7,
        }
    }

    pub fn swarm_size(&self) -> usize {
        match *self {
            Optimizer::Cso { swarm_size, .. } | Optimizer::Spso { swarm_size, .. } => swarm_size,
        }
    }

    pub fn iterations(&self) -> usize {
        match *self {
            Optimizer::Cso { iterations, .. } | Optimizer::Spso { iterations, .. } => iterations,
        }
    }

    pub fn phi(&self) -> Option<f64> {
        match *self {
            Optimizer::Cso { phi, .. } => Some(phi),
            Optimizer::Spso { .. } => None,
        }
    }

    pub fn evaluation_budget(&self) -> u64 {
        let (s, t) = (self.swarm_size() as u64, self.iterations() as u64);
        match self {
            Optimizer::Cso { .. } => s + s / 2 * t,
            Optimizer::Spso { .. } => s * (t + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub optimizer: Optimizer,
    /// Surrogate row count.
    pub n: usize,
    pub mode: ModeSearchConfig,
    pub repeats: usize,
    pub seed: u64,
    /// Evaluate fitness on this many randomly chosen training rows.
    pub fitness_subsample: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            optimizer: Optimizer::cso(100, 1000, 0.1),
            n: 10,
            mode: ModeSearchConfig::default(),
            repeats: 10,
            seed: 0,
            fitness_subsample: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeat count must be at least 1".into()));
        }
        if self.fitness_subsample == Some(0) {
            return Err(Error::Config("fitness subsample must be positive".into()));
        }
        self.mode.validate()
    }

    /// The configuration for repeat `i` (seed offset by `i`).
    pub fn for_repeat(&self, i: usize) -> PipelineConfig {
        PipelineConfig {
            seed: self.seed.wrapping_add(i as u64),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct Evolved {
    pub surrogate: Dataset,
    pub model: NbrModel,
    pub result: OptResult,
}

pub fn evolve(train: &Dataset, cfg: &PipelineConfig) -> Result<Evolved> {
    evolve_observed(train, cfg, &mut ())
}

pub fn evolve_observed(
    train: &Dataset,
    cfg: &PipelineConfig,
    observer: &mut dyn swarm::Observer,
) -> Result<Evolved> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if train.has_missing() {
        return Err(Error::Schema("training data has missing values; impute first".into()));
    }
    let codec = SurrogateCodec::new(train.schema().to_vec(), cfg.n)?;
    let bounds = codec.init_bounds(train)?;
    let fitness = match cfg.fitness_subsample {
        Some(m) if m < train.n_rows() => {
            let mut idx: Vec<usize> = (0..train.n_rows()).collect();
            idx.shuffle(&mut seeded_rng(cfg.seed ^ 0x5eed_5ab5));
            idx.truncate(m);
            idx.sort_unstable();
            SurrogateFitness::with_eval_rows(codec, train, &train.select(&idx), cfg.mode)?
        }
        _ => SurrogateFitness::new(codec, train, cfg.mode)?,
    };
    let f = |x: &[f64]| fitness.evaluate(x);
    let result = match cfg.optimizer {
        Optimizer::Cso {
            swarm_size,
            iterations,
            phi,
        } => swarm::cso_minimize_observed(
            &f,
            &CsoConfig {
                swarm_size,
                iterations,
                phi,
                seed: cfg.seed,
                bounds,
            },
            observer,
        )?,
        Optimizer::Spso {
            swarm_size,
            iterations,
            inertia,
            cognitive,
            social,
        } => swarm::spso_minimize_observed(
            &f,
            &SpsoConfig {
                swarm_size,
                iterations,
                inertia,
                cognitive,
                social,
                seed: cfg.seed,
                bounds,
            },
            observer,
        )?,
    };
    let surrogate = fitness.codec().decode(&result.best_position)?;
    let model = fitness.model(&result.best_position)?;
    Ok(Evolved {
        surrogate,
        model,
        result,
    })
}
