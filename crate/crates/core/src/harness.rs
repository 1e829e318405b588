//! Experiment orchestration: load, impute and split each dataset once,
//! compute the NBR and OLS baselines, sweep `phi x n`, aggregate repeats,
//! and write reports.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linreg::{fit_ols, lr_rmse, DEFAULT_RIDGE};
use crate::nbr::{ModeSearchConfig, NbrModel};
use crate::peak::{self, PeakConfig};
use crate::stats::{aggregate, RunConfig, RunReport};
use crate::surrogate::{evolve, Evolved, Optimizer, PipelineConfig};
use crate::tabular::{self, Dataset, Format, TargetColumn};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Nbr,
    Lr,
    CsoNbr,
    SpsoNbr,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Nbr => "nbr",
            Algorithm::Lr => "lr",
            Algorithm::CsoNbr => "cso-nbr",
            Algorithm::SpsoNbr => "spso-nbr",
        }
    }

    fn evolves(self) -> bool {
        matches!(self, Algorithm::CsoNbr | Algorithm::SpsoNbr)
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nbr" => Ok(Algorithm::Nbr),
            "lr" => Ok(Algorithm::Lr),
            "cso-nbr" => Ok(Algorithm::CsoNbr),
            "spso-nbr" => Ok(Algorithm::SpsoNbr),
            other => Err(Error::Config(format!("unknown algorithm {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSource {
    pub path: PathBuf,
    pub format: Format,
    pub target: TargetColumn,
}

impl DatasetSource {
    /// File stem, used to name report files.
    pub fn name(&self) -> String {
        self.path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub datasets: Vec<DatasetSource>,
    pub split: f64,
    pub shuffle: bool,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub swarm_size: usize,
    pub iterations: usize,
    pub repeats: usize,
    pub phis: Vec<f64>,
    pub ns: Vec<usize>,
    pub mode: ModeSearchConfig,
    pub fitness_subsample: Option<usize>,
    /// Record per-run wall-clock seconds. Timings are the only
    /// non-reproducible part of a report.
    pub record_timing: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            datasets: Vec::new(),
            split: 0.66,
            shuffle: true,
            seed: 0,
            algorithm: Algorithm::CsoNbr,
            swarm_size: 100,
            iterations: 1000,
            repeats: 10,
            phis: vec![0.1],
            ns: vec![10],
            mode: ModeSearchConfig::default(),
            fitness_subsample: None,
            record_timing: true,
        }
    }
}

impl ExperimentSpec {
    /// s = 50, t_max = 200, 3 repeats.
    pub fn quick(mut self) -> Self {
        self.swarm_size = 50;
        self.iterations = 200;
        self.repeats = 3;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(Error::Config("no datasets given".into()));
        }
        if self.phis.is_empty() || self.ns.is_empty() {
            return Err(Error::Config("sweep lists must be non-empty".into()));
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(Error::InvalidSplit(format!("fraction {} not in (0, 1)", self.split)));
        }
        if self.algorithm.evolves() {
            for cell in self.cells() {
                self.pipeline(cell.phi.unwrap_or(0.0), cell.n, 0).validate()?;
            }
            self.optimizer(0.0).validate_shape()?;
        }
        self.mode.validate()
    }

    fn optimizer(&self, phi: f64) -> Optimizer {
        match self.algorithm {
            Algorithm::SpsoNbr => Optimizer::spso(self.swarm_size, self.iterations),
            _ => Optimizer::cso(self.swarm_size, self.iterations, phi),
        }
    }

    fn pipeline(&self, phi: f64, n: usize, seed: u64) -> PipelineConfig {
        PipelineConfig {
            optimizer: self.optimizer(phi),
            n,
            mode: self.mode,
            repeats: self.repeats,
            seed,
            fitness_subsample: self.fitness_subsample,
        }
    }

    /// Sweep cells, `phi` outer and `n` inner. SPSO ignores `phi`;
    /// the baselines have a single cell.
    pub fn cells(&self) -> Vec<Cell> {
        match self.algorithm {
            Algorithm::Nbr | Algorithm::Lr => vec![Cell { phi: None, n: 0 }],
            Algorithm::SpsoNbr => self.ns.iter().map(|&n| Cell { phi: None, n }).collect(),
            Algorithm::CsoNbr => self
                .phis
                .iter()
                .flat_map(|&phi| self.ns.iter().map(move |&n| Cell { phi: Some(phi), n }))
                .collect(),
        }
    }
}

impl Optimizer {
    fn validate_shape(&self) -> Result<()> {
        let s = self.swarm_size();
        match self {
            Optimizer::Cso { .. } if s < 2 || s % 2 != 0 => {
                Err(Error::Config(format!("CSO swarm size {s} must be even and at least 2")))
            }
            Optimizer::Spso { .. } if s == 0 => Err(Error::Config("SPSO swarm size must be positive".into())),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub phi: Option<f64>,
    pub n: usize,
}

/// Seed of repeat `repeat` in sweep cell `cell`.
pub fn derived_seed(base: u64, cell: usize, repeat: usize) -> u64 {
    base.wrapping_add(1000 * cell as u64).wrapping_add(repeat as u64)
}

#[derive(Debug, Clone)]
pub struct BestSurrogate {
    pub label: String,
    pub surrogate: Dataset,
}

#[derive(Debug, Clone)]
pub struct DatasetOutcome {
    pub name: String,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub reports: Vec<RunReport>,
    pub surrogates: Vec<BestSurrogate>,
}

struct RepeatResult {
    test_rmse: f64,
    seconds: f64,
    evolved: Evolved,
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<DatasetOutcome>> {
    run_experiment_with_progress(spec, &mut |_| {})
}

pub fn run_experiment_with_progress(
    spec: &ExperimentSpec,
    progress: &mut dyn FnMut(&str),
) -> Result<Vec<DatasetOutcome>> {
    spec.validate()?;
    spec.datasets
        .iter()
        .map(|src| {
            let ds = tabular::load_dataset(&src.path, src.format, &src.target)?;
            run_on_dataset(spec, &src.name(), &ds, progress)
        })
        .collect()
}

/// Runs the experiment on an in-memory dataset.
pub fn run_on_dataset(
    spec: &ExperimentSpec,
    name: &str,
    ds: &Dataset,
    progress: &mut dyn FnMut(&str),
) -> Result<DatasetOutcome> {
    if spec.phis.is_empty() || spec.ns.is_empty() {
        return Err(Error::Config("sweep lists must be non-empty".into()));
    }
    let ds = tabular::impute(ds)?;
    let (train_rows, test_rows) = tabular::split_indices(ds.n_rows(), spec.split, spec.seed, spec.shuffle)?;
    let train = ds.select(&train_rows);
    let test = ds.select(&test_rows);

    let t0 = Instant::now();
    let nbr = NbrModel::train(&train, &spec.mode)?;
    let nbr_rmse = nbr.rmse(&test, &spec.mode)?;
    let nbr_seconds = t0.elapsed().as_secs_f64();
    let t0 = Instant::now();
    let lr = lr_rmse(&fit_ols(&train, DEFAULT_RIDGE)?, &test)?;
    let lr_seconds = t0.elapsed().as_secs_f64();
    progress(&format!("{name}: NBR test RMSE {nbr_rmse:.4}, LR test RMSE {lr:.4}"));

    let mut reports = Vec::new();
    let mut surrogates = Vec::new();
    for (ci, cell) in spec.cells().into_iter().enumerate() {
        let cell_seed = derived_seed(spec.seed, ci, 0);
        let config = RunConfig {
            dataset: name.to_string(),
            algo: spec.algorithm.name().to_string(),
            phi: cell.phi,
            n: cell.n,
            s: if spec.algorithm.evolves() { spec.swarm_size } else { 0 },
            t_max: if spec.algorithm.evolves() { spec.iterations } else { 0 },
            seed: cell_seed,
        };
        let (samples, seconds) = match spec.algorithm {
            Algorithm::Nbr => (vec![nbr_rmse], vec![nbr_seconds]),
            Algorithm::Lr => (vec![lr], vec![lr_seconds]),
            Algorithm::CsoNbr | Algorithm::SpsoNbr => {
                let pipeline = spec.pipeline(cell.phi.unwrap_or(0.0), cell.n, cell_seed);
                let runs = run_repeats(&train, &test, &pipeline)?;
                let best = runs
                    .iter()
                    .min_by(|a, b| a.test_rmse.total_cmp(&b.test_rmse))
                    .expect("at least one repeat");
                surrogates.push(BestSurrogate {
                    label: surrogate_label(name, spec.algorithm, cell),
                    surrogate: best.evolved.surrogate.clone(),
                });
                (
                    runs.iter().map(|r| r.test_rmse).collect(),
                    runs.iter().map(|r| r.seconds).collect(),
                )
            }
        };
        let mut report = aggregate(&samples, nbr_rmse, &config)?;
        report.lr_rmse = Some(lr);
        report.wall_seconds = if spec.record_timing { seconds } else { Vec::new() };
        progress(&format!(
            "{name} {} phi={} n={}: {:.4} ± {:.4} (best {:.4})",
            report.algo,
            fmt_phi(report.phi),
            report.n,
            report.mean,
            report.std,
            report.best
        ));
        reports.push(report);
    }
    Ok(DatasetOutcome {
        name: name.to_string(),
        train_rows,
        test_rows,
        reports,
        surrogates,
    })
}

fn run_repeats(train: &Dataset, test: &Dataset, pipeline: &PipelineConfig) -> Result<Vec<RepeatResult>> {
    (0..pipeline.repeats)
        .into_par_iter()
        .map(|i| {
            let cfg = pipeline.for_repeat(i);
            let t0 = Instant::now();
            let evolved = evolve(train, &cfg)?;
            let seconds = t0.elapsed().as_secs_f64();
            assert_eq!(
                evolved.result.evaluations,
                cfg.optimizer.evaluation_budget(),
                "fitness evaluation count differs from the budget"
            );
            let test_rmse = evolved.model.rmse(test, &cfg.mode)?;
            Ok(RepeatResult {
                test_rmse,
                seconds,
                evolved,
            })
        })
        .collect()
}

fn fmt_phi(phi: Option<f64>) -> String {
    phi.map_or_else(|| "-".into(), |p| p.to_string())
}

fn surrogate_label(name: &str, algo: Algorithm, cell: Cell) -> String {
    match cell.phi {
        Some(phi) => format!("{name}_{}_phi{phi}_n{}", algo.name(), cell.n),
        None => format!("{name}_{}_n{}", algo.name(), cell.n),
    }
}

/// Text table: dataset, algorithm, cell, NBR and LR baselines,
/// mean ± std, p-value and best, four decimals.
pub fn format_table(reports: &[RunReport]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<16} {:<9} {:>5} {:>4} {:>10} {:>10} {:>19} {:>8} {:>10}",
        "dataset", "algo", "phi", "n", "NBR", "LR", "mean ± std", "p", "best"
    );
    for r in reports {
        let lr = r.lr_rmse.map_or_else(|| "-".into(), |v| format!("{v:.4}"));
        let p = r.p_value.map_or_else(|| "-".into(), |v| format!("{v:.4}"));
        let _ = writeln!(
            s,
            "{:<16} {:<9} {:>5} {:>4} {:>10.4} {:>10} {:>19} {:>8} {:>10.4}",
            r.dataset,
            r.algo,
            fmt_phi(r.phi),
            r.n,
            r.baseline_nbr_rmse,
            lr,
            format!("{:.4} ± {:.4}", r.mean, r.std),
            p,
            r.best
        );
    }
    s
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `<name>.json`, `<name>.txt` and one CSV per best surrogate.
pub fn write_report(outcomes: &[DatasetOutcome], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for o in outcomes {
        let json = dir.join(format!("{}.json", o.name));
        write_file(&json, serde_json::to_string_pretty(&o.reports)? + "\n")?;
        let txt = dir.join(format!("{}.txt", o.name));
        write_file(&txt, format_table(&o.reports))?;
        written.extend([json, txt]);
        for b in &o.surrogates {
            let csv = dir.join(format!("{}.csv", b.label));
            write_file(&csv, b.surrogate.to_csv_string(true))?;
            written.push(csv);
        }
    }
    Ok(written)
}

pub fn read_reports(path: &Path) -> Result<Vec<RunReport>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Peak problem run: fresh train and test samples, OLS and NBR baselines,
/// and `pipeline.repeats` evolutions with seeds `pipeline.seed + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakExperiment {
    pub peak: PeakConfig,
    pub test_samples: usize,
    pub pipeline: PipelineConfig,
}

impl PeakExperiment {
    /// 100 training and 100 test points, s = 100, t_max = 1000, phi = 0.1,
    /// n = 10, 10 repeats.
    pub fn standard(seed: u64) -> Self {
        PeakExperiment {
            peak: PeakConfig {
                seed,
                ..Default::default()
            },
            test_samples: 100,
            pipeline: PipelineConfig {
                seed,
                ..Default::default()
            },
        }
    }

    pub fn test_config(&self) -> PeakConfig {
        PeakConfig {
            samples: self.test_samples,
            seed: self.peak.seed ^ 0x7e57_7e57_7e57_7e57,
            ..self.peak.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakRun {
    pub seed: u64,
    pub train_rmse: f64,
    pub test_rmse: f64,
    pub evaluations: u64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakSummary {
    pub lr_train_rmse: f64,
    pub lr_test_rmse: f64,
    pub nbr_train_rmse: f64,
    pub nbr_test_rmse: f64,
    pub runs: Vec<PeakRun>,
    pub mean_test_rmse: f64,
    pub std_test_rmse: f64,
    pub best_test_rmse: f64,
}

#[derive(Debug, Clone)]
pub struct PeakOutcome {
    pub train: Dataset,
    pub test: Dataset,
    pub summary: PeakSummary,
    pub lr: crate::linreg::LinearModel,
    pub nbr: NbrModel,
    /// The repeat with the lowest test RMSE.
    pub best: Evolved,
}

pub fn run_peak(exp: &PeakExperiment) -> Result<PeakOutcome> {
    exp.peak.validate()?;
    let train = peak::generate_peak(&exp.peak);
    let test = peak::generate_peak(&exp.test_config());
    let mode = exp.pipeline.mode;

    let lr = fit_ols(&train, DEFAULT_RIDGE)?;
    let nbr = NbrModel::train(&train, &mode)?;
    let runs = run_repeats(&train, &test, &exp.pipeline)?;
    let peak_runs = runs
        .iter()
        .enumerate()
        .map(|(i, r)| PeakRun {
            seed: exp.pipeline.for_repeat(i).seed,
            train_rmse: r.evolved.result.best_fitness,
            test_rmse: r.test_rmse,
            evaluations: r.evolved.result.evaluations,
            wall_seconds: r.seconds,
        })
        .collect::<Vec<_>>();
    let tests: Vec<f64> = peak_runs.iter().map(|r| r.test_rmse).collect();
    let (mean, std) = tabular::mean_stddev(&tests);
    let best = runs
        .into_iter()
        .min_by(|a, b| a.test_rmse.total_cmp(&b.test_rmse))
        .expect("at least one repeat");
    let summary = PeakSummary {
        lr_train_rmse: lr_rmse(&lr, &train)?,
        lr_test_rmse: lr_rmse(&lr, &test)?,
        nbr_train_rmse: nbr.rmse(&train, &mode)?,
        nbr_test_rmse: nbr.rmse(&test, &mode)?,
        runs: peak_runs,
        mean_test_rmse: mean,
        std_test_rmse: std,
        best_test_rmse: best.test_rmse,
    };
    Ok(PeakOutcome {
        train,
        test,
        summary,
        lr,
        nbr,
        best: best.evolved,
    })
}

/// Writes the samples, the summary, and contour grids for the ground truth,
/// OLS, NBR and the best CSO-NBR model.
pub fn write_peak(outcome: &PeakOutcome, exp: &PeakExperiment, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mode = exp.pipeline.mode;
    let cfg = &exp.peak;
    let grids = [
        ("truth", peak::contour_grid(|x, y| Ok(cfg.height(x, y)), cfg)?),
        ("lr", peak::contour_grid(|x, y| outcome.lr.predict(&peak::query_row(x, y)), cfg)?),
        (
            "nbr",
            peak::contour_grid(|x, y| outcome.nbr.predict(&peak::query_row(x, y), &mode), cfg)?,
        ),
        (
            "cso_nbr",
            peak::contour_grid(|x, y| outcome.best.model.predict(&peak::query_row(x, y), &mode), cfg)?,
        ),
    ];
    let mut files: Vec<(String, String)> = grids
        .iter()
        .map(|(name, g)| (format!("{name}.csv"), peak::grid_to_csv(g)))
        .collect();
    files.push(("train.csv".into(), outcome.train.to_csv_string(true)));
    files.push(("test.csv".into(), outcome.test.to_csv_string(true)));
    files.push(("best_surrogate.csv".into(), outcome.best.surrogate.to_csv_string(true)));
    files.push(("peak.json".into(), serde_json::to_string_pretty(&outcome.summary)? + "\n"));
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        write_file(&path, body)?;
        written.push(path);
    }
    Ok(written)
}
