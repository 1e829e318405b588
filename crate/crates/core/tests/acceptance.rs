//! Acceptance suite: one PASS/FAIL line per check.
//!
//! Checks that need files absent from the repository (the benchmark
//! datasets) report FAIL but do not affect the exit status unless
//! `CSONBR_ACCEPTANCE_STRICT=1` is set. Point `CSONBR_BENCH_DIR` at a
//! directory holding `bodyfat`, `cpu`, `gascons`, `housing` and `quake` as
//! `.arff` or `.csv` files to run them.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use csonbr::harness::{self, Algorithm, DatasetSource, ExperimentSpec, PeakExperiment, PeakSummary};
use csonbr::kde::{self, BandwidthGrid, Kde1, Kde2};
use csonbr::nbr::{FeatureModel, ModeSearchConfig, NbrModel};
use csonbr::peak::Sampling;
use csonbr::stats::{student_t_cdf, t_test_one_sample_less};
use csonbr::surrogate::{Optimizer, SurrogateCodec, SurrogateFitness};
use csonbr::swarm::{cso_minimize, CsoConfig};
use csonbr::tabular::{AttributeSchema, Dataset, Format, TargetColumn, Value};
use csonbr::{seeded_rng, Rng};
use rand::seq::SliceRandom;
use rand::Rng as _;

struct Outcome {
    id: &'static str,
    pass: bool,
    detail: String,
    /// Failed only because required input files are missing.
    missing_data: bool,
}

#[derive(Default)]
struct Report {
    outcomes: Vec<Outcome>,
}

impl Report {
    fn check(&mut self, id: &'static str, pass: bool, detail: impl Into<String>) {
        let detail = detail.into();
        println!("{} {id}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.outcomes.push(Outcome {
            id,
            pass,
            detail,
            missing_data: false,
        });
    }

    fn missing(&mut self, id: &'static str, detail: impl Into<String>) {
        let detail = detail.into();
        println!("FAIL {id}: {detail}");
        self.outcomes.push(Outcome {
            id,
            pass: false,
            detail,
            missing_data: true,
        });
    }
}

fn peak_experiment() -> PeakExperiment {
    let mut exp = PeakExperiment::standard(0);
    exp.peak.sampling = Sampling::RadiusUniform;
    exp
}

fn criterion_1_and_7(report: &mut Report) {
    let exp = peak_experiment();
    let t0 = Instant::now();
    let cso = harness::run_peak(&exp).expect("peak run");
    let s: &PeakSummary = &cso.summary;
    println!(
        "     peak: OLS train {:.4} test {:.4}; NBR train {:.4} test {:.4}; CSO-NBR tests {:?} ({:.0} s)",
        s.lr_train_rmse,
        s.lr_test_rmse,
        s.nbr_train_rmse,
        s.nbr_test_rmse,
        s.runs.iter().map(|r| (r.test_rmse * 1e4).round() / 1e4).collect::<Vec<_>>(),
        t0.elapsed().as_secs_f64()
    );
    report.check(
        "1a",
        (7.0..=10.5).contains(&s.lr_test_rmse),
        format!("OLS peak test RMSE {:.4} in [7.0, 10.5]", s.lr_test_rmse),
    );
    report.check(
        "1b",
        (1.2..=3.0).contains(&s.nbr_test_rmse),
        format!("NBR peak test RMSE {:.4} in [1.2, 3.0]", s.nbr_test_rmse),
    );
    report.check(
        "1c",
        (0.5..=1.1).contains(&s.mean_test_rmse) && s.best_test_rmse <= 0.9,
        format!(
            "CSO-NBR peak test RMSE mean {:.4} ± {:.4} in [0.5, 1.1], best {:.4} <= 0.9",
            s.mean_test_rmse, s.std_test_rmse, s.best_test_rmse
        ),
    );

    let mut quick = peak_experiment();
    quick.pipeline.optimizer = Optimizer::cso(50, 200, 0.1);
    quick.pipeline.repeats = 3;
    let q = harness::run_peak(&quick).expect("quick peak run").summary;
    report.check(
        "1d",
        q.mean_test_rmse < q.nbr_test_rmse,
        format!(
            "quick profile CSO-NBR mean {:.4} < NBR {:.4}",
            q.mean_test_rmse, q.nbr_test_rmse
        ),
    );

    let mut spso = peak_experiment();
    spso.pipeline.optimizer = Optimizer::spso(50, 1000);
    let t0 = Instant::now();
    let sp = harness::run_peak(&spso).expect("spso peak run").summary;
    let wins = s
        .runs
        .iter()
        .zip(&sp.runs)
        .filter(|(c, p)| c.test_rmse <= p.test_rmse)
        .count();
    println!(
        "     SPSO-NBR tests {:?} ({:.0} s)",
        sp.runs.iter().map(|r| (r.test_rmse * 1e4).round() / 1e4).collect::<Vec<_>>(),
        t0.elapsed().as_secs_f64()
    );
    report.check(
        "7",
        wins >= 7 && s.runs[0].evaluations.abs_diff(sp.runs[0].evaluations) <= 100,
        format!(
            "CSO-NBR <= SPSO-NBR(s=50, t=1000) in {wins}/10 paired trials (budgets {} vs {})",
            s.runs[0].evaluations, sp.runs[0].evaluations
        ),
    );
}

const BENCHMARKS: [&str; 5] = ["bodyfat", "cpu", "gascons", "housing", "quake"];

fn find_benchmark(dir: &Path, name: &str) -> Option<DatasetSource> {
    [("arff", Format::Arff), ("csv", Format::Csv)]
        .into_iter()
        .map(|(ext, format)| (dir.join(format!("{name}.{ext}")), format))
        .find(|(p, _)| p.is_file())
        .map(|(path, format)| DatasetSource {
            path,
            format,
            target: TargetColumn::Last,
        })
}

fn criterion_2(report: &mut Report) {
    let dir = std::env::var_os("CSONBR_BENCH_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/benchmarks"));
    let found: Vec<_> = BENCHMARKS.iter().map(|n| (n, find_benchmark(&dir, n))).collect();
    let missing: Vec<&str> = found.iter().filter(|(_, s)| s.is_none()).map(|(n, _)| **n).collect();
    if !missing.is_empty() {
        report.missing(
            "2",
            format!("benchmark files not found in {}: {}", dir.display(), missing.join(", ")),
        );
        return;
    }
    let spec = ExperimentSpec {
        datasets: found.into_iter().filter_map(|(_, s)| s).collect(),
        algorithm: Algorithm::CsoNbr,
        ..Default::default()
    };
    match harness::run_experiment(&spec) {
        Ok(outcomes) => {
            let wins = outcomes
                .iter()
                .filter(|o| o.reports[0].mean < o.reports[0].baseline_nbr_rmse)
                .count();
            for o in &outcomes {
                let r = &o.reports[0];
                println!("     {}: NBR {:.4}, CSO-NBR {:.4} ± {:.4}", o.name, r.baseline_nbr_rmse, r.mean, r.std);
            }
            report.check("2", wins >= 4, format!("CSO-NBR beats NBR on {wins}/5 benchmarks"));
        }
        Err(e) => report.check("2", false, format!("experiment failed: {e}")),
    }
}

fn random_function(rng: &mut Rng) -> (usize, impl Fn(&[f64]) -> f64 + Sync) {
    let dim = rng.random_range(1..=8);
    let centre: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
    let weights: Vec<f64> = (0..dim).map(|_| rng.random_range(0.1..5.0)).collect();
    let wiggle = rng.random_range(0.0..3.0);
    let f = move |x: &[f64]| {
        x.iter()
            .zip(&centre)
            .zip(&weights)
            .map(|((xi, c), w)| w * (xi - c).powi(2) + wiggle * (3.0 * xi).sin())
            .sum::<f64>()
    };
    (dim, f)
}

fn criterion_3(report: &mut Report) {
    let mut rng = seeded_rng(3);
    let mut monotone = true;
    let mut counts_ok = true;
    for k in 0..100 {
        let (dim, f) = random_function(&mut rng);
        let calls = AtomicU64::new(0);
        let counted = |x: &[f64]| {
            calls.fetch_add(1, Ordering::Relaxed);
            f(x)
        };
        let s = 2 * rng.random_range(1..=15);
        let t = rng.random_range(0..=60);
        let cfg = CsoConfig {
            swarm_size: s,
            iterations: t,
            phi: rng.random_range(0.0..1.0),
            seed: k,
            bounds: vec![(-5.0, 5.0); dim],
        };
        let r = cso_minimize(&counted, &cfg).unwrap();
        monotone &= r.trace.len() == t + 1 && r.trace.windows(2).all(|w| w[1] <= w[0]);
        let expected = (s + s / 2 * t) as u64;
        counts_ok &= r.evaluations == expected && calls.load(Ordering::Relaxed) == expected;
    }
    report.check("3a", monotone, "best-fitness trace nonincreasing on 100 random functions");
    report.check("3b", counts_ok, "fitness evaluations equal s + (s/2) t_max on 100 runs");

    let train = csonbr::peak::generate_peak(&csonbr::peak::PeakConfig {
        samples: 40,
        seed: 5,
        ..Default::default()
    });
    let codec = SurrogateCodec::new(train.schema().to_vec(), 5).unwrap();
    let bounds = codec.init_bounds(&train).unwrap();
    let fitness = SurrogateFitness::new(codec, &train, ModeSearchConfig::default()).unwrap();
    let cfg = CsoConfig {
        swarm_size: 20,
        iterations: 30,
        phi: 0.1,
        seed: 77,
        bounds,
    };
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| cso_minimize(&|x: &[f64]| fitness.evaluate(x), &cfg).unwrap())
    };
    let (one, eight) = (run(1), run(8));
    let bits = |r: &csonbr::swarm::OptResult| {
        (
            r.best_position.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            r.trace.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            r.best_fitness.to_bits(),
            r.evaluations,
        )
    };
    report.check(
        "3c",
        bits(&one) == bits(&eight),
        "surrogate-fitness CSO run bit-identical on 1 and 8 worker threads",
    );

    let sphere = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
    let r = cso_minimize(
        &sphere,
        &CsoConfig {
            swarm_size: 100,
            iterations: 1000,
            phi: 0.1,
            seed: 4,
            bounds: vec![(-100.0, 100.0); 50],
        },
    )
    .unwrap();
    report.check(
        "3d",
        r.best_fitness < 1e-3 * r.trace[0],
        format!("sphere D=50: final {:.3e} < 1e-3 x initial {:.3e}", r.best_fitness, r.trace[0]),
    );
}

fn random_small_dataset(rng: &mut Rng, rows: usize) -> Dataset {
    let m = rng.random_range(1..=3);
    let mut schema = Vec::new();
    for i in 0..m {
        if rng.random_bool(0.7) {
            schema.push(AttributeSchema::numeric(format!("x{i}")));
        } else {
            let k = rng.random_range(2..=3);
            schema.push(AttributeSchema::categorical(
                format!("c{i}"),
                (0..k).map(|c| format!("v{c}")),
            ));
        }
    }
    schema.push(AttributeSchema::target("y"));
    let scale = rng.random_range(0.5..20.0);
    let data = (0..rows)
        .map(|_| {
            schema
                .iter()
                .map(|a| {
                    if a.is_categorical() {
                        Value::Category(rng.random_range(0..a.category_count()))
                    } else {
                        Value::Numeric(rng.random_range(-1.0..1.0) * scale)
                    }
                })
                .collect()
        })
        .collect();
    Dataset::new(schema, data).unwrap()
}

fn random_query(rng: &mut Rng, ds: &Dataset) -> Vec<Value> {
    ds.schema()
        .iter()
        .enumerate()
        .map(|(c, a)| {
            if a.is_target {
                Value::Missing
            } else if a.is_categorical() {
                Value::Category(rng.random_range(0..a.category_count()))
            } else {
                let v = ds.column_values(c);
                let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
                let pad = 0.2 * (hi - lo) + 1e-3;
                Value::Numeric(rng.random_range(lo - pad..hi + pad))
            }
        })
        .collect()
}

fn gauss(d: f64, h: f64) -> f64 {
    (-d * d / (2.0 * h * h)).exp() / ((2.0 * PI).sqrt() * h)
}

/// Posterior over `ys`, normalised by its sum, recomputed from the raw rows
/// and the model's bandwidths.
fn oracle_posterior(model: &NbrModel, ds: &Dataset, row: &[Value], ys: &[f64]) -> Vec<f64> {
    let t = ds.target_index();
    let targets = ds.targets();
    let n = targets.len() as f64;
    let kde1 = |pts: &[f64], h: f64, y: f64| pts.iter().map(|p| gauss(y - p, h)).sum::<f64>() / pts.len() as f64;
    let h_y = model.target_marginal().bandwidth();
    let floor = 1e-300;
    let raw: Vec<f64> = ys
        .iter()
        .map(|&y| {
            let mut p = kde1(&targets, h_y, y).max(floor);
            for f in model.features() {
                let c = f.column();
                match (f, &row[c]) {
                    (FeatureModel::Numeric { joint, .. }, Value::Numeric(x)) => {
                        let (hx, hy) = joint.bandwidths();
                        let j = ds
                            .rows()
                            .iter()
                            .map(|r| gauss(x - r[c].as_f64().unwrap(), hx) * gauss(y - r[t].as_f64().unwrap(), hy))
                            .sum::<f64>()
                            / n;
                        let marg = kde1(&targets, hy, y);
                        p *= (j.max(floor) / marg.max(floor)).max(floor);
                    }
                    (FeatureModel::Categorical { per_category, priors, .. }, Value::Category(v)) => {
                        let k = priors.len();
                        let counts: Vec<usize> = (0..k)
                            .map(|cat| ds.rows().iter().filter(|r| r[c] == Value::Category(cat)).count())
                            .collect();
                        let like: Vec<f64> = (0..k)
                            .map(|cat| {
                                let prior = (counts[cat] + 1) as f64 / (ds.n_rows() + k) as f64;
                                let dens = match &per_category[cat] {
                                    Some(kde) => {
                                        let pts: Vec<f64> = ds
                                            .rows()
                                            .iter()
                                            .filter(|r| r[c] == Value::Category(cat))
                                            .map(|r| r[t].as_f64().unwrap())
                                            .collect();
                                        kde1(&pts, kde.bandwidth(), y)
                                    }
                                    None => kde1(&targets, h_y, y),
                                };
                                prior * dens.max(floor)
                            })
                            .collect();
                        p *= (like[*v] / like.iter().sum::<f64>()).max(floor);
                    }
                    _ => unreachable!(),
                }
            }
            p
        })
        .collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / z).collect()
}

fn criterion_4(report: &mut Report) {
    let cfg = ModeSearchConfig::default();
    let mut rng = seeded_rng(41);
    let mut worst_rel = 0.0f64;
    let mut worst_abs = 0.0f64;
    let mut argmax_fail = Vec::new();
    let mut max_gap = 0.0f64;
    for k in 0..50 {
        let ds = random_small_dataset(&mut rng, 5);
        let model = NbrModel::train(&ds, &cfg).unwrap();
        let row = random_query(&mut rng, &ds);
        let (lo, hi) = model.y_range();

        let coarse: Vec<f64> = (0..2001).map(|i| lo + (hi - lo) * i as f64 / 2000.0).collect();
        let lp: Vec<f64> = coarse.iter().map(|&y| model.log_posterior_unnorm(&row, y).unwrap()).collect();
        let top = lp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = lp.iter().map(|v| (v - top).exp()).collect();
        let z: f64 = w.iter().sum();
        let oracle = oracle_posterior(&model, &ds, &row, &coarse);
        for (a, b) in w.iter().map(|v| v / z).zip(&oracle) {
            if *b > 1e-12 {
                worst_rel = worst_rel.max((a - b).abs() / b);
            } else {
                worst_abs = worst_abs.max((a - b).abs());
            }
        }

        let dense_n = 1_000_000;
        let step = (hi - lo) / (dense_n - 1) as f64;
        let mut best = (f64::NEG_INFINITY, lo);
        for i in 0..dense_n {
            let y = lo + step * i as f64;
            let v = model.log_posterior_unnorm(&row, y).unwrap();
            if v > best.0 {
                best = (v, y);
            }
        }
        let pred = model.predict(&row, &cfg).unwrap();
        let gap = (pred - best.1).abs();
        let tol = cfg.resolution(hi - lo) + step;
        max_gap = max_gap.max(gap / tol);
        if gap > tol {
            argmax_fail.push((k, gap, tol));
        }
    }
    report.check(
        "4a",
        argmax_fail.is_empty() && worst_rel <= 1e-9 && worst_abs <= 1e-15,
        format!(
            "50 random 5-row models: predict within level-L resolution of the 10^6-point argmax \
             (worst gap/tolerance {max_gap:.3}, failures {argmax_fail:?}); normalised posterior \
             matches the from-scratch oracle (worst relative error {worst_rel:.2e} <= 1e-9, \
             tail absolute error {worst_abs:.2e})"
        ),
    );

    let loo1 = |pts: &[f64], h: f64| -> f64 {
        (0..pts.len())
            .map(|i| {
                let f = pts
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, p)| gauss(pts[i] - p, h))
                    .sum::<f64>()
                    / (pts.len() - 1) as f64;
                -f.max(1e-300).ln()
            })
            .sum()
    };
    let loo2 = |pts: &[(f64, f64)], hx: f64, hy: f64| -> f64 {
        (0..pts.len())
            .map(|i| {
                let f = pts
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, p)| gauss(pts[i].0 - p.0, hx) * gauss(pts[i].1 - p.1, hy))
                    .sum::<f64>()
                    / (pts.len() - 1) as f64;
                -f.max(1e-300).ln()
            })
            .sum()
    };
    let near = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(1.0);
    let mut sel_ok = true;
    for _ in 0..50 {
        let n = rng.random_range(2..=15);
        let pts: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let grid = BandwidthGrid::default_for(&pts).unwrap();
        let (h, score) = kde::select_bandwidth1(&pts, &grid).unwrap();
        let scores: Vec<f64> = grid.values().iter().map(|&g| loo1(&pts, g)).collect();
        let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
        let idx = grid.values().iter().position(|&g| g == h).unwrap();
        sel_ok &= near(scores[idx], min) && near(score, scores[idx]);
    }
    for _ in 0..20 {
        let n = rng.random_range(2..=10);
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.random_range(-5.0..5.0), rng.random_range(-50.0..50.0)))
            .collect();
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let (gx, gy) = (BandwidthGrid::default_for(&xs).unwrap(), BandwidthGrid::default_for(&ys).unwrap());
        let (hx, hy, score) = kde::select_bandwidth2(&pts, &gx, &gy).unwrap();
        let mut min = f64::INFINITY;
        for &a in gx.values() {
            for &b in gy.values() {
                min = min.min(loo2(&pts, a, b));
            }
        }
        sel_ok &= near(loo2(&pts, hx, hy), min) && near(score, min);
    }
    report.check("4b", sel_ok, "bandwidth selection matches exhaustive LOO scans (50 1D, 20 2D)");

    let mut worst = 0.0f64;
    for _ in 0..10 {
        let n = rng.random_range(1..=20);
        let pts: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let h = rng.random_range(0.1..1.5);
        let k = Kde1::new(pts, h).unwrap();
        let (a, b, steps) = (-3.0 - 10.0 * h, 3.0 + 10.0 * h, 20_000);
        let dx = (b - a) / steps as f64;
        let integral: f64 = (0..=steps)
            .map(|i| {
                let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
                w * k.density(a + dx * i as f64)
            })
            .sum::<f64>()
            * dx;
        worst = worst.max((integral - 1.0).abs());
    }
    for _ in 0..5 {
        let n = rng.random_range(1..=10);
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)))
            .collect();
        let h = (rng.random_range(0.2..1.0), rng.random_range(0.2..1.0));
        let k = Kde2::new(pts, h).unwrap();
        let (a, b, steps) = (-2.0 - 8.0, 2.0 + 8.0, 800);
        let dx = (b - a) / steps as f64;
        let mut integral = 0.0;
        for i in 0..=steps {
            let wi = if i == 0 || i == steps { 0.5 } else { 1.0 };
            for j in 0..=steps {
                let wj = if j == 0 || j == steps { 0.5 } else { 1.0 };
                integral += wi * wj * k.density(a + dx * i as f64, a + dx * j as f64);
            }
        }
        worst = worst.max((integral * dx * dx - 1.0).abs());
    }
    report.check(
        "4c",
        worst <= 1e-3,
        format!("KDE integrals within 1e-3 of 1 by trapezoid quadrature (worst {worst:.2e})"),
    );

    let mut perm_ok = true;
    for _ in 0..50 {
        let rows = rng.random_range(1..=12);
        let ds = random_small_dataset(&mut rng, rows);
        let mut idx: Vec<usize> = (0..rows).collect();
        idx.shuffle(&mut rng);
        let shuffled = ds.select(&idx);
        let a = NbrModel::train(&ds, &cfg).unwrap();
        let b = NbrModel::train(&shuffled, &cfg).unwrap();
        for _ in 0..5 {
            let q = random_query(&mut rng, &ds);
            perm_ok &= a.predict(&q, &cfg).unwrap().to_bits() == b.predict(&q, &cfg).unwrap().to_bits();
        }
    }
    report.check("4d", perm_ok, "predictions bit-identical under training-row permutation (50 models)");
}

fn criterion_5(report: &mut Report) {
    let mut rng = seeded_rng(5);
    let mut roundtrip = true;
    let mut in_range = true;
    for _ in 0..200 {
        let rows = rng.random_range(1..=12);
        let ds = random_small_dataset(&mut rng, rows);
        let codec = SurrogateCodec::new(ds.schema().to_vec(), rows).unwrap();
        let x = codec.encode(&ds).unwrap();
        roundtrip &= codec.decode(&x).unwrap() == ds;
        let noise: Vec<f64> = (0..codec.dimension()).map(|_| rng.random_range(-100.0..100.0)).collect();
        let decoded = codec.decode(&noise).unwrap();
        for row in decoded.rows() {
            for (v, a) in row.iter().zip(ds.schema()) {
                if a.is_categorical() {
                    in_range &= matches!(v, Value::Category(c) if *c < a.category_count());
                }
            }
        }
    }
    report.check("5a", roundtrip, "decode(encode(d)) == d on 200 random datasets");
    report.check("5b", in_range, "decoded categories always in range on 200 random vectors");

    let mut perm_ok = true;
    for _ in 0..20 {
        let train = random_small_dataset(&mut rng, 15);
        let n = rng.random_range(2..=6);
        let codec = SurrogateCodec::new(train.schema().to_vec(), n).unwrap();
        let d = train.n_attributes();
        let bounds = codec.init_bounds(&train).unwrap();
        let x: Vec<f64> = bounds.iter().map(|&(a, b)| if a < b { rng.random_range(a..=b) } else { a }).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let permuted: Vec<f64> = order.iter().flat_map(|&r| x[r * d..(r + 1) * d].to_vec()).collect();
        let f = SurrogateFitness::new(codec, &train, ModeSearchConfig::default()).unwrap();
        perm_ok &= f.evaluate(&x).to_bits() == f.evaluate(&permuted).to_bits();
    }
    report.check("5c", perm_ok, "fitness bit-identical under row-block permutation (20 cases)");
}

fn criterion_6(report: &mut Report) {
    let mut worst: f64 = 0.0;
    for i in 0..=1000 {
        let t = -50.0 + 0.1 * i as f64;
        let f1 = 0.5 + t.atan() / PI;
        let f2 = 0.5 + t / (2.0 * (2.0 + t * t).sqrt());
        worst = worst.max((student_t_cdf(t, 1.0) - f1).abs());
        worst = worst.max((student_t_cdf(t, 2.0) - f2).abs());
    }
    let mut rng = seeded_rng(6);
    for _ in 0..200 {
        let n = rng.random_range(2..=3);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let mu = rng.random_range(-5.0..5.0);
        let r = t_test_one_sample_less(&xs, mu).unwrap();
        let expected = if n == 2 {
            0.5 + r.t.atan() / PI
        } else {
            0.5 + r.t / (2.0 * (2.0 + r.t * r.t).sqrt())
        };
        worst = worst.max((r.p_value - expected).abs());
    }
    report.check(
        "6a",
        worst <= 1e-10,
        format!("t CDF and one-sided p-values match df=1, df=2 closed forms (worst {worst:.2e})"),
    );
    let r = t_test_one_sample_less(&[1.0, 2.0, 3.0, 6.0], 3.0).unwrap();
    report.check(
        "6b",
        (r.p_value - 0.5).abs() <= 1e-12,
        format!("mean equal to baseline gives p = {}", r.p_value),
    );
}

fn main() -> ExitCode {
    let strict = std::env::var("CSONBR_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let mut report = Report::default();
    criterion_6(&mut report);
    criterion_5(&mut report);
    criterion_3(&mut report);
    criterion_4(&mut report);
    criterion_2(&mut report);
    criterion_1_and_7(&mut report);

    let failed: Vec<&Outcome> = report.outcomes.iter().filter(|o| !o.pass).collect();
    let counted: Vec<&&Outcome> = failed.iter().filter(|o| strict || !o.missing_data).collect();
    println!(
        "acceptance: {} passed, {} failed ({} for missing input data{})",
        report.outcomes.len() - failed.len(),
        failed.len(),
        failed.iter().filter(|o| o.missing_data).count(),
        if strict { ", strict" } else { ", not counted" }
    );
    if counted.is_empty() {
        ExitCode::SUCCESS
    } else {
        for o in counted {
            eprintln!("failed {}: {}", o.id, o.detail);
        }
        ExitCode::FAILURE
    }
}
