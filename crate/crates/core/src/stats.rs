//! Aggregation of repeated stochastic runs and the one-sided one-sample
//! t-test used to compare them with a single baseline error.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::mean_stddev;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function (Lanczos approximation, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection: Gamma(x) Gamma(1 - x) = pi / sin(pi x).
        (PI / (PI * x).sin()).abs().ln() - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS[0];
        for (i, c) in LANCZOS.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
    }
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=1000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularised incomplete beta function `I_x(a, b)`.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

/// CDF of Student's t distribution with `df` degrees of freedom.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return if t > 0.0 { 1.0 } else { 0.0 };
    }
    let x = df / (df + t * t);
    let tail = 0.5 * regularized_incomplete_beta(0.5 * df, 0.5, x);
    if t > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Outcome of a one-sample t-test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
    /// Zero sample variance: `p` is 0 or 1 by convention, not from the
    /// t distribution.
    pub degenerate: bool,
}

/// One-sided one-sample t-test of `H1: mean < mu0`.
///
/// A small p-value means the samples are significantly *below* `mu0`, i.e.
/// the repeated runs improve on the baseline error.
pub fn t_test_one_sample_less(samples: &[f64], mu0: f64) -> Result<TTest> {
    let k = samples.len();
    if k < 2 {
        return Err(Error::InsufficientData { needed: 2, got: k });
    }
    let (mean, sd) = mean_stddev(samples);
    let df = (k - 1) as f64;
    if sd == 0.0 {
        return Ok(TTest {
            t: if mean < mu0 {
                f64::NEG_INFINITY
            } else if mean > mu0 {
                f64::INFINITY
            } else {
                0.0
            },
            df,
            p_value: if mean < mu0 { 0.0 } else { 1.0 },
            degenerate: true,
        });
    }
    let t = (mean - mu0) / (sd / (k as f64).sqrt());
    Ok(TTest {
        t,
        df,
        p_value: student_t_cdf(t, df),
        degenerate: false,
    })
}

/// One-sided one-sample t-test of `H1: mean > mu0`.
pub fn t_test_one_sample_greater(samples: &[f64], mu0: f64) -> Result<TTest> {
    let mut r = t_test_one_sample_less(samples, mu0)?;
    r.p_value = if r.degenerate {
        if r.t > 0.0 {
            0.0
        } else {
            1.0
        }
    } else {
        student_t_cdf(-r.t, r.df)
    };
    Ok(r)
}

/// Configuration echoed into every report.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: String,
    pub algo: String,
    /// Absent for algorithms without a mean-attraction weight.
    pub phi: Option<f64>,
    pub n: usize,
    pub s: usize,
    pub t_max: usize,
    pub seed: u64,
}

/// Summary of the repeats of one experiment cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub dataset: String,
    pub algo: String,
    pub phi: Option<f64>,
    pub n: usize,
    pub s: usize,
    pub t_max: usize,
    pub seed: u64,
    pub repeats: usize,
    pub baseline_nbr_rmse: f64,
    pub lr_rmse: Option<f64>,
    pub samples: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single sample.
    pub std: f64,
    pub best: f64,
    /// `P(mean >= baseline)` under the one-sided test of `H1: mean < baseline`;
    /// absent for fewer than two samples.
    pub p_value: Option<f64>,
    pub p_degenerate: bool,
    pub wall_seconds: Vec<f64>,
}

pub fn aggregate(samples: &[f64], baseline: f64, config: &RunConfig) -> Result<RunReport> {
    if samples.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let (mean, std) = mean_stddev(samples);
    let best = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let test = (samples.len() >= 2)
        .then(|| t_test_one_sample_less(samples, baseline))
        .transpose()?;
    Ok(RunReport {
        dataset: config.dataset.clone(),
        algo: config.algo.clone(),
        phi: config.phi,
        n: config.n,
        s: config.s,
        t_max: config.t_max,
        seed: config.seed,
        repeats: samples.len(),
        baseline_nbr_rmse: baseline,
        lr_rmse: None,
        samples: samples.to_vec(),
        mean,
        std,
        best,
        p_value: test.map(|t| t.p_value),
        p_degenerate: test.is_some_and(|t| t.degenerate),
        wall_seconds: Vec::new(),
    })
}
