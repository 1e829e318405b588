//! Ridge-stabilised ordinary least squares baseline.
//!
//! Categorical attributes are one-hot encoded with the last category
//! dropped. The intercept is not penalised: features and target are
//! centred before solving `(X'X + ridge I) b = X'y`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::tabular::{AttributeKind, Dataset, Value};

pub const DEFAULT_RIDGE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
enum Encoding {
    Numeric { column: usize, slot: usize },
    /// Indicator slots for categories `0..count`; the last category has none.
    OneHot { column: usize, first_slot: usize, count: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    coefficients: Vec<f64>,
    intercept: f64,
    encoding: Vec<Encoding>,
    n_columns: usize,
}

fn encoding_for(ds: &Dataset) -> (Vec<Encoding>, usize) {
    let mut slots = 0;
    let mut enc = Vec::new();
    for c in ds.feature_indices() {
        let attr = &ds.schema()[c];
        match attr.kind {
            AttributeKind::Numeric => {
                enc.push(Encoding::Numeric { column: c, slot: slots });
                slots += 1;
            }
            AttributeKind::Categorical => {
                let count = attr.category_count().saturating_sub(1);
                enc.push(Encoding::OneHot {
                    column: c,
                    first_slot: slots,
                    count,
                });
                slots += count;
            }
        }
    }
    (enc, slots)
}

fn encode(encoding: &[Encoding], width: usize, row: &[Value], out: &mut [f64]) {
    debug_assert_eq!(out.len(), width);
    out.iter_mut().for_each(|v| *v = 0.0);
    for e in encoding {
        match *e {
            Encoding::Numeric { column, slot } => {
                out[slot] = row[column].as_f64().unwrap_or(0.0);
            }
            Encoding::OneHot {
                column,
                first_slot,
                count,
            } => {
                if let Value::Category(v) = row[column] {
                    if v < count {
                        out[first_slot + v] = 1.0;
                    }
                }
            }
        }
    }
}

/// Minimises `sum (y - b0 - x'b)^2 + ridge * |b|^2`.
pub fn fit_ols(ds: &Dataset, ridge: f64) -> Result<LinearModel> {
    if !(ridge >= 0.0) {
        return Err(Error::Config(format!("ridge {ridge} must be non-negative")));
    }
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (encoding, width) = encoding_for(ds);
    let t = ds.target_index();
    let r = ds.n_rows();

    let mut x = DMatrix::<f64>::zeros(r, width);
    let mut y = DVector::<f64>::zeros(r);
    let mut buf = vec![0.0; width];
    for (i, row) in ds.rows().iter().enumerate() {
        encode(&encoding, width, row, &mut buf);
        for (j, v) in buf.iter().enumerate() {
            x[(i, j)] = *v;
        }
        y[i] = row[t].as_f64().ok_or_else(|| Error::Schema("missing target".into()))?;
    }

    let x_mean: Vec<f64> = (0..width).map(|j| x.column(j).mean()).collect();
    let y_mean = y.mean();
    for j in 0..width {
        let m = x_mean[j];
        x.column_mut(j).iter_mut().for_each(|v| *v -= m);
    }
    y.iter_mut().for_each(|v| *v -= y_mean);

    let beta = if width == 0 {
        DVector::zeros(0)
    } else {
        let xt = x.transpose();
        let mut gram = &xt * &x;
        for j in 0..width {
            gram[(j, j)] += ridge;
        }
        let rhs = &xt * &y;
        match gram.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => gram
                .clone()
                .lu()
                .solve(&rhs)
                .or_else(|| gram.svd(true, true).solve(&rhs, 1e-12).ok())
                .ok_or_else(|| Error::Config("normal equations are singular".into()))?,
        }
    };

    let intercept = y_mean - beta.iter().zip(&x_mean).map(|(b, m)| b * m).sum::<f64>();
    Ok(LinearModel {
        coefficients: beta.iter().copied().collect(),
        intercept,
        encoding,
        n_columns: ds.n_attributes(),
    })
}

impl LinearModel {
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn predict(&self, row: &[Value]) -> Result<f64> {
        if row.len() != self.n_columns {
            return Err(Error::DimensionMismatch {
                expected: self.n_columns,
                got: row.len(),
            });
        }
        let mut buf = vec![0.0; self.coefficients.len()];
        encode(&self.encoding, buf.len(), row, &mut buf);
        Ok(self.intercept + buf.iter().zip(&self.coefficients).map(|(x, b)| x * b).sum::<f64>())
    }
}

pub fn lr_rmse(m: &LinearModel, ds: &Dataset) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let preds = ds
        .rows()
        .iter()
        .map(|r| m.predict(r))
        .collect::<Result<Vec<f64>>>()?;
    Ok(crate::rmse_of(&preds, &ds.targets()))
}
