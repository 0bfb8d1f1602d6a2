//! Shared data model: datasets, standardization and fit results.
//!
//! The intercept is always included and never penalized; it is handled by
//! centering `y` and the covariate columns rather than by an explicit column
//! of ones. Columns are scaled by their population (1/n) standard deviation
//! so a single `lambda` applies comparably across coefficients.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Raw design matrix and response.
#[derive(Debug, Clone)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
    column_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, column_names: Option<Vec<String>>) -> Result<Self> {
        let (n, p) = x.shape();
        if n < 2 {
            return Err(Error::TooFewRows(n));
        }
        if p < 1 {
            return Err(Error::DimensionMismatch("need at least one covariate".into()));
        }
        if y.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "x has {n} rows but y has {} entries",
                y.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("x contains non-finite values".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("y contains non-finite values".into()));
        }
        if let Some(names) = &column_names {
            if names.len() != p {
                return Err(Error::DimensionMismatch(format!(
                    "{} column names for {p} columns",
                    names.len()
                )));
            }
        }
        Ok(Dataset { x, y, column_names })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn column_names(&self) -> Option<&[String]> {
        self.column_names.as_deref()
    }

    /// Label for column `j`: the header name when present, else `x<j>`.
    pub fn column_label(&self, j: usize) -> String {
        match &self.column_names {
            Some(names) => names[j].clone(),
            None => format!("x{j}"),
        }
    }
}

/// Which column of a CSV file holds the response.
#[derive(Debug, Clone)]
pub enum ColumnSelector {
    Name(String),
    Index(usize),
}

impl ColumnSelector {
    /// Parse `"3"` as an index and anything else as a name.
    pub fn parse(s: &str) -> Self {
        match s.parse::<usize>() {
            Ok(i) => ColumnSelector::Index(i),
            Err(_) => ColumnSelector::Name(s.to_string()),
        }
    }
}

/// Load a dataset from a headered CSV file, extracting `y_column` as the
/// response and keeping the remaining columns as covariates in file order.
pub fn load_dataset(path: impl AsRef<Path>, y_column: &ColumnSelector) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.to_string()).collect();
    let y_idx = match y_column {
        ColumnSelector::Name(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::YColumnNotFound(name.clone()))?,
        ColumnSelector::Index(i) => {
            if *i >= headers.len() {
                return Err(Error::YColumnNotFound(format!("index {i}")));
            }
            *i
        }
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut y = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::InvalidArgument(format!(
                "row {row_idx} has {} fields, expected {}",
                record.len(),
                headers.len()
            )));
        }
        let mut row = Vec::with_capacity(headers.len() - 1);
        for (col_idx, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| Error::NonNumericCell {
                row: row_idx,
                column: headers[col_idx].clone(),
            })?;
            if !value.is_finite() {
                return Err(Error::NonNumericCell {
                    row: row_idx,
                    column: headers[col_idx].clone(),
                });
            }
            if col_idx == y_idx {
                y.push(value);
            } else {
                row.push(value);
            }
        }
        rows.push(row);
    }
    if rows.len() < 2 {
        return Err(Error::TooFewRows(rows.len()));
    }
    let p = headers.len() - 1;
    let names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != y_idx)
        .map(|(_, h)| h.clone())
        .collect();
    let x = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
    Dataset::new(x, DVector::from_vec(y), Some(names))
}

/// Column-standardized design: each column of `xs` has mean 0 and population
/// standard deviation 1, and `y_centered = y - mean(y)`.
#[derive(Debug, Clone)]
pub struct StandardizedDesign {
    xs: DMatrix<f64>,
    y_centered: DVector<f64>,
    col_means: DVector<f64>,
    col_sds: DVector<f64>,
    y_mean: f64,
    column_names: Option<Vec<String>>,
}

/// Standardize a dataset. Constant columns are rejected by name.
pub fn standardize(d: &Dataset) -> Result<StandardizedDesign> {
    let n = d.n();
    let p = d.p();
    let nf = n as f64;
    let mut xs = d.x().clone();
    let mut col_means = DVector::zeros(p);
    let mut col_sds = DVector::zeros(p);
    for j in 0..p {
        let col = xs.column(j);
        let mean = col.sum() / nf;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nf;
        let sd = var.sqrt();
        if sd == 0.0 {
            return Err(Error::ConstantColumn(d.column_label(j)));
        }
        col_means[j] = mean;
        col_sds[j] = sd;
        for i in 0..n {
            xs[(i, j)] = (xs[(i, j)] - mean) / sd;
        }
    }
    let y_mean = d.y().sum() / nf;
    let y_centered = d.y().map(|v| v - y_mean);
    Ok(StandardizedDesign {
        xs,
        y_centered,
        col_means,
        col_sds,
        y_mean,
        column_names: d.column_names().map(|s| s.to_vec()),
    })
}

impl StandardizedDesign {
    pub fn n(&self) -> usize {
        self.xs.nrows()
    }

    pub fn p(&self) -> usize {
        self.xs.ncols()
    }

    pub fn xs(&self) -> &DMatrix<f64> {
        &self.xs
    }

    pub fn y_centered(&self) -> &DVector<f64> {
        &self.y_centered
    }

    pub fn col_means(&self) -> &DVector<f64> {
        &self.col_means
    }

    pub fn col_sds(&self) -> &DVector<f64> {
        &self.col_sds
    }

    pub fn y_mean(&self) -> f64 {
        self.y_mean
    }

    pub fn column_names(&self) -> Option<&[String]> {
        self.column_names.as_deref()
    }

    pub fn column_label(&self, j: usize) -> String {
        match &self.column_names {
            Some(names) => names[j].clone(),
            None => format!("x{j}"),
        }
    }
}

/// Map standardized-scale coefficients back to the original covariate scale:
/// `beta[j] = beta_std[j] / sd[j]`,
/// `intercept = y_mean - sum_j beta[j] * mean[j]`.
/// Predictions on the original data then equal predictions on the
/// standardized data exactly.
pub fn destandardize(beta_std: &DVector<f64>, design: &StandardizedDesign) -> Result<(DVector<f64>, f64)> {
    if beta_std.len() != design.p() {
        return Err(Error::DimensionMismatch(format!(
            "beta_std has {} entries for {} columns",
            beta_std.len(),
            design.p()
        )));
    }
    let beta = DVector::from_fn(beta_std.len(), |j, _| beta_std[j] / design.col_sds[j]);
    let intercept = design.y_mean - beta.dot(&design.col_means);
    Ok((beta, intercept))
}

/// Result of one penalized fit at a fixed `(lambda, penalty)`.
///
/// `primal_residual` and `dual_residual` are the scaled residuals actually
/// compared against the tolerances, so `converged` implies
/// `primal_residual <= tol_primal && dual_residual <= tol_dual`.
#[derive(Debug, Clone)]
pub struct FitResult {
    /// Coefficients on the original covariate scale.
    pub beta: DVector<f64>,
    pub intercept: f64,
    /// Coefficients on the standardized scale; zeros are exact.
    pub beta_std: DVector<f64>,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub converged: bool,
    /// Final penalized objective `(1/(2n))*||y - X*z||^2 + sum_j p(|z_j|)` on
    /// the standardized scale.
    pub objective: f64,
}

impl FitResult {
    /// Number of exactly nonzero standardized coefficients.
    pub fn nonzeros(&self) -> usize {
        self.beta_std.iter().filter(|v| **v != 0.0).count()
    }
}
