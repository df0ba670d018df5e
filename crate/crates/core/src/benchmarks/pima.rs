//! Pima Indian diabetes data and the two logistic regression models.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Model;
use crate::stats::log_sigmoid;

pub const PIMA_ROWS: usize = 532;
pub const PIMA_COLUMNS: [&str; 7] = ["NP", "PGC", "BP", "TST", "BMI", "DP", "AGE"];
pub const PIMA_PRIOR_PRECISION: f64 = 0.01;
/// Reversible-jump benchmark `ln BF₁₂` used as ground truth.
pub const PUBLISHED_LOG_BF12: f64 = 2.6362;

const BUNDLED: &str = include_str!("../../data/pima.csv");
const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq)]
pub struct PimaDataset {
    predictors: Vec<[f64; 7]>,
    labels: Vec<u8>,
}

impl PimaDataset {
    /// The 532-record file shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_reader(BUNDLED.as_bytes()).expect("bundled Pima data is valid")
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().quoting(false).from_reader(reader);
        let header = r.headers()?.clone();
        let expected: Vec<&str> = PIMA_COLUMNS.iter().copied().chain(["label"]).collect();
        if header.iter().map(str::trim).ne(expected.iter().copied()) {
            return Err(Error::Dataset(format!(
                "header must be {}, got {}",
                expected.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut predictors = Vec::new();
        let mut labels = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| Error::Dataset(format!("row {}: {e}", i + 1)))?;
            if rec.len() != 8 {
                return Err(Error::Dataset(format!("row {}: expected 8 fields, got {}", i + 1, rec.len())));
            }
            let mut row = [0.0; 7];
            for (k, v) in row.iter_mut().enumerate() {
                *v = rec[k]
                    .trim()
                    .parse()
                    .ok()
                    .filter(|x: &f64| x.is_finite())
                    .ok_or_else(|| Error::Dataset(format!("row {}: bad {} value {:?}", i + 1, PIMA_COLUMNS[k], &rec[k])))?;
            }
            let label = match rec[7].trim() {
                "0" => 0,
                "1" => 1,
                other => return Err(Error::Dataset(format!("row {}: label {other:?} not in {{0, 1}}", i + 1))),
            };
            predictors.push(row);
            labels.push(label);
        }
        if predictors.len() != PIMA_ROWS {
            return Err(Error::Dataset(format!("expected {PIMA_ROWS} rows, got {}", predictors.len())));
        }
        Ok(Self { predictors, labels })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = PIMA_COLUMNS.iter().position(|c| *c == name)?;
        Some(self.predictors.iter().map(|r| r[k]).collect())
    }
}

pub fn load_pima_data(path: &Path) -> Result<PimaDataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    PimaDataset::from_reader(file)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PimaModel {
    /// Bias, NP, PGC, BMI, DP.
    M1,
    /// M1 plus AGE.
    M2,
}

impl PimaModel {
    pub fn covariates(self) -> &'static [&'static str] {
        match self {
            PimaModel::M1 => &["NP", "PGC", "BMI", "DP"],
            PimaModel::M2 => &["NP", "PGC", "BMI", "DP", "AGE"],
        }
    }
}

/// Row-major design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl DesignMatrix {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }
}

/// Bias column of ones followed by the model's covariates, each standardized
/// to zero mean and unit sample standard deviation.
pub fn pima_design_matrix(data: &PimaDataset, model: PimaModel) -> DesignMatrix {
    let cols: Vec<Vec<f64>> = model
        .covariates()
        .iter()
        .map(|name| {
            let c = data.column(name).expect("known column");
            let (mean, var) = crate::stats::mean_var(&c);
            let sd = var.sqrt();
            c.into_iter().map(|v| (v - mean) / sd).collect()
        })
        .collect();
    let k = cols.len() + 1;
    let mut values = Vec::with_capacity(data.n() * k);
    for i in 0..data.n() {
        values.push(1.0);
        values.extend(cols.iter().map(|c| c[i]));
    }
    DesignMatrix {
        rows: data.n(),
        cols: k,
        values,
    }
}

/// `Σ_i ln σ((2y_i − 1) θᵀx_i)`.
pub fn logistic_log_likelihood(theta: &[f64], x: &DesignMatrix, labels: &[u8]) -> Result<f64> {
    if theta.len() != x.cols {
        return Err(Error::DimensionMismatch { expected: x.cols, found: theta.len() });
    }
    if labels.len() != x.rows {
        return Err(Error::Misaligned { what: "design rows and labels", left: x.rows, right: labels.len() });
    }
    Ok(logistic_unchecked(theta, x, labels))
}

fn logistic_unchecked(theta: &[f64], x: &DesignMatrix, labels: &[u8]) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let eta: f64 = x.row(i).iter().zip(theta).map(|(a, b)| a * b).sum();
            let sign = if y == 1 { 1.0 } else { -1.0 };
            log_sigmoid(sign * eta)
        })
        .sum()
}

/// Independent `N(0, 1/precision)` on every coordinate.
pub fn gaussian_log_prior(theta: &[f64], precision: f64) -> f64 {
    let k = theta.len() as f64;
    0.5 * k * (precision.ln() - LN_2PI) - 0.5 * precision * theta.iter().map(|t| t * t).sum::<f64>()
}

#[derive(Debug, Clone)]
pub struct LogisticModel {
    design: DesignMatrix,
    labels: Vec<u8>,
    prior_precision: f64,
}

impl LogisticModel {
    pub fn new(design: DesignMatrix, labels: Vec<u8>, prior_precision: f64) -> Result<Self> {
        if labels.len() != design.rows {
            return Err(Error::Misaligned { what: "design rows and labels", left: design.rows, right: labels.len() });
        }
        if !(prior_precision > 0.0) {
            return Err(Error::InvalidArgument("prior precision must be positive".into()));
        }
        Ok(Self { design, labels, prior_precision })
    }

    pub fn pima(data: &PimaDataset, model: PimaModel) -> Self {
        Self::new(pima_design_matrix(data, model), data.labels().to_vec(), PIMA_PRIOR_PRECISION)
            .expect("design built from the dataset")
    }

    pub fn design(&self) -> &DesignMatrix {
        &self.design
    }
}

impl Model for LogisticModel {
    fn dim(&self) -> usize {
        self.design.cols
    }

    fn log_likelihood(&self, theta: &[f64]) -> f64 {
        logistic_unchecked(theta, &self.design, &self.labels)
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        gaussian_log_prior(theta, self.prior_precision)
    }
}
