use crate::{Error, Matrix, Result};

const ROW_SUM_TOL: f64 = 1e-9;

/// Per-sample class posteriors `p(y|x)`, one row per sample.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionMatrix {
    probs: Matrix,
}

impl PredictionMatrix {
    /// Validates that every row is a probability vector (sum 1 within 1e-9).
    pub fn new(probs: Matrix) -> Result<Self> {
        if probs.cols() == 0 {
            return Err(Error::contract("prediction matrix needs at least one class"));
        }
        for (i, row) in probs.iter_rows().enumerate() {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::contract(format!("prediction row {i} has entries outside [0, 1]")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::contract(format!("prediction row {i} sums to {s}")));
            }
        }
        Ok(PredictionMatrix { probs })
    }

    pub(crate) fn from_trusted(probs: Matrix) -> Self {
        PredictionMatrix { probs }
    }

    pub fn probs(&self) -> &Matrix {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.rows() == 0
    }

    pub fn class_count(&self) -> usize {
        self.probs.cols()
    }

    /// Predicted label per row; ties go to the lowest class index.
    pub fn labels(&self) -> Vec<usize> {
        self.probs.iter_rows().map(argmax).collect()
    }

    /// Annotator confidence: the largest posterior of each row.
    pub fn confidences(&self) -> Vec<f64> {
        self.probs.iter_rows().map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect()
    }

    /// Marginal `p(y)` as the mean of the rows.
    pub fn marginal(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.class_count()];
        for row in self.probs.iter_rows() {
            for (acc, p) in m.iter_mut().zip(row) {
                *acc += p;
            }
        }
        let n = self.len().max(1) as f64;
        m.iter_mut().for_each(|v| *v /= n);
        m
    }

    pub fn select_rows(&self, idx: &[usize]) -> PredictionMatrix {
        PredictionMatrix::from_trusted(self.probs.select_rows(idx))
    }
}

/// Index of the largest entry, lowest index on ties.
pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}
