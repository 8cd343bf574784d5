use crate::{Error, Result};

/// Missing-mode cutoff used when none is given.
pub const DEFAULT_MISSING_THRESHOLD: f64 = 0.01;

/// Class histogram of annotated samples.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeReport {
    pub counts: Vec<usize>,
    pub fractions: Vec<f64>,
    /// `½ Σ |fᵢ − 1/C|`
    pub tv_from_uniform: f64,
    /// Classes whose fraction is below `missing_threshold`.
    pub missing_modes: Vec<usize>,
    pub missing_threshold: f64,
}

impl ModeReport {
    pub fn class_count(&self) -> usize {
        self.counts.len()
    }
}

pub fn mode_histogram(labels: &[usize], class_count: usize, missing_threshold: f64) -> Result<ModeReport> {
    if class_count == 0 {
        return Err(Error::contract("mode histogram needs at least one class"));
    }
    if labels.is_empty() {
        return Err(Error::contract("mode histogram of an empty label set"));
    }
    let mut counts = vec![0usize; class_count];
    for &l in labels {
        if l >= class_count {
            return Err(Error::contract(format!("label {l} out of range for {class_count} classes")));
        }
        counts[l] += 1;
    }
    let n = labels.len() as f64;
    let fractions: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    let uniform = 1.0 / class_count as f64;
    let tv_from_uniform = 0.5 * fractions.iter().map(|f| (f - uniform).abs()).sum::<f64>();
    let missing_modes = fractions.iter().enumerate().filter(|(_, &f)| f < missing_threshold).map(|(k, _)| k).collect();
    Ok(ModeReport { counts, fractions, tv_from_uniform, missing_modes, missing_threshold })
}

/// Class fractions at successive training steps.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TemporalModeSeries {
    steps: Vec<usize>,
    fractions: Vec<Vec<f64>>,
}

impl TemporalModeSeries {
    pub fn new() -> Self {
        TemporalModeSeries::default()
    }

    /// Appends one step; steps must increase and rows must be fraction vectors
    /// of a consistent width.
    pub fn push(&mut self, step: usize, fractions: Vec<f64>) -> Result<()> {
        if self.steps.last().is_some_and(|&s| s >= step) {
            return Err(Error::contract(format!("step {step} does not follow {:?}", self.steps.last())));
        }
        if let Some(first) = self.fractions.first() {
            if first.len() != fractions.len() {
                return Err(Error::contract("fraction vectors change width"));
            }
        }
        let sum: f64 = fractions.iter().sum();
        if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::contract(format!("step {step}: not a fraction vector (sum {sum})")));
        }
        self.steps.push(step);
        self.fractions.push(fractions);
        Ok(())
    }

    pub fn steps(&self) -> &[usize] {
        &self.steps
    }

    pub fn fractions(&self) -> &[Vec<f64>] {
        &self.fractions
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.fractions.first().map_or(0, Vec::len)
    }
}
