//! Analytic testbed distributions and the labeled-dataset container.
//!
//! Gaussians come in spherical, diagonal and full-covariance flavours; a
//! [`MixtureSpec`] combines them with weights. Mixtures expose the exact Bayes
//! posterior, which serves as a ground-truth annotator for mode-collapse
//! measurements.

use std::f64::consts::PI;
use std::fmt;

use crate::numkit::{standard_normal, sym_eig, Matrix, Rng, SymEig};
use crate::{Error, PredictionMatrix, Result};

/// Covariance structure of a [`GaussianSpec`].
#[derive(Clone, Debug, PartialEq)]
pub enum Covariance {
    /// `σ² · I`
    Spherical(f64),
    Diagonal(Vec<f64>),
    Full(Matrix),
}

/// A multivariate Gaussian `N(mean, covariance)`.
#[derive(Clone, Debug)]
pub struct GaussianSpec {
    mean: Vec<f64>,
    covariance: Covariance,
    // eigendecomposition of a full covariance, computed once at construction
    factor: Option<SymEig>,
}

// the cached factor is a function of the covariance
impl PartialEq for GaussianSpec {
    fn eq(&self, other: &Self) -> bool {
        self.mean == other.mean && self.covariance == other.covariance
    }
}

impl GaussianSpec {
    pub fn new(mean: Vec<f64>, covariance: Covariance) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::contract("gaussian dimension must be at least 1"));
        }
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::contract("gaussian mean must be finite"));
        }
        let factor = match &covariance {
            Covariance::Spherical(s2) => {
                if !(*s2 > 0.0 && s2.is_finite()) {
                    return Err(Error::contract(format!("spherical variance must be > 0, got {s2}")));
                }
                None
            }
            Covariance::Diagonal(diag) => {
                if diag.len() != d {
                    return Err(Error::contract(format!(
                        "diagonal covariance has {} entries for dimension {d}",
                        diag.len()
                    )));
                }
                if diag.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                    return Err(Error::contract("diagonal variances must be > 0"));
                }
                None
            }
            Covariance::Full(m) => {
                if m.shape() != (d, d) {
                    return Err(Error::contract(format!(
                        "full covariance is {}x{} for dimension {d}",
                        m.rows(),
                        m.cols()
                    )));
                }
                let eig = sym_eig(m)?;
                if eig.min_eigenvalue() <= 0.0 {
                    return Err(Error::contract(format!(
                        "full covariance is not positive-definite (λ_min = {:e})",
                        eig.min_eigenvalue()
                    )));
                }
                Some(eig)
            }
        };
        Ok(GaussianSpec { mean, covariance, factor })
    }

    pub fn spherical(mean: Vec<f64>, variance: f64) -> Result<Self> {
        GaussianSpec::new(mean, Covariance::Spherical(variance))
    }

    /// Zero-mean `N(0, σ² I_d)`.
    pub fn isotropic(dim: usize, variance: f64) -> Result<Self> {
        GaussianSpec::spherical(vec![0.0; dim], variance)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &Covariance {
        &self.covariance
    }

    /// Dense covariance matrix.
    pub fn covariance_matrix(&self) -> Matrix {
        match &self.covariance {
            Covariance::Spherical(s2) => Matrix::identity(self.dim()).scale(*s2),
            Covariance::Diagonal(d) => Matrix::from_diag(d),
            Covariance::Full(m) => m.clone(),
        }
    }

    /// Log-density at `x` (length `dim`).
    pub fn log_density(&self, x: &[f64]) -> f64 {
        let d = self.dim() as f64;
        let diff: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        let (quad, log_det) = match (&self.covariance, &self.factor) {
            (Covariance::Spherical(s2), _) => (diff.iter().map(|v| v * v).sum::<f64>() / s2, d * s2.ln()),
            (Covariance::Diagonal(var), _) => {
                (diff.iter().zip(var).map(|(v, s)| v * v / s).sum(), var.iter().map(|s| s.ln()).sum())
            }
            (Covariance::Full(_), Some(eig)) => {
                let mut quad = 0.0;
                for (k, lam) in eig.eigenvalues.iter().enumerate() {
                    let proj: f64 = diff.iter().enumerate().map(|(r, v)| v * eig.eigenvectors[(r, k)]).sum();
                    quad += proj * proj / lam;
                }
                (quad, eig.eigenvalues.iter().map(|l| l.ln()).sum())
            }
            (Covariance::Full(_), None) => unreachable!("full covariance always carries its factor"),
        };
        -0.5 * (quad + log_det + d * (2.0 * PI).ln())
    }

    // x = μ + A z with A Aᵀ = Σ
    fn transform_into(&self, z: &[f64], out: &mut [f64]) {
        match (&self.covariance, &self.factor) {
            (Covariance::Spherical(s2), _) => {
                let s = s2.sqrt();
                for ((o, zi), m) in out.iter_mut().zip(z).zip(&self.mean) {
                    *o = m + s * zi;
                }
            }
            (Covariance::Diagonal(var), _) => {
                for (((o, zi), m), v) in out.iter_mut().zip(z).zip(&self.mean).zip(var) {
                    *o = m + v.sqrt() * zi;
                }
            }
            (Covariance::Full(_), Some(eig)) => {
                for (r, o) in out.iter_mut().enumerate() {
                    let mut acc = self.mean[r];
                    for (k, (lam, zk)) in eig.eigenvalues.iter().zip(z.iter()).enumerate() {
                        acc += eig.eigenvectors[(r, k)] * lam.sqrt() * zk;
                    }
                    *o = acc;
                }
            }
            (Covariance::Full(_), None) => unreachable!("full covariance always carries its factor"),
        }
    }
}

/// `n` i.i.d. rows drawn from `spec`.
pub fn sample_gaussian(spec: &GaussianSpec, n: usize, rng: &mut Rng) -> Result<Matrix> {
    if n == 0 {
        return Err(Error::contract("sample_gaussian needs n >= 1"));
    }
    let d = spec.dim();
    let z = standard_normal(rng, n, d);
    let mut out = Matrix::zeros(n, d);
    for r in 0..n {
        spec.transform_into(z.row(r), out.row_mut(r));
    }
    Ok(out)
}

/// Returns a diagonal-covariance copy of `spec` with the variance along
/// `axis` multiplied by `variance_factor`.
pub fn distorted_gaussian(spec: &GaussianSpec, axis: usize, variance_factor: f64) -> Result<GaussianSpec> {
    if !(variance_factor > 0.0 && variance_factor.is_finite()) {
        return Err(Error::contract(format!("variance factor must be > 0, got {variance_factor}")));
    }
    if axis >= spec.dim() {
        return Err(Error::contract(format!("axis {axis} out of range for dimension {}", spec.dim())));
    }
    let mut diag = match spec.covariance() {
        Covariance::Spherical(s2) => vec![*s2; spec.dim()],
        Covariance::Diagonal(d) => d.clone(),
        Covariance::Full(_) => {
            return Err(Error::contract("distorted_gaussian needs a spherical or diagonal covariance"))
        }
    };
    diag[axis] *= variance_factor;
    GaussianSpec::new(spec.mean().to_vec(), Covariance::Diagonal(diag))
}

/// Finite Gaussian mixture with non-negative weights summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureSpec {
    components: Vec<GaussianSpec>,
    weights: Vec<f64>,
}

impl MixtureSpec {
    pub fn new(components: Vec<GaussianSpec>, weights: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::contract("mixture needs at least one component"));
        }
        if weights.len() != components.len() {
            return Err(Error::contract(format!("{} weights for {} components", weights.len(), components.len())));
        }
        let d = components[0].dim();
        if components.iter().any(|c| c.dim() != d) {
            return Err(Error::contract("mixture components must share a dimension"));
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::contract("mixture weights must be non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::contract(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(MixtureSpec { components, weights })
    }

    /// Equal-weight mixture.
    pub fn uniform(components: Vec<GaussianSpec>) -> Result<Self> {
        let c = components.len().max(1);
        MixtureSpec::new(components, vec![1.0 / c as f64; c])
    }

    /// `count` spherical components with variance `sigma²`, evenly spaced on a
    /// circle of the given radius in the plane. Equal weights.
    pub fn ring(count: usize, radius: f64, sigma: f64) -> Result<Self> {
        let comps = (0..count)
            .map(|k| {
                let angle = 2.0 * PI * k as f64 / count as f64;
                GaussianSpec::spherical(vec![radius * angle.cos(), radius * angle.sin()], sigma * sigma)
            })
            .collect::<Result<Vec<_>>>()?;
        MixtureSpec::uniform(comps)
    }

    pub fn components(&self) -> &[GaussianSpec] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn class_count(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    /// The same components re-weighted uniformly over `keep`; the other
    /// components get weight zero. Used to emulate a collapsed generator.
    pub fn restricted_to(&self, keep: &[usize]) -> Result<MixtureSpec> {
        if keep.is_empty() || keep.iter().any(|&k| k >= self.class_count()) {
            return Err(Error::contract("restricted mixture needs valid component indices"));
        }
        let mut w = vec![0.0; self.class_count()];
        for &k in keep {
            w[k] = 1.0;
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
        MixtureSpec::new(self.components.clone(), w)
    }
}

/// Draws `n` labeled samples; labels are component indices.
///
/// Balanced mode draws exactly `⌊n/C⌋` samples per component, with one extra
/// for each of the first `n mod C` components. Unbalanced mode draws the
/// component of every row i.i.d. from the weights. Rows are shuffled.
pub fn sample_mixture(spec: &MixtureSpec, n: usize, rng: &mut Rng, balanced: bool) -> Result<LabeledDataset> {
    let c = spec.class_count();
    if n == 0 {
        return Err(Error::contract("sample_mixture needs n >= 1"));
    }
    let mut labels = if balanced {
        if n < c {
            return Err(Error::contract(format!("balanced sampling needs n >= C ({n} < {c})")));
        }
        balanced_labels(n, c)
    } else {
        let cumulative: Vec<f64> = spec
            .weights
            .iter()
            .scan(0.0, |acc, w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        (0..n)
            .map(|_| {
                let u = rng.uniform();
                // last positive-weight component absorbs rounding in the cumulative sum
                cumulative
                    .iter()
                    .position(|&cw| u < cw)
                    .unwrap_or_else(|| spec.weights.iter().rposition(|&w| w > 0.0).unwrap_or(c - 1))
            })
            .collect()
    };
    rng.shuffle(&mut labels);
    let d = spec.dim();
    let z = standard_normal(rng, n, d);
    let mut x = Matrix::zeros(n, d);
    for (r, &k) in labels.iter().enumerate() {
        spec.components[k].transform_into(z.row(r), x.row_mut(r));
    }
    LabeledDataset::new(x, labels, c, DataSource::TrueData)
}

/// Label multiset of a balanced draw: `⌊n/C⌋` per class, the first `n mod C`
/// classes get one extra. Returned in class order.
pub fn balanced_labels(n: usize, c: usize) -> Vec<usize> {
    balanced_counts(n, c).into_iter().enumerate().flat_map(|(k, cnt)| std::iter::repeat_n(k, cnt)).collect()
}

pub fn balanced_counts(n: usize, c: usize) -> Vec<usize> {
    (0..c).map(|k| n / c + usize::from(k < n % c)).collect()
}

/// Exact mixture posterior `p(k | x) ∝ w_k N(x; μ_k, Σ_k)`, evaluated in
/// log-space with log-sum-exp.
pub fn bayes_posterior(spec: &MixtureSpec, x: &Matrix) -> Result<PredictionMatrix> {
    if x.cols() != spec.dim() {
        return Err(Error::contract(format!(
            "posterior input has {} columns, mixture dimension is {}",
            x.cols(),
            spec.dim()
        )));
    }
    let c = spec.class_count();
    let mut out = Matrix::zeros(x.rows(), c);
    let mut logs = vec![0.0; c];
    for (r, row) in x.iter_rows().enumerate() {
        for (k, comp) in spec.components.iter().enumerate() {
            let w = spec.weights[k];
            logs[k] = if w > 0.0 { w.ln() + comp.log_density(row) } else { f64::NEG_INFINITY };
        }
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = logs.iter().map(|l| (l - max).exp()).sum();
        for (o, l) in out.row_mut(r).iter_mut().zip(&logs) {
            *o = (l - max).exp() / total;
        }
    }
    Ok(PredictionMatrix::from_trusted(out))
}

/// Where the samples of a dataset came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DataSource {
    TrueData,
    GanData,
    External,
}

impl DataSource {
    pub fn tag(self) -> &'static str {
        match self {
            DataSource::TrueData => "true-data",
            DataSource::GanData => "gan-data",
            DataSource::External => "external",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "true-data" => Some(DataSource::TrueData),
            "gan-data" => Some(DataSource::GanData),
            "external" => Some(DataSource::External),
            _ => None,
        }
    }
}

impl fmt::Display for DataSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Samples with integer class labels in `[0, class_count)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    x: Matrix,
    y: Vec<usize>,
    class_count: usize,
    source: DataSource,
}

impl LabeledDataset {
    pub fn new(x: Matrix, y: Vec<usize>, class_count: usize, source: DataSource) -> Result<Self> {
        if y.len() != x.rows() {
            return Err(Error::contract(format!("{} labels for {} samples", y.len(), x.rows())));
        }
        if class_count == 0 {
            return Err(Error::contract("class count must be at least 1"));
        }
        if let Some(bad) = y.iter().find(|&&l| l >= class_count) {
            return Err(Error::contract(format!("label {bad} out of range for {class_count} classes")));
        }
        Ok(LabeledDataset { x, y, class_count, source })
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn labels(&self) -> &[usize] {
        &self.y
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn source(&self) -> DataSource {
        self.source
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for &l in &self.y {
            counts[l] += 1;
        }
        counts
    }

    /// Rows at `indices`, same class count and source.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            x: self.x.select_rows(indices),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            class_count: self.class_count,
            source: self.source,
        }
    }

    /// Samples of one class.
    pub fn class_samples(&self, class: usize) -> Matrix {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| self.y[i] == class).collect();
        self.x.select_rows(&idx)
    }

    pub fn into_parts(self) -> (Matrix, Vec<usize>, usize, DataSource) {
        (self.x, self.y, self.class_count, self.source)
    }
}

/// Anything that can emit unlabeled samples: a trained generator, an analytic
/// distribution, or a deliberately broken sampler used as a test fixture.
pub trait SampleSource: Sync {
    fn dim(&self) -> usize;
    fn sample(&self, n: usize, rng: &mut Rng) -> Result<Matrix>;
}

impl SampleSource for GaussianSpec {
    fn dim(&self) -> usize {
        GaussianSpec::dim(self)
    }

    fn sample(&self, n: usize, rng: &mut Rng) -> Result<Matrix> {
        sample_gaussian(self, n, rng)
    }
}

impl SampleSource for MixtureSpec {
    fn dim(&self) -> usize {
        MixtureSpec::dim(self)
    }

    /// Unlabeled i.i.d. draws by weight.
    fn sample(&self, n: usize, rng: &mut Rng) -> Result<Matrix> {
        Ok(sample_mixture(self, n, rng, false)?.into_parts().0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit::moments;

    #[test]
    fn spherical_sample_moments() {
        let spec = GaussianSpec::isotropic(2, 1.0).unwrap();
        let x = sample_gaussian(&spec, 100_000, &mut Rng::new(1)).unwrap();
        let m = moments(&x).unwrap();
        assert!(m.covariance.max_abs_diff(&Matrix::identity(2)) < 0.02);
    }

    #[test]
    fn shifted_mean() {
        let spec = GaussianSpec::spherical(vec![5.0, 5.0], 1.0).unwrap();
        let x = sample_gaussian(&spec, 100_000, &mut Rng::new(2)).unwrap();
        let m = moments(&x).unwrap();
        assert!(m.mean.iter().all(|v| (v - 5.0).abs() < 0.02));
    }

    #[test]
    fn flat_spectrum_in_75_dims() {
        let spec = GaussianSpec::isotropic(75, 1.0).unwrap();
        let x = sample_gaussian(&spec, 100_000, &mut Rng::new(3)).unwrap();
        let e = sym_eig(&moments(&x).unwrap().covariance).unwrap();
        assert!(e.min_eigenvalue() / e.max_eigenvalue() >= 0.8);
    }

    #[test]
    fn full_covariance_sampling() {
        let cov = Matrix::from_rows(&[vec![2.0, 0.8], vec![0.8, 1.0]]).unwrap();
        let spec = GaussianSpec::new(vec![0.0, 1.0], Covariance::Full(cov.clone())).unwrap();
        let x = sample_gaussian(&spec, 200_000, &mut Rng::new(4)).unwrap();
        let m = moments(&x).unwrap();
        assert!(m.covariance.max_abs_diff(&cov) < 0.03);
    }

    #[test]
    fn invalid_specs() {
        assert!(GaussianSpec::isotropic(2, 0.0).is_err());
        assert!(GaussianSpec::new(vec![0.0; 2], Covariance::Diagonal(vec![1.0, -1.0])).is_err());
        let not_pd = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(GaussianSpec::new(vec![0.0; 2], Covariance::Full(not_pd)), Err(Error::Contract(_))));
        assert!(MixtureSpec::new(vec![], vec![]).is_err());
        let g = GaussianSpec::isotropic(1, 1.0).unwrap();
        assert!(MixtureSpec::new(vec![g.clone(), g], vec![0.5, 0.6]).is_err());
    }

    #[test]
    fn balanced_counts_are_exact() {
        let spec = MixtureSpec::ring(5, 10.0, 1.0).unwrap();
        let ds = sample_mixture(&spec, 1000, &mut Rng::new(5), true).unwrap();
        assert_eq!(ds.class_counts(), vec![200; 5]);
        assert_eq!(ds.source(), DataSource::TrueData);
        let ds = sample_mixture(&spec, 1003, &mut Rng::new(5), true).unwrap();
        assert_eq!(ds.class_counts(), vec![201, 201, 201, 200, 200]);
        assert!(sample_mixture(&spec, 3, &mut Rng::new(5), true).is_err());
    }

    #[test]
    fn degenerate_weights() {
        let g0 = GaussianSpec::spherical(vec![0.0], 1.0).unwrap();
        let g1 = GaussianSpec::spherical(vec![3.0], 1.0).unwrap();
        let spec = MixtureSpec::new(vec![g0, g1], vec![1.0, 0.0]).unwrap();
        let ds = sample_mixture(&spec, 100, &mut Rng::new(6), false).unwrap();
        assert!(ds.labels().iter().all(|&l| l == 0));
    }

    #[test]
    fn unbalanced_fractions() {
        let g0 = GaussianSpec::spherical(vec![0.0], 1.0).unwrap();
        let g1 = GaussianSpec::spherical(vec![3.0], 1.0).unwrap();
        let spec = MixtureSpec::uniform(vec![g0, g1]).unwrap();
        let ds = sample_mixture(&spec, 100_000, &mut Rng::new(7), false).unwrap();
        let f0 = ds.class_counts()[0] as f64 / 1e5;
        assert!((0.49..=0.51).contains(&f0));
    }

    #[test]
    fn mixture_sampling_is_reproducible() {
        let spec = MixtureSpec::ring(3, 4.0, 1.0).unwrap();
        let a = sample_mixture(&spec, 500, &mut Rng::new(8), false).unwrap();
        let b = sample_mixture(&spec, 500, &mut Rng::new(8), false).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn posterior_dominance_and_symmetry() {
        let g0 = GaussianSpec::spherical(vec![0.0, 0.0], 1.0).unwrap();
        let g1 = GaussianSpec::spherical(vec![20.0, 0.0], 1.0).unwrap();
        let spec = MixtureSpec::uniform(vec![g0, g1]).unwrap();
        let x = Matrix::from_rows(&[vec![0.0, 0.0], vec![10.0, 3.0]]).unwrap();
        let p = bayes_posterior(&spec, &x).unwrap();
        assert!((p.probs()[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((p.probs()[(1, 0)] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn posterior_matches_direct_density_ratio() {
        let g0 = GaussianSpec::spherical(vec![0.0], 1.0).unwrap();
        let g1 = GaussianSpec::spherical(vec![2.0], 1.0).unwrap();
        let spec = MixtureSpec::uniform(vec![g0, g1]).unwrap();
        let x = Matrix::from_rows(&[vec![0.5]]).unwrap();
        let p = bayes_posterior(&spec, &x).unwrap();
        // direct evaluation of the two normal densities
        let pdf = |x: f64, m: f64| (-(x - m) * (x - m) / 2.0).exp() / (2.0 * PI).sqrt();
        let expected = pdf(0.5, 0.0) / (pdf(0.5, 0.0) + pdf(0.5, 2.0));
        assert!((p.probs()[(0, 0)] - expected).abs() < 1e-12);
    }

    #[test]
    fn posterior_survives_high_dimension() {
        let a = GaussianSpec::isotropic(75, 1.0).unwrap();
        let b = GaussianSpec::spherical(vec![3.0; 75], 1.0).unwrap();
        let spec = MixtureSpec::uniform(vec![a, b]).unwrap();
        let x = Matrix::from_rows(&[vec![40.0; 75]]).unwrap();
        let p = bayes_posterior(&spec, &x).unwrap();
        assert!(p.probs().is_finite());
        assert!((p.probs()[(0, 1)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bayes_annotator_accuracy_floor() {
        let spec = MixtureSpec::ring(5, 10.0, 1.0).unwrap();
        let ds = sample_mixture(&spec, 10_000, &mut Rng::new(9), true).unwrap();
        let pred = bayes_posterior(&spec, ds.x()).unwrap().labels();
        let acc = pred.iter().zip(ds.labels()).filter(|(a, b)| a == b).count() as f64 / 1e4;
        assert!(acc >= 0.99, "{acc}");
    }

    #[test]
    fn distortion() {
        let spec = GaussianSpec::isotropic(2, 1.0).unwrap();
        let d = distorted_gaussian(&spec, 0, 0.01).unwrap();
        assert_eq!(d.covariance(), &Covariance::Diagonal(vec![0.01, 1.0]));
        let same = distorted_gaussian(&spec, 1, 1.0).unwrap();
        assert_eq!(same.covariance_matrix(), spec.covariance_matrix());
        let diag = GaussianSpec::new(vec![0.0; 2], Covariance::Diagonal(vec![1.0, 2.0])).unwrap();
        let d = distorted_gaussian(&diag, 1, 4.0).unwrap();
        assert_eq!(d.covariance(), &Covariance::Diagonal(vec![1.0, 8.0]));
        assert!(distorted_gaussian(&spec, 2, 0.5).is_err());
    }

    #[test]
    fn labeled_dataset_validation() {
        let x = Matrix::zeros(2, 1);
        assert!(LabeledDataset::new(x.clone(), vec![0], 2, DataSource::External).is_err());
        assert!(LabeledDataset::new(x, vec![0, 2], 2, DataSource::External).is_err());
    }
}
