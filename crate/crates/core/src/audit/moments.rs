use crate::numkit::{sym_eig, Matrix, SymEig};
use crate::{Error, Result};

/// Sample mean and covariance (`n − 1` denominator).
#[derive(Clone, Debug, PartialEq)]
pub struct MomentSummary {
    pub mean: Vec<f64>,
    pub covariance: Matrix,
    pub count: usize,
}

impl MomentSummary {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Moments of every sample multiplied by `c`.
    pub fn scaled(&self, c: f64) -> MomentSummary {
        MomentSummary {
            mean: self.mean.iter().map(|m| m * c).collect(),
            covariance: self.covariance.scale(c * c),
            count: self.count,
        }
    }
}

pub fn moments(samples: &Matrix) -> Result<MomentSummary> {
    let n = samples.rows();
    if n < 2 {
        return Err(Error::contract(format!("moments need at least 2 samples, got {n}")));
    }
    let d = samples.cols();
    let mut mean = vec![0.0; d];
    for row in samples.iter_rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut centered = samples.clone();
    for r in 0..n {
        for (v, m) in centered.row_mut(r).iter_mut().zip(&mean) {
            *v -= m;
        }
    }
    let mut covariance = centered.matmul_tn(&centered)?.scale(1.0 / (n - 1) as f64);
    covariance.symmetrize();
    Ok(MomentSummary { mean, covariance, count: n })
}

fn check_dims(t: &MomentSummary, g: &MomentSummary) -> Result<()> {
    if t.dim() != g.dim() {
        return Err(Error::contract(format!("moment dimensions differ: {} vs {}", t.dim(), g.dim())));
    }
    Ok(())
}

fn quad_form(m: &Matrix, v: &[f64]) -> f64 {
    let mut s = 0.0;
    for (i, vi) in v.iter().enumerate() {
        for (j, vj) in v.iter().enumerate() {
            s += vi * m[(i, j)] * vj;
        }
    }
    s
}

/// `δ_μ = (μ_T − μ_G)ᵀ Σ_T (μ_T − μ_G)`, with the true covariance itself (not
/// its inverse) as the weighting matrix.
pub fn mean_discrepancy(t: &MomentSummary, g: &MomentSummary) -> Result<f64> {
    check_dims(t, g)?;
    let diff: Vec<f64> = t.mean.iter().zip(&g.mean).map(|(a, b)| a - b).collect();
    Ok(quad_form(&t.covariance, &diff))
}

/// Squared Mahalanobis distance `(μ_T − μ_G)ᵀ Σ_T⁻¹ (μ_T − μ_G)`, the
/// conventional counterpart of [`mean_discrepancy`].
pub fn mahalanobis_discrepancy(t: &MomentSummary, g: &MomentSummary) -> Result<f64> {
    check_dims(t, g)?;
    let (eig, _) = pd_eig(&t.covariance)?;
    let diff: Vec<f64> = t.mean.iter().zip(&g.mean).map(|(a, b)| a - b).collect();
    Ok(inverse_quad(&eig, &diff))
}

const KL_RIDGE: f64 = 1e-9;

// Eigendecomposition of a covariance, with a 1e-9 ridge if it is not PD.
fn pd_eig(cov: &Matrix) -> Result<(SymEig, bool)> {
    let eig = sym_eig(cov)?;
    if eig.min_eigenvalue() > 0.0 {
        return Ok((eig, false));
    }
    let d = cov.rows();
    let mut ridged = cov.clone();
    for i in 0..d {
        ridged[(i, i)] += KL_RIDGE;
    }
    let eig = sym_eig(&ridged)?;
    if eig.min_eigenvalue() > 0.0 {
        Ok((eig, true))
    } else {
        Err(Error::numeric(format!("covariance is singular beyond repair (λ_min = {:e})", eig.min_eigenvalue())))
    }
}

// vᵀ Σ⁻¹ v through the eigenbasis of Σ
fn inverse_quad(eig: &SymEig, v: &[f64]) -> f64 {
    eig.eigenvalues
        .iter()
        .enumerate()
        .map(|(k, lam)| {
            let proj: f64 = v.iter().enumerate().map(|(r, x)| x * eig.eigenvectors[(r, k)]).sum();
            proj * proj / lam
        })
        .sum()
}

/// Closed-form KL divergence between two Gaussian moment fits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianKl {
    /// `KL(N(μ_T, Σ_T) ‖ N(μ_G, Σ_G))`
    pub kl: f64,
    /// Whether either covariance needed the `1e-9 · I` ridge.
    pub regularized: bool,
}

/// `½[tr(Σ_G⁻¹Σ_T) + (μ_G − μ_T)ᵀΣ_G⁻¹(μ_G − μ_T) − d + ln(det Σ_G / det Σ_T)]`,
/// evaluated through eigendecompositions without forming an inverse.
pub fn gaussian_fit_kl(t: &MomentSummary, g: &MomentSummary) -> Result<GaussianKl> {
    check_dims(t, g)?;
    let d = t.dim();
    let (eig_t, reg_t) = pd_eig(&t.covariance)?;
    let (eig_g, reg_g) = pd_eig(&g.covariance)?;
    let cov_t = if reg_t { eig_t.reconstruct() } else { t.covariance.clone() };

    // tr(Σ_G⁻¹ Σ_T) = Σ_k v_kᵀ Σ_T v_k / λ_k
    let mut trace = 0.0;
    for (k, lam) in eig_g.eigenvalues.iter().enumerate() {
        let v = eig_g.eigenvectors.column(k);
        trace += quad_form(&cov_t, &v) / lam;
    }
    let diff: Vec<f64> = g.mean.iter().zip(&t.mean).map(|(a, b)| a - b).collect();
    let maha = inverse_quad(&eig_g, &diff);
    let log_det_g: f64 = eig_g.eigenvalues.iter().map(|l| l.ln()).sum();
    let log_det_t: f64 = eig_t.eigenvalues.iter().map(|l| l.ln()).sum();
    let kl = 0.5 * (trace + maha - d as f64 + log_det_g - log_det_t);
    if !kl.is_finite() {
        return Err(Error::numeric("non-finite Gaussian KL"));
    }
    Ok(GaussianKl {
        // rounding can push an exact zero slightly negative
        kl: kl.max(0.0),
        regularized: reg_t || reg_g,
    })
}

/// Covariance spectra of a true and a synthetic sample.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumReport {
    pub true_eigenvalues: Vec<f64>,
    pub synthetic_eigenvalues: Vec<f64>,
    /// `λ_min / λ_max` of the true spectrum.
    pub true_decay_ratio: f64,
    pub synthetic_decay_ratio: f64,
    /// Fraction of synthetic eigenvalues below `0.5 · λ_max`.
    pub synthetic_below_half_max: f64,
    pub true_below_half_max: f64,
}

fn decay_ratio(eigs: &[f64]) -> f64 {
    let max = eigs[0];
    let min = eigs[eigs.len() - 1].max(0.0);
    if max <= 0.0 {
        return 0.0;
    }
    (min / max).clamp(0.0, 1.0)
}

fn below_half_max(eigs: &[f64]) -> f64 {
    let half = 0.5 * eigs[0];
    eigs.iter().filter(|&&l| l < half).count() as f64 / eigs.len() as f64
}

pub fn spectrum_report(true_samples: &Matrix, syn_samples: &Matrix) -> Result<SpectrumReport> {
    let d = true_samples.cols();
    if syn_samples.cols() != d {
        return Err(Error::contract(format!("sample dimensions differ: {d} vs {}", syn_samples.cols())));
    }
    if d == 0 {
        return Err(Error::contract("spectrum of zero-dimensional samples"));
    }
    for (name, m) in [("true", true_samples), ("synthetic", syn_samples)] {
        if m.rows() <= d {
            return Err(Error::contract(format!(
                "{name} sample has {} rows for dimension {d}; need at least d + 1",
                m.rows()
            )));
        }
    }
    let t = sym_eig(&moments(true_samples)?.covariance)?.eigenvalues;
    let s = sym_eig(&moments(syn_samples)?.covariance)?.eigenvalues;
    Ok(SpectrumReport {
        true_decay_ratio: decay_ratio(&t),
        synthetic_decay_ratio: decay_ratio(&s),
        synthetic_below_half_max: below_half_max(&s),
        true_below_half_max: below_half_max(&t),
        true_eigenvalues: t,
        synthetic_eigenvalues: s,
    })
}
