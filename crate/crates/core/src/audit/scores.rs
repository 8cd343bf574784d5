use crate::numkit::Rng;
use crate::{Error, PredictionMatrix, Result};

/// Fraction of positions where the default label equals the annotator's.
pub fn label_correctness(default: &[usize], predicted: &[usize]) -> Result<f64> {
    if default.len() != predicted.len() {
        return Err(Error::contract(format!(
            "label vectors differ in length: {} vs {}",
            default.len(),
            predicted.len()
        )));
    }
    if default.is_empty() {
        return Err(Error::contract("label correctness of empty label vectors"));
    }
    let hits = default.iter().zip(predicted).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / default.len() as f64)
}

/// Histogram of per-row confidences (largest posterior) with `bins` equal
/// bins over `[1/C, 1]`. A confidence of exactly 1 lands in the last bin.
pub fn confidence_histogram(preds: &PredictionMatrix, bins: usize) -> Result<Vec<usize>> {
    if bins == 0 {
        return Err(Error::contract("confidence histogram needs at least one bin"));
    }
    let lo = 1.0 / preds.class_count() as f64;
    let width = 1.0 - lo;
    let mut hist = vec![0usize; bins];
    for c in preds.confidences() {
        let b = if width <= 0.0 {
            bins - 1
        } else {
            let pos = ((c - lo) / width * bins as f64).floor();
            (pos.max(0.0) as usize).min(bins - 1)
        };
        hist[b] += 1;
    }
    Ok(hist)
}

/// Mean and population standard deviation of the per-split score.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InceptionScore {
    pub mean: f64,
    pub std: f64,
}

/// `exp(E_x[KL(p(y|x) ‖ p(y))])` computed from annotator posteriors.
///
/// Rows are shuffled with `rng` and cut into `splits` near-equal chunks (the
/// first `n mod splits` chunks get one extra row); each chunk uses its own
/// marginal. Terms with `p(y|x) = 0` contribute zero.
pub fn modified_inception_score(preds: &PredictionMatrix, splits: usize, rng: &mut Rng) -> Result<InceptionScore> {
    let n = preds.len();
    if splits == 0 {
        return Err(Error::contract("inception score needs at least one split"));
    }
    if splits > n {
        return Err(Error::contract(format!("{splits} splits for {n} rows")));
    }
    let order = rng.permutation(n);
    let mut scores = Vec::with_capacity(splits);
    let mut start = 0;
    for k in 0..splits {
        let len = n / splits + usize::from(k < n % splits);
        let chunk = preds.select_rows(&order[start..start + len]);
        start += len;
        let marginal = chunk.marginal();
        let mut kl_sum = 0.0;
        for row in chunk.probs().iter_rows() {
            for (p, q) in row.iter().zip(&marginal) {
                if *p > 0.0 {
                    kl_sum += p * (p / q).ln();
                }
            }
        }
        scores.push((kl_sum / len as f64).exp());
    }
    let mean = scores.iter().sum::<f64>() / splits as f64;
    let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / splits as f64;
    Ok(InceptionScore { mean, std: var.sqrt() })
}


#[cfg(test)]
mod proptests {
    use super::*;
    use crate::numkit::Rng;
    use crate::Matrix;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn label_correctness_is_symmetric(pairs in proptest::collection::vec((0usize..4, 0usize..4), 1..100)) {
            let (a, b): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
            prop_assert_eq!(label_correctness(&a, &b).unwrap(), label_correctness(&b, &a).unwrap());
        }

        #[test]
        fn score_lies_between_one_and_c(seed in any::<u64>(), c in 1usize..7, n in 1usize..60, splits in 1usize..5, sharp in 0.1f64..8.0) {
            let mut rng = Rng::new(seed);
            let data: Vec<f64> = (0..n)
                .flat_map(|_| {
                    let mut r: Vec<f64> = (0..c).map(|_| rng.uniform().powf(sharp)).collect();
                    let s: f64 = r.iter().sum::<f64>().max(1e-300);
                    r.iter_mut().for_each(|v| *v /= s);
                    r
                })
                .collect();
            let p = match PredictionMatrix::new(Matrix::from_vec(n, c, data).unwrap()) {
                Ok(p) => p,
                Err(_) => return Ok(()),
            };
            let splits = splits.min(n);
            let s = modified_inception_score(&p, splits, &mut rng).unwrap();
            prop_assert!(s.mean >= 1.0 - 1e-12 && s.mean <= c as f64 + 1e-9, "{}", s.mean);
        }
    }
}
