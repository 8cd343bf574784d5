use super::MlpParams;
use crate::Result;

/// Gradients whose magnitudes are both below this floor are compared in
/// absolute rather than relative terms.
const REL_FLOOR: f64 = 1e-5;

/// Result of comparing analytic gradients against central differences.
#[derive(Clone, Debug)]
pub struct GradCheck {
    pub max_relative_error: f64,
    /// Flat parameter index of the worst entry.
    pub worst_index: usize,
    pub checked: usize,
}

/// Compares `analytic` with central finite differences of `loss` around
/// `params`, perturbing every parameter by `±h`.
///
/// Relative error of an entry is `|a − n| / max(|a|, |n|, 1e-5)`.
pub fn finite_difference_check(
    params: &MlpParams,
    analytic: &MlpParams,
    h: f64,
    mut loss: impl FnMut(&MlpParams) -> Result<f64>,
) -> Result<GradCheck> {
    assert!(params.same_shape(analytic), "gradient shape mismatch");
    let mut probe = params.clone();
    let mut worst = GradCheck { max_relative_error: 0.0, worst_index: 0, checked: params.num_params() };
    for i in 0..params.num_params() {
        let orig = params.param(i);
        probe.set_param(i, orig + h);
        let up = loss(&probe)?;
        probe.set_param(i, orig - h);
        let down = loss(&probe)?;
        probe.set_param(i, orig);
        let numeric = (up - down) / (2.0 * h);
        let a = analytic.param(i);
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_FLOOR);
        if rel > worst.max_relative_error {
            worst.max_relative_error = rel;
            worst.worst_index = i;
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{loss_and_grad, loss_value, Head, Loss, MlpTemplate, Target};
    use crate::numkit::{standard_normal, Rng};

    #[test]
    fn softmax_two_hidden_layers() {
        let mut rng = Rng::new(21);
        let arch = MlpTemplate::mlp(4, &[6, 5], 3, Head::Softmax);
        let params = arch.init(&mut rng).unwrap();
        let x = standard_normal(&mut rng, 10, 4);
        let y: Vec<usize> = (0..10).map(|i| i % 3).collect();
        let (_, g) = loss_and_grad(&params, &x, Target::Labels(&y), Loss::SoftmaxCrossEntropy, 0.1).unwrap();
        let check = finite_difference_check(&params, &g, 1e-5, |p| {
            loss_value(p, &x, Target::Labels(&y), Loss::SoftmaxCrossEntropy, 0.1)
        })
        .unwrap();
        assert!(check.max_relative_error < 1e-4, "{check:?}");
    }

    #[test]
    fn detects_a_wrong_gradient() {
        let mut rng = Rng::new(22);
        let params = MlpTemplate::logistic(3).init(&mut rng).unwrap();
        let x = standard_normal(&mut rng, 8, 3);
        let y = [0, 1, 0, 1, 1, 0, 0, 1];
        let (_, mut g) = loss_and_grad(&params, &x, Target::Labels(&y), Loss::BinaryCrossEntropy, 0.0).unwrap();
        g.set_param(1, g.param(1) + 0.5);
        let check = finite_difference_check(&params, &g, 1e-5, |p| {
            loss_value(p, &x, Target::Labels(&y), Loss::BinaryCrossEntropy, 0.0)
        })
        .unwrap();
        assert!(check.max_relative_error > 0.1);
        assert_eq!(check.worst_index, 1);
    }
}
