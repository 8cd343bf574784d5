use crate::distributions::{bayes_posterior, LabeledDataset, MixtureSpec};
use crate::neural::{predict, train_classifier, MlpParams, MlpTemplate, TrainConfig};
use crate::numkit::Matrix;
use crate::{Error, PredictionMatrix, Result};

/// A labeller for generated samples: a classifier trained on true data, or the
/// exact Bayes posterior of a known mixture.
#[derive(Clone, Debug, PartialEq)]
pub enum Annotator {
    Learned(MlpParams),
    Bayes(MixtureSpec),
}

impl Annotator {
    pub fn annotate(&self, x: &Matrix) -> Result<PredictionMatrix> {
        if x.cols() != self.dim() {
            return Err(Error::contract(format!("annotator expects dimension {}, got {}", self.dim(), x.cols())));
        }
        match self {
            Annotator::Learned(params) => predict(params, x),
            Annotator::Bayes(spec) => bayes_posterior(spec, x),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Annotator::Learned(params) => params.input_dim(),
            Annotator::Bayes(spec) => spec.dim(),
        }
    }

    pub fn class_count(&self) -> usize {
        match self {
            Annotator::Learned(params) if params.output_dim() == 1 => 2,
            Annotator::Learned(params) => params.output_dim(),
            Annotator::Bayes(spec) => spec.class_count(),
        }
    }
}

/// How an experiment obtains its annotator.
#[derive(Clone, Debug, PartialEq)]
pub enum AnnotatorChoice {
    /// Train `arch` on the experiment's labeled true data.
    Learned {
        arch: MlpTemplate,
        train: TrainConfig,
    },
    Bayes(MixtureSpec),
}

impl AnnotatorChoice {
    pub fn build(&self, data: &LabeledDataset) -> Result<Annotator> {
        let annotator = match self {
            AnnotatorChoice::Learned { arch, train } => Annotator::Learned(train_classifier(data, arch, train)?.0),
            AnnotatorChoice::Bayes(spec) => Annotator::Bayes(spec.clone()),
        };
        if annotator.dim() != data.dim() || annotator.class_count() != data.class_count() {
            return Err(Error::contract(format!(
                "annotator covers {} classes in dimension {}, data has {} in dimension {}",
                annotator.class_count(),
                annotator.dim(),
                data.class_count(),
                data.dim()
            )));
        }
        Ok(annotator)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::sample_mixture;
    use crate::neural::Head;
    use crate::numkit::Rng;

    #[test]
    fn learned_and_bayes_agree_on_separated_mixture() {
        let spec = MixtureSpec::ring(3, 8.0, 1.0).unwrap();
        let data = sample_mixture(&spec, 3000, &mut Rng::new(1), true).unwrap();
        let learned = AnnotatorChoice::Learned {
            arch: MlpTemplate::mlp(2, &[16], 3, Head::Softmax),
            train: TrainConfig::default().with_iterations(1500),
        }
        .build(&data)
        .unwrap();
        let bayes = AnnotatorChoice::Bayes(spec.clone()).build(&data).unwrap();
        let test = sample_mixture(&spec, 2000, &mut Rng::new(2), true).unwrap();
        let a = learned.annotate(test.x()).unwrap().labels();
        let b = bayes.annotate(test.x()).unwrap().labels();
        let agree = a.iter().zip(&b).filter(|(p, q)| p == q).count() as f64 / a.len() as f64;
        assert!(agree > 0.98, "{agree}");
    }

    #[test]
    fn domain_mismatch_is_rejected() {
        let spec = MixtureSpec::ring(3, 8.0, 1.0).unwrap();
        let other = MixtureSpec::ring(4, 8.0, 1.0).unwrap();
        let data = sample_mixture(&spec, 30, &mut Rng::new(1), true).unwrap();
        assert!(AnnotatorChoice::Bayes(other).build(&data).is_err());
        let bayes = Annotator::Bayes(spec);
        assert!(bayes.annotate(&Matrix::zeros(2, 3)).is_err());
    }
}
