//! Classification-based diagnostics for covariate shift in generative models.
//!
//! The crate trains small GANs and classifiers on analytically controlled
//! distributions and measures two kinds of diversity loss in the learned
//! distribution:
//!
//! - **mode collapse**: an annotator labels generated samples and the class
//!   histogram is compared with the balanced training set;
//! - **boundary distortion**: classifiers trained on generated data are
//!   evaluated on held-out true data and compared with classifiers trained on
//!   (down-sampled) true data.
//!
//! Module map:
//!
//! - [`numkit`]: dense matrices, seeded RNG, symmetric eigendecomposition.
//! - [`distributions`]: Gaussian / mixture testbeds, Bayes posteriors, labeled datasets.
//! - [`neural`]: small MLPs, losses, optimizers, classifier training, gradient checks.
//! - [`gan`]: vanilla GAN training with checkpoints and sampling.
//! - [`audit`]: mode histograms, label correctness, modified Inception Score,
//!   spectra, moment discrepancies and the two experiment protocols.

pub mod audit;
pub mod distributions;
mod error;
pub mod gan;
pub mod neural;
pub mod numkit;
mod predictions;

pub use error::{Error, Result};
pub use numkit::{Matrix, Rng, SymEig};
pub use predictions::PredictionMatrix;
