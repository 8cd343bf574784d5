//! Measurement core: mode histograms, label agreement, annotator confidence,
//! the modified Inception Score, covariance spectra, moment discrepancies,
//! sub-/over-sampling, and the mode-collapse and boundary-distortion
//! protocols built from them.

mod annotator;
mod boundary;
mod collapse;
mod modes;
mod moments;
mod sampling;
mod scores;

pub use crate::PredictionMatrix;
pub use annotator::{Annotator, AnnotatorChoice};
pub use boundary::{
    boundary_distortion_experiment, boundary_skew, downsampling_curve, BoundaryConfig, BoundaryOutcome, BoundaryReport,
    BoundaryRow, BoundarySkew, RowSource, SyntheticSource,
};
pub use collapse::{mode_collapse_experiment, mode_report_for_source, ModeCollapseConfig, ModeCollapseOutcome};
pub use modes::{mode_histogram, ModeReport, TemporalModeSeries, DEFAULT_MISSING_THRESHOLD};
pub use moments::{
    gaussian_fit_kl, mahalanobis_discrepancy, mean_discrepancy, moments, spectrum_report, GaussianKl, MomentSummary,
    SpectrumReport,
};
pub use sampling::{downsample, stratified_split};
pub use scores::{confidence_histogram, label_correctness, modified_inception_score, InceptionScore};
