//! PPG conditioning: min-max normalization, moving-average smoothing and
//! Chebyshev type II band-pass filtering.

mod biquad;
mod cheby2;
mod normalize;
mod pipeline;
mod smooth;

pub use biquad::{apply_filter, BiquadCascade, BiquadSection};
pub use cheby2::{design_chebyshev2, FilterDesign, FilterKind, DESIGN_MARGIN_DB};
pub use normalize::{compute_stats, denormalize, normalize, Normalized, NormalizationStats};
pub use pipeline::{preprocess_pipeline, PreprocessOptions};
pub use smooth::moving_average;
