//! Diagnostics: score landscapes around a sample, one-step score shifts,
//! base-versus-PRO score distributions and confidence lower bounds.

mod bounds;
mod landscape;
mod shift;
pub mod svg;

pub use bounds::{claim1_check, entropy_bound, entropy_h, msp_bound, Claim1Report};
pub use landscape::{landscape, LandscapeGrid};
pub use shift::{
    score_distributions, shift_histogram, Binning, SampleSet, ScorePair, ShiftHistogram, ShiftSeries, SHIFT_BINS,
};
