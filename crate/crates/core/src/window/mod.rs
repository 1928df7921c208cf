//! Sliding-window machinery: smooth histograms and window counters.

mod counter;
mod histogram;

pub use counter::WindowCounter;
pub use histogram::{GapRule, InstanceFactory, LengthRatioRule, PruneRule, SmoothHistogram, SuffixEstimator};
