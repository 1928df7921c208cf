//! Insertion-only streaming sketches.

mod ams;
mod count_sketch;
mod misra_gries;

pub use ams::{AmsFamily, AmsShape, AmsSketch, AMS_MEAN_CONSTANT, AMS_MEDIAN_CONSTANT};
pub use count_sketch::{CountSketch, CsEstimator, CsFamily, CsShape, CsTouch, CS_ROW_CONSTANT};
pub use misra_gries::MisraGries;

/// Sorts `(item, estimate)` pairs by estimate descending, then item id
/// ascending.
pub fn sort_report<T: Copy + PartialOrd>(entries: &mut [(u32, T)]) {
    entries.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(core::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
}
