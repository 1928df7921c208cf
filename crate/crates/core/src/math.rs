//! Small numeric helpers shared across modules.

/// `log2(x)` floored at 1 so that it can be used as a divisor.
pub(crate) fn log2_at_least_one(x: f64) -> f64 {
    let l = libm::log2(x);
    if l.is_finite() && l > 1.0 {
        l
    } else {
        1.0
    }
}

/// `ceil(x)` saturated to `0..=u64::MAX`; NaN maps to 0.
pub(crate) fn ceil_u64(x: f64) -> u64 {
    if x.is_nan() || x <= 0.0 {
        0
    } else if x >= u64::MAX as f64 {
        u64::MAX
    } else {
        let t = x as u64;
        if (t as f64) < x {
            t + 1
        } else {
            t
        }
    }
}

/// Median of a non-empty slice; for even lengths the mean of the two middle
/// values. Reorders the slice.
pub(crate) fn median_in_place(v: &mut [f64]) -> f64 {
    debug_assert!(!v.is_empty());
    let n = v.len();
    let mid = n / 2;
    let (_, hi, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    let hi = *hi;
    if n % 2 == 1 {
        hi
    } else {
        let lo = v[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    }
}
