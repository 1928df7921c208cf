//! The AMS estimator for the second frequency moment.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_item, check_unit_open, param, Result};
use crate::hash::SignBits;
use crate::math::ceil_u64;

/// Counters per repetition are `ceil(AMS_MEAN_CONSTANT / alpha^2)`.
pub const AMS_MEAN_CONSTANT: f64 = 6.0;
/// Repetitions are `ceil(AMS_MEDIAN_CONSTANT * ln(1 / delta))`.
pub const AMS_MEDIAN_CONSTANT: f64 = 48.0;

/// Number of counters averaged per repetition (`rows`) and number of
/// repetitions whose median is taken (`reps`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AmsShape {
    pub rows: usize,
    pub reps: usize,
}

impl AmsShape {
    pub fn new(rows: usize, reps: usize) -> Result<Self> {
        if rows == 0 {
            return Err(param("rows", "must be at least 1"));
        }
        if reps == 0 {
            return Err(param("reps", "must be at least 1"));
        }
        Ok(Self { rows, reps })
    }

    /// Shape for a `(1 ± alpha)` estimate of F2 with failure probability
    /// `delta`.
    pub fn for_accuracy(alpha: f64, delta: f64) -> Result<Self> {
        Self::with_constants(alpha, delta, AMS_MEAN_CONSTANT, AMS_MEDIAN_CONSTANT)
    }

    pub fn with_constants(alpha: f64, delta: f64, mean_c: f64, median_c: f64) -> Result<Self> {
        check_unit_open("alpha", alpha)?;
        check_unit_open("delta", delta)?;
        let rows = ceil_u64(mean_c / (alpha * alpha)).max(1) as usize;
        let reps = ceil_u64(median_c * libm::log(1.0 / delta)).max(1) as usize;
        Self::new(rows, reps)
    }

    pub fn counters(&self) -> usize {
        self.rows * self.reps
    }
}

/// The shared randomness of a set of AMS sketches: shape, universe and one
/// sign function per counter. Sketches built from the same family can share
/// the per-item sign computation.
#[derive(Debug)]
pub struct AmsFamily {
    shape: AmsShape,
    universe: u32,
    seed: u64,
    signs: SignBits,
}

impl AmsFamily {
    pub fn new(shape: AmsShape, universe: u32, seed: u64) -> Result<Self> {
        if universe == 0 {
            return Err(param("universe", "must be at least 1"));
        }
        let signs = SignBits::new(shape.counters(), seed);
        Ok(Self { shape, universe, seed, signs })
    }

    pub fn shape(&self) -> AmsShape {
        self.shape
    }

    pub fn universe(&self) -> u32 {
        self.universe
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Fills `out` with the sign mask of `item` under every counter (see
    /// [`SignBits::fill`](crate::hash::SignBits::fill)).
    pub fn signs_into(&self, item: u32, out: &mut Vec<i64>) -> Result<()> {
        check_item(item, self.universe)?;
        self.signs.fill(item as u64, out);
        Ok(())
    }
}

/// AMS sketch: `reps` independent means of `rows` squared signed sums; the
/// F2 estimate is their median.
#[derive(Clone, Debug)]
pub struct AmsSketch {
    family: Arc<AmsFamily>,
    sums: Vec<i64>,
    squares: Vec<i128>,
    updates: u64,
}

impl AmsSketch {
    pub fn new(alpha: f64, delta: f64, universe: u32, seed: u64) -> Result<Self> {
        Self::with_shape(AmsShape::for_accuracy(alpha, delta)?, universe, seed)
    }

    pub fn with_shape(shape: AmsShape, universe: u32, seed: u64) -> Result<Self> {
        Ok(Self::from_family(Arc::new(AmsFamily::new(shape, universe, seed)?)))
    }

    pub fn from_family(family: Arc<AmsFamily>) -> Self {
        let shape = family.shape;
        Self { family, sums: vec![0; shape.counters()], squares: vec![0; shape.reps], updates: 0 }
    }

    pub fn family(&self) -> &Arc<AmsFamily> {
        &self.family
    }

    pub fn shape(&self) -> AmsShape {
        self.family.shape
    }

    pub fn update_count(&self) -> u64 {
        self.updates
    }

    /// The signed sums, repetition-major.
    pub fn sums(&self) -> &[i64] {
        &self.sums
    }

    pub fn update(&mut self, item: u32) -> Result<()> {
        let mut signs = Vec::new();
        self.family.signs_into(item, &mut signs)?;
        self.apply_signs(&signs);
        Ok(())
    }

    /// Same as `count` calls to [`update`](Self::update).
    pub fn update_by(&mut self, item: u32, count: u64) -> Result<()> {
        let mut signs = Vec::new();
        self.family.signs_into(item, &mut signs)?;
        self.apply_signs_weighted(&signs, count);
        Ok(())
    }

    /// Applies one arrival whose sign masks were computed by the family.
    pub fn apply_signs(&mut self, signs: &[i64]) {
        debug_assert_eq!(signs.len(), self.sums.len());
        let rows = self.family.shape.rows;
        for ((sums, sg), sq) in
            self.sums.chunks_exact_mut(rows).zip(signs.chunks_exact(rows)).zip(self.squares.iter_mut())
        {
            // s * g == (s ^ mask) - mask, and g == mask | 1. Sums are
            // bounded by the update count; wrapping ops keep the loop
            // vectorised when overflow checks are on.
            let mut dot = 0i64;
            for (s, &mask) in sums.iter_mut().zip(sg) {
                dot = dot.wrapping_add((*s ^ mask).wrapping_sub(mask));
                *s = s.wrapping_add(mask | 1);
            }
            *sq += 2 * dot as i128 + rows as i128;
        }
        self.updates += 1;
    }

    pub fn apply_signs_weighted(&mut self, signs: &[i64], count: u64) {
        debug_assert_eq!(signs.len(), self.sums.len());
        if count == 0 {
            return;
        }
        let rows = self.family.shape.rows;
        let w = count as i64;
        for ((sums, sg), sq) in
            self.sums.chunks_exact_mut(rows).zip(signs.chunks_exact(rows)).zip(self.squares.iter_mut())
        {
            let mut dot = 0i64;
            for (s, &mask) in sums.iter_mut().zip(sg) {
                dot += (*s ^ mask) - mask;
                *s += (w ^ mask) - mask;
            }
            *sq += 2 * w as i128 * dot as i128 + rows as i128 * (w as i128) * (w as i128);
        }
        self.updates += count;
    }

    /// Median over repetitions of the mean squared sum.
    pub fn estimate_f2(&self) -> f64 {
        let rows = self.family.shape.rows as f64;
        let n = self.squares.len();
        let mut buf = [0i128; 32];
        let mut heap;
        let vals: &[i128] = if n <= buf.len() {
            // Insertion sort; `sort_unstable` is slow on a handful of i128s.
            for (i, &v) in self.squares.iter().enumerate() {
                let mut j = i;
                while j > 0 && buf[j - 1] > v {
                    buf[j] = buf[j - 1];
                    j -= 1;
                }
                buf[j] = v;
            }
            &buf[..n]
        } else {
            heap = self.squares.clone();
            heap.sort_unstable();
            &heap
        };
        let med =
            if n % 2 == 1 { vals[n / 2] as f64 } else { 0.5 * (vals[n / 2 - 1] as f64 + vals[n / 2] as f64) };
        med / rows
    }

    pub fn estimate_l2(&self) -> f64 {
        libm::sqrt(self.estimate_f2())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_from_accuracy() {
        assert_eq!(AmsShape::for_accuracy(0.1, 0.01).unwrap(), AmsShape { rows: 600, reps: 222 });
        assert!(AmsShape::for_accuracy(1.0, 0.1).is_err());
        assert!(AmsShape::for_accuracy(0.5, 0.0).is_err());
        assert!(AmsSketch::new(0.5, 0.5, 0, 0).is_err());
    }

    #[test]
    fn empty_estimate_is_zero() {
        let s = AmsSketch::new(0.5, 0.5, 10, 0).unwrap();
        assert_eq!(s.estimate_f2(), 0.0);
        assert_eq!(s.estimate_l2(), 0.0);
    }

    #[test]
    fn single_item_is_exact() {
        let mut s = AmsSketch::with_shape(AmsShape::new(7, 4).unwrap(), 10, 3).unwrap();
        for _ in 0..13 {
            s.update(4).unwrap();
        }
        assert!(s.sums().iter().all(|x| x.abs() == 13));
        assert_eq!(s.estimate_f2(), 169.0);
        assert_eq!(s.estimate_l2(), 13.0);
    }

    #[test]
    fn weighted_update_matches_repeats() {
        let shape = AmsShape::new(9, 3).unwrap();
        let mut a = AmsSketch::with_shape(shape, 20, 1).unwrap();
        let mut b = AmsSketch::with_shape(shape, 20, 1).unwrap();
        for (item, c) in [(3u32, 5u64), (7, 2), (3, 1), (19, 4)] {
            for _ in 0..c {
                a.update(item).unwrap();
            }
            b.update_by(item, c).unwrap();
        }
        assert_eq!(a.sums(), b.sums());
        assert_eq!(a.squares, b.squares);
        assert_eq!(a.update_count(), b.update_count());
    }

    #[test]
    fn rejects_out_of_range() {
        let mut s = AmsSketch::new(0.5, 0.5, 10, 0).unwrap();
        assert!(s.update(0).is_err());
        assert!(s.update(11).is_err());
        assert_eq!(s.update_count(), 0);
    }

    #[test]
    fn squares_track_sums() {
        let mut s = AmsSketch::with_shape(AmsShape::new(5, 3).unwrap(), 50, 9).unwrap();
        for i in 0..200u32 {
            s.update(i % 50 + 1).unwrap();
        }
        for (rep, chunk) in s.sums.chunks(5).enumerate() {
            let sq: i128 = chunk.iter().map(|&x| (x as i128) * (x as i128)).sum();
            assert_eq!(sq, s.squares[rep]);
        }
    }
}
