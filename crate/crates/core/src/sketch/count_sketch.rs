//! CountSketch for L2 heavy hitters.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::sort_report;
use crate::error::{check_item, check_unit_open, param, Result};
use crate::hash::{rng_from_seed, Hash2, Hash4};
use crate::math::{ceil_u64, median_in_place};

/// Rows are `ceil(CS_ROW_CONSTANT * log2(n / delta))`.
pub const CS_ROW_CONSTANT: f64 = 8.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CsShape {
    pub rows: usize,
    pub buckets: usize,
}

impl CsShape {
    pub fn new(rows: usize, buckets: usize) -> Result<Self> {
        if rows == 0 {
            return Err(param("rows", "must be at least 1"));
        }
        if buckets == 0 {
            return Err(param("buckets", "must be at least 1"));
        }
        Ok(Self { rows, buckets })
    }

    /// `ceil(8 log2(n / delta))` rows of `ceil(6 / alpha^2)` buckets.
    pub fn for_accuracy(alpha: f64, delta: f64, universe: u32) -> Result<Self> {
        Self::with_row_constant(alpha, delta, universe, CS_ROW_CONSTANT)
    }

    pub fn with_row_constant(alpha: f64, delta: f64, universe: u32, row_c: f64) -> Result<Self> {
        check_unit_open("alpha", alpha)?;
        check_unit_open("delta", delta)?;
        if universe == 0 {
            return Err(param("universe", "must be at least 1"));
        }
        let rows = ceil_u64(row_c * libm::log2(universe as f64 / delta)).max(1) as usize;
        let buckets = ceil_u64(6.0 / (alpha * alpha)).max(1) as usize;
        Self::new(rows, buckets)
    }

    pub fn counters(&self) -> usize {
        self.rows * self.buckets
    }
}

/// How a frequency is read off the table.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CsEstimator {
    /// Median over rows of `sign * counter`.
    #[default]
    Median,
    /// Mean over rows of `|counter|`.
    MeanAbs,
}

/// Hash functions, shape and report threshold shared by a set of tables.
#[derive(Debug)]
pub struct CsFamily {
    shape: CsShape,
    threshold: f64,
    universe: u32,
    seed: u64,
    estimator: CsEstimator,
    bucket_hashes: Vec<Hash2>,
    sign_hashes: Vec<Hash4>,
}

/// The cells and signs an item touches, one per row.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CsTouch {
    cells: Vec<(u32, i8)>,
}

impl CsTouch {
    pub fn cells(&self) -> impl Iterator<Item = (usize, i64)> + '_ {
        self.cells.iter().map(|&(c, s)| (c as usize, s as i64))
    }
}

impl CsFamily {
    pub fn new(
        shape: CsShape,
        threshold: f64,
        universe: u32,
        seed: u64,
        estimator: CsEstimator,
    ) -> Result<Self> {
        check_unit_open("threshold", threshold)?;
        if universe == 0 {
            return Err(param("universe", "must be at least 1"));
        }
        if shape.buckets > u32::MAX as usize / shape.rows {
            return Err(param("buckets", "table too large"));
        }
        let mut rng = rng_from_seed(seed);
        let mut bucket_hashes = Vec::with_capacity(shape.rows);
        let mut sign_hashes = Vec::with_capacity(shape.rows);
        for _ in 0..shape.rows {
            bucket_hashes.push(Hash2::from_rng(&mut rng));
            sign_hashes.push(Hash4::from_rng(&mut rng));
        }
        Ok(Self { shape, threshold, universe, seed, estimator, bucket_hashes, sign_hashes })
    }

    pub fn shape(&self) -> CsShape {
        self.shape
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn universe(&self) -> u32 {
        self.universe
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn estimator(&self) -> CsEstimator {
        self.estimator
    }

    pub fn bucket(&self, row: usize, item: u32) -> usize {
        self.bucket_hashes[row].bucket(item as u64, self.shape.buckets)
    }

    pub fn sign(&self, row: usize, item: u32) -> i64 {
        self.sign_hashes[row].sign(item as u64)
    }

    pub fn touch(&self, item: u32) -> Result<CsTouch> {
        let mut t = CsTouch::default();
        self.touch_into(item, &mut t)?;
        Ok(t)
    }

    pub fn touch_into(&self, item: u32, out: &mut CsTouch) -> Result<()> {
        check_item(item, self.universe)?;
        out.cells.clear();
        let b = self.shape.buckets;
        for row in 0..self.shape.rows {
            let cell = row * b + self.bucket(row, item);
            out.cells.push((cell as u32, self.sign(row, item) as i8));
        }
        Ok(())
    }
}

/// A CountSketch table.
#[derive(Clone, Debug)]
pub struct CountSketch {
    family: Arc<CsFamily>,
    table: Vec<i64>,
    updates: u64,
}

impl CountSketch {
    pub fn new(threshold: f64, delta: f64, universe: u32, seed: u64) -> Result<Self> {
        let shape = CsShape::for_accuracy(threshold, delta, universe)?;
        Self::with_shape(shape, threshold, universe, seed)
    }

    pub fn with_shape(shape: CsShape, threshold: f64, universe: u32, seed: u64) -> Result<Self> {
        let fam = CsFamily::new(shape, threshold, universe, seed, CsEstimator::Median)?;
        Ok(Self::from_family(Arc::new(fam)))
    }

    pub fn from_family(family: Arc<CsFamily>) -> Self {
        let n = family.shape.counters();
        Self { family, table: vec![0; n], updates: 0 }
    }

    pub fn family(&self) -> &Arc<CsFamily> {
        &self.family
    }

    pub fn shape(&self) -> CsShape {
        self.family.shape
    }

    pub fn update_count(&self) -> u64 {
        self.updates
    }

    /// Counter at `(row, bucket)`.
    pub fn counter(&self, row: usize, bucket: usize) -> i64 {
        self.table[row * self.family.shape.buckets + bucket]
    }

    pub fn update(&mut self, item: u32) -> Result<()> {
        let t = self.family.touch(item)?;
        self.apply(&t);
        Ok(())
    }

    pub fn apply(&mut self, touch: &CsTouch) {
        for (cell, sign) in touch.cells() {
            self.table[cell] += sign;
        }
        self.updates += 1;
    }

    pub fn estimate(&self, item: u32) -> Result<f64> {
        let t = self.family.touch(item)?;
        Ok(self.estimate_touch(&t))
    }

    pub fn estimate_touch(&self, touch: &CsTouch) -> f64 {
        match self.family.estimator {
            CsEstimator::Median => {
                let mut buf = [0f64; 64];
                let mut heap;
                let rows = touch.cells.len();
                let vals: &mut [f64] = if rows <= buf.len() {
                    &mut buf[..rows]
                } else {
                    heap = vec![0f64; rows];
                    &mut heap
                };
                for (v, (cell, sign)) in vals.iter_mut().zip(touch.cells()) {
                    *v = (sign * self.table[cell]) as f64;
                }
                median_in_place(vals)
            }
            CsEstimator::MeanAbs => {
                let total: i64 = touch.cells().map(|(c, _)| self.table[c].abs()).sum();
                total as f64 / touch.cells.len() as f64
            }
        }
    }

    /// Every item of the universe whose estimate is at least
    /// `3/4 * threshold * l2_reference`.
    pub fn heavy_hitters(&self, l2_reference: f64) -> Vec<(u32, f64)> {
        self.heavy_hitters_among(1..=self.family.universe, l2_reference)
    }

    /// Like [`heavy_hitters`](Self::heavy_hitters) restricted to `items`.
    pub fn heavy_hitters_among(
        &self,
        items: impl IntoIterator<Item = u32>,
        l2_reference: f64,
    ) -> Vec<(u32, f64)> {
        let cut = self.report_cut(l2_reference);
        let mut touch = CsTouch::default();
        let mut out = Vec::new();
        for item in items {
            if self.family.touch_into(item, &mut touch).is_err() {
                continue;
            }
            let est = self.estimate_touch(&touch);
            if est >= cut && est > 0.0 {
                out.push((item, est));
            }
        }
        sort_report(&mut out);
        out
    }

    /// The estimate an item needs to be reported.
    pub fn report_cut(&self, l2_reference: f64) -> f64 {
        0.75 * self.family.threshold * l2_reference
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_from_accuracy() {
        let s = CsShape::for_accuracy(0.5, 0.5, 4).unwrap();
        assert_eq!(s.buckets, 24);
        assert_eq!(s.rows, 24);
        assert!(CsShape::for_accuracy(0.0, 0.5, 4).is_err());
        assert!(CsShape::for_accuracy(0.5, 1.0, 4).is_err());
    }

    #[test]
    fn empty_table() {
        let cs = CountSketch::new(0.5, 0.5, 4, 0).unwrap();
        for i in 1..=4 {
            assert_eq!(cs.estimate(i).unwrap(), 0.0);
        }
        assert!(cs.heavy_hitters(0.0).is_empty());
        assert!(cs.heavy_hitters(10.0).is_empty());
    }

    #[test]
    fn single_item_is_exact() {
        for est in [CsEstimator::Median, CsEstimator::MeanAbs] {
            let fam = CsFamily::new(CsShape::new(5, 8).unwrap(), 0.5, 10, 2, est).unwrap();
            let mut cs = CountSketch::from_family(Arc::new(fam));
            for _ in 0..17 {
                cs.update(6).unwrap();
            }
            assert_eq!(cs.estimate(6).unwrap(), 17.0);
            assert_eq!(cs.heavy_hitters(17.0), vec![(6, 17.0)]);
        }
    }

    #[test]
    fn one_counter_per_row_changes() {
        let mut cs = CountSketch::with_shape(CsShape::new(6, 10).unwrap(), 0.3, 50, 4).unwrap();
        cs.update(9).unwrap();
        for row in 0..6 {
            let nonzero: Vec<i64> = (0..10).map(|b| cs.counter(row, b)).filter(|&v| v != 0).collect();
            assert_eq!(nonzero.len(), 1);
            assert_eq!(nonzero[0].abs(), 1);
        }
    }

    #[test]
    fn rejects_out_of_range() {
        let mut cs = CountSketch::new(0.5, 0.5, 4, 0).unwrap();
        assert!(cs.update(5).is_err());
        assert!(cs.estimate(0).is_err());
    }

    #[test]
    fn mean_abs_is_biased_up_by_collisions() {
        let fam = CsFamily::new(CsShape::new(3, 1).unwrap(), 0.5, 10, 0, CsEstimator::MeanAbs).unwrap();
        let mut cs = CountSketch::from_family(Arc::new(fam));
        for _ in 0..5 {
            cs.update(1).unwrap();
        }
        // One bucket per row: an item never seen reads the other item's mass.
        assert_eq!(cs.estimate(2).unwrap(), 5.0);
    }
}
