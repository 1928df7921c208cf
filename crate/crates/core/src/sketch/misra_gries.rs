//! Misra-Gries frequent-items summary.

use alloc::vec::Vec;

use super::sort_report;
use crate::error::{check_item, check_unit_open, param, Result};
use crate::math::ceil_u64;

type FxMap<K, V> = hashbrown::HashMap<K, V, rustc_hash::FxBuildHasher>;

/// Deterministic summary with `k` counters. Every estimate undercounts by at
/// most `processed / (k + 1)`.
///
/// Counts are stored shifted by a global offset, so decrementing all counters
/// is one increment. Zeroed counters are swept out only when the offset
/// reaches a lower bound on the smallest stored count; every sweep follows a
/// decrement step, of which there are at most `processed / (k + 1)`, so the
/// O(k) sweeps cost O(1) per update amortized.
#[derive(Clone, Debug)]
pub struct MisraGries {
    alpha: f64,
    capacity: usize,
    universe: u32,
    raw: FxMap<u32, u64>,
    /// Lower bound on the smallest value in `raw`.
    min_raw: u64,
    offset: u64,
    processed: u64,
}

impl PartialEq for MisraGries {
    fn eq(&self, other: &Self) -> bool {
        self.capacity == other.capacity
            && self.universe == other.universe
            && self.processed == other.processed
            && self.counters() == other.counters()
    }
}

impl MisraGries {
    /// Summary with `ceil(1 / alpha)` counters.
    pub fn new(alpha: f64, universe: u32) -> Result<Self> {
        check_unit_open("alpha", alpha)?;
        let k = ceil_u64(1.0 / alpha).max(1);
        Self::build(alpha, usize::try_from(k).unwrap_or(usize::MAX), universe)
    }

    /// Summary with exactly `capacity` counters; its nominal threshold is
    /// `1 / capacity`.
    pub fn with_capacity(capacity: usize, universe: u32) -> Result<Self> {
        if capacity == 0 {
            return Err(param("capacity", "must be at least 1"));
        }
        Self::build(1.0 / capacity as f64, capacity, universe)
    }

    fn build(alpha: f64, capacity: usize, universe: u32) -> Result<Self> {
        if universe == 0 {
            return Err(param("universe", "must be at least 1"));
        }
        Ok(Self {
            alpha,
            capacity,
            universe,
            raw: FxMap::default(),
            min_raw: u64::MAX,
            offset: 0,
            processed: 0,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn processed(&self) -> u64 {
        self.processed
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    /// Processes one arrival and returns the item's new estimate.
    pub fn update(&mut self, item: u32) -> Result<u64> {
        check_item(item, self.universe)?;
        self.processed += 1;
        if let Some(r) = self.raw.get_mut(&item) {
            *r += 1;
            return Ok(*r - self.offset);
        }
        if self.raw.len() < self.capacity {
            let r = self.offset + 1;
            self.raw.insert(item, r);
            self.min_raw = self.min_raw.min(r);
            return Ok(1);
        }
        self.offset += 1;
        if self.offset >= self.min_raw {
            let offset = self.offset;
            self.raw.retain(|_, r| *r > offset);
            self.min_raw = self.raw.values().copied().min().unwrap_or(u64::MAX);
        }
        Ok(0)
    }

    /// Lower bound on the item's frequency.
    pub fn estimate(&self, item: u32) -> u64 {
        self.raw.get(&item).map_or(0, |&r| r - self.offset)
    }

    /// Stored counters sorted by item id.
    pub fn counters(&self) -> Vec<(u32, u64)> {
        let mut v: Vec<(u32, u64)> = self.raw.iter().map(|(&i, &r)| (i, r - self.offset)).collect();
        v.sort_unstable();
        v
    }

    /// Items whose estimate is at least `3/4 * alpha * l1_reference`.
    pub fn heavy_hitters(&self, l1_reference: f64) -> Vec<(u32, u64)> {
        let cut = self.report_cut(l1_reference);
        let mut out: Vec<(u32, u64)> =
            self.raw.iter().map(|(&i, &r)| (i, r - self.offset)).filter(|&(_, c)| c as f64 >= cut).collect();
        sort_report(&mut out);
        out
    }

    pub fn report_cut(&self, l1_reference: f64) -> f64 {
        0.75 * self.alpha * l1_reference
    }
}
