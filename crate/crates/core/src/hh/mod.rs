//! One-shot private heavy hitters over a sliding window.

mod l1;
mod l2;

pub use l1::{L1HeavyHitters, L1NoiseRule, L1Options, L1Params};
pub use l2::{L2HeavyHitters, L2NoiseRule, L2Options, L2Params};

use alloc::vec::Vec;

use crate::error::{check_positive, check_unit_open, param, Result};

/// Privacy and accuracy parameters shared by the algorithms.
#[derive(Clone, Debug, PartialEq)]
pub struct PrivacyConfig {
    pub alpha: f64,
    pub epsilon: f64,
    pub delta: f64,
    /// Window length the run is tuned for.
    pub window: u64,
    /// Items are `1..=universe`.
    pub universe: u32,
    /// Upper bound on the stream length.
    pub stream_bound: u64,
    /// Scale on the accuracy constants (1 is nominal).
    pub kappa: f64,
    /// Scale on the exact-window fallback cutoff; 0 disables it.
    pub kappa_w: f64,
    /// Whether Laplace noise is added to released values.
    pub noise: bool,
    pub seed: u64,
}

impl Default for PrivacyConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            epsilon: 1.0,
            delta: 1e-6,
            window: 1000,
            universe: 1000,
            stream_bound: 10_000,
            kappa: 1.0,
            kappa_w: 1.0,
            noise: true,
            seed: 0,
        }
    }
}

impl PrivacyConfig {
    pub fn validate(&self) -> Result<()> {
        check_unit_open("alpha", self.alpha)?;
        check_positive("epsilon", self.epsilon)?;
        check_unit_open("delta", self.delta)?;
        check_positive("kappa", self.kappa)?;
        if !(self.kappa_w.is_finite() && self.kappa_w >= 0.0) {
            return Err(param("kappa_w", "must be non-negative and finite"));
        }
        if self.universe == 0 {
            return Err(param("universe", "must be at least 1"));
        }
        if self.stream_bound == 0 {
            return Err(param("stream_bound", "must be at least 1"));
        }
        if self.window == 0 {
            return Err(param("window", "must be at least 1"));
        }
        if self.window > self.stream_bound {
            return Err(param("window", "must not exceed the stream length bound"));
        }
        Ok(())
    }

    /// `log2 m`, floored at 1.
    pub fn log_m(&self) -> f64 {
        crate::math::log2_at_least_one(self.stream_bound as f64)
    }
}

/// The released output of a query.
#[derive(Clone, Debug, PartialEq)]
pub struct HeavyHitterReport {
    /// `(item, noisy frequency)`, by frequency descending then item.
    pub entries: Vec<(u32, f64)>,
    pub window: u64,
    /// Noisy norm used in the threshold (L2 only).
    pub released_norm: Option<f64>,
}

impl HeavyHitterReport {
    pub fn items(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.iter().map(|&(i, _)| i)
    }

    pub fn get(&self, item: u32) -> Option<f64> {
        self.entries.iter().find(|e| e.0 == item).map(|e| e.1)
    }
}

/// Pre-noise values a query would release.
#[derive(Clone, Debug, PartialEq)]
pub struct PreRelease {
    pub window: u64,
    /// Norm estimate (L2) or window length (L1).
    pub norm: f64,
    /// `(item, frequency estimate)` for every candidate, by item id.
    pub candidates: Vec<(u32, f64)>,
    /// Whether the values come from the exact-window buffer.
    pub exact: bool,
    /// Zero-based index of the selected timestamp, if a sketch was used.
    pub index: Option<usize>,
}

/// Summary of the space a run is using.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SpaceStats {
    pub instances: usize,
    pub counters: usize,
    pub counter_timestamps: usize,
    pub max_counter_timestamps: usize,
}

type FxMap<K, V> = hashbrown::HashMap<K, V, rustc_hash::FxBuildHasher>;

/// Counters of one timestamp, with a lower bound on their smallest gap so
/// that budget growth only triggers a scan when some gap may be violated.
#[derive(Clone, Debug, Default)]
struct CounterPool {
    counters: FxMap<u32, crate::window::WindowCounter>,
    min_gap: u64,
}

impl CounterPool {
    fn new() -> Self {
        Self { counters: FxMap::default(), min_gap: u64::MAX }
    }

    /// Records an occurrence of `item` if it is tracked, or starts tracking
    /// it when `start()` says so. Then prunes every counter against
    /// `budget`.
    fn observe(&mut self, item: u32, now: u64, budget: f64, start: impl FnOnce() -> bool) {
        let entry = match self.counters.get_mut(&item) {
            Some(c) => Some(c),
            None if start() => Some(
                self.counters
                    .entry(item)
                    .or_insert_with(|| crate::window::WindowCounter::starting_at(item, now - 1)),
            ),
            None => None,
        };
        if let Some(c) = entry {
            c.record(now, budget);
            self.min_gap = self.min_gap.min(c.gap_floor());
        }
        if self.min_gap < crate::math::ceil_u64(budget) {
            let mut lo = u64::MAX;
            for c in self.counters.values_mut() {
                c.prune(budget);
                lo = lo.min(c.gap_floor());
            }
            self.min_gap = lo;
        }
    }

    fn get(&self, item: u32) -> Option<&crate::window::WindowCounter> {
        self.counters.get(&item)
    }

    fn iter(&self) -> impl Iterator<Item = &crate::window::WindowCounter> {
        self.counters.values()
    }
}
