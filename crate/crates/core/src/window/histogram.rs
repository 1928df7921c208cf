//! Smooth histogram over suffix estimators.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::error::{check_unit_open, param, Error, Result};

/// An estimator run on the suffix of the stream starting at some position.
pub trait SuffixEstimator {
    /// Per-arrival data prepared once and shared by every instance.
    type Update: ?Sized;

    fn apply(&mut self, update: &Self::Update, now: u64);

    /// Current estimate of the monotone function on the suffix.
    fn estimate(&self) -> f64;
}

/// Builds instances and prepares the shared per-arrival data.
pub trait InstanceFactory {
    type Instance: SuffixEstimator;

    /// Prepares the arrival of `item` at time `now`. Errors leave the
    /// histogram untouched.
    fn prepare(&mut self, item: u32, now: u64) -> Result<()>;

    fn prepared(&self) -> &<Self::Instance as SuffixEstimator>::Update;

    /// A fresh instance whose suffix starts at `start`.
    fn spawn(&mut self, start: u64) -> Self::Instance;
}

/// Decides whether a timestamp between two neighbours is redundant.
pub trait PruneRule {
    fn redundant(&self, older: f64, newer: f64) -> bool;
}

/// Drops timestamp `i` when `(1 - beta/2) x[i-1] <= x[i+1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapRule {
    beta: f64,
}

impl GapRule {
    pub fn new(beta: f64) -> Result<Self> {
        check_unit_open("beta", beta)?;
        Ok(Self { beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

impl PruneRule for GapRule {
    fn redundant(&self, older: f64, newer: f64) -> bool {
        (1.0 - self.beta / 2.0) * older <= newer
    }
}

/// Drops timestamp `i` when `den * x[i-1] <= num * x[i+1]`, for exact
/// integer-valued estimates such as suffix lengths.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LengthRatioRule {
    num: u64,
    den: u64,
}

impl LengthRatioRule {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num <= den {
            return Err(param("ratio", "numerator must exceed a positive denominator"));
        }
        Ok(Self { num, den })
    }
}

impl Default for LengthRatioRule {
    fn default() -> Self {
        Self { num: 101, den: 100 }
    }
}

impl PruneRule for LengthRatioRule {
    fn redundant(&self, older: f64, newer: f64) -> bool {
        self.den as f64 * older <= self.num as f64 * newer
    }
}

#[derive(Clone, Debug)]
struct Entry<I> {
    start: u64,
    estimate: f64,
    // Boxed so that deleting from the middle moves only small entries.
    instance: Box<I>,
}

/// Instances started at a pruned set of timestamps. The oldest timestamp
/// is never pruned, so any window that fits in the stream is sandwiched by
/// two consecutive timestamps.
#[derive(Clone, Debug)]
pub struct SmoothHistogram<F: InstanceFactory, R: PruneRule = GapRule> {
    rule: R,
    factory: F,
    entries: Vec<Entry<F::Instance>>,
    now: u64,
    batch: u64,
}

/// The instance selected for a window query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Selection {
    /// Zero-based index into the live timestamps.
    pub index: usize,
    pub start: u64,
    pub estimate: f64,
}

impl<F: InstanceFactory> SmoothHistogram<F, GapRule> {
    pub fn new(beta: f64, factory: F) -> Result<Self> {
        Ok(Self::with_rule(GapRule::new(beta)?, factory))
    }
}

impl<F: InstanceFactory, R: PruneRule> SmoothHistogram<F, R> {
    pub fn with_rule(rule: R, factory: F) -> Self {
        Self { rule, factory, entries: Vec::new(), now: 0, batch: 1 }
    }

    /// Start a new instance only every `batch` updates (default 1).
    pub fn with_batch(mut self, batch: u64) -> Result<Self> {
        if batch == 0 {
            return Err(param("batch", "must be at least 1"));
        }
        self.batch = batch;
        Ok(self)
    }

    pub fn rule(&self) -> &R {
        &self.rule
    }

    pub fn factory(&self) -> &F {
        &self.factory
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    /// Number of live timestamps.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn starts(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.iter().map(|e| e.start)
    }

    pub fn estimates(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.estimate)
    }

    pub fn instance(&self, index: usize) -> &F::Instance {
        &self.entries[index].instance
    }

    pub fn instances(&self) -> impl Iterator<Item = (u64, &F::Instance)> + '_ {
        self.entries.iter().map(|e| (e.start, &*e.instance))
    }

    pub fn update(&mut self, item: u32) -> Result<()> {
        let now = self.now + 1;
        self.factory.prepare(item, now)?;
        self.now = now;
        if (now - 1) % self.batch == 0 {
            let instance = self.factory.spawn(now);
            self.entries.push(Entry { start: now, estimate: 0.0, instance: Box::new(instance) });
        }
        let prepared = self.factory.prepared();
        for e in &mut self.entries {
            e.instance.apply(prepared, now);
            e.estimate = e.instance.estimate();
        }
        self.prune();
        Ok(())
    }

    // Oldest-to-newest scan; after a deletion the left neighbour is
    // re-examined since its right neighbour changed.
    fn prune(&mut self) {
        let mut i = 1;
        while i + 1 < self.entries.len() {
            if self.rule.redundant(self.entries[i - 1].estimate, self.entries[i + 1].estimate) {
                self.entries.remove(i);
                if i > 1 {
                    i -= 1;
                }
            } else {
                i += 1;
            }
        }
    }

    /// Selects `a = max { i : t_i <= now - window + 1 }`.
    pub fn query(&self, window: u64) -> Result<Selection> {
        if self.now == 0 {
            return Err(Error::Empty);
        }
        if window == 0 || window > self.now {
            return Err(Error::InvalidWindow { window, processed: self.now });
        }
        let start = self.now - window + 1;
        let count = self.entries.partition_point(|e| e.start <= start);
        // The first timestamp is 1 (or 1 mod batch) and never pruned.
        let index = count.checked_sub(1).ok_or(Error::InvalidWindow { window, processed: self.now })?;
        let e = &self.entries[index];
        Ok(Selection { index, start: e.start, estimate: e.estimate })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exact suffix length; every arrival counts one.
    struct Lengths;
    struct Len(f64);

    impl SuffixEstimator for Len {
        type Update = ();
        fn apply(&mut self, _: &(), _: u64) {
            self.0 += 1.0;
        }
        fn estimate(&self) -> f64 {
            self.0
        }
    }

    impl InstanceFactory for Lengths {
        type Instance = Len;
        fn prepare(&mut self, _: u32, _: u64) -> Result<()> {
            Ok(())
        }
        fn prepared(&self) -> &() {
            &()
        }
        fn spawn(&mut self, _: u64) -> Len {
            Len(0.0)
        }
    }

    #[test]
    fn construction_and_first_update() {
        assert!(SmoothHistogram::new(1.0, Lengths).is_err());
        assert!(SmoothHistogram::new(0.0, Lengths).is_err());
        let mut h = SmoothHistogram::new(0.5, Lengths).unwrap();
        assert_eq!(h.query(1), Err(Error::Empty));
        h.update(1).unwrap();
        assert_eq!(h.len(), 1);
        assert_eq!(h.starts().collect::<Vec<_>>(), [1]);
        assert_eq!(h.query(1).unwrap().estimate, 1.0);
        assert!(h.query(2).is_err());
        assert!(h.query(0).is_err());
    }

    #[test]
    fn ladder_on_lengths() {
        let beta = 0.2;
        let mut h = SmoothHistogram::new(beta, Lengths).unwrap();
        for t in 1..=5000u64 {
            h.update(1).unwrap();
            let xs: Vec<f64> = h.estimates().collect();
            for i in 1..xs.len().saturating_sub(1) {
                assert!((1.0 - beta / 2.0) * xs[i - 1] > xs[i + 1], "t = {t}");
            }
            assert_eq!(h.starts().next(), Some(1));
            assert_eq!(h.starts().last(), Some(t));
        }
        assert!(h.len() < 200);
    }

    #[test]
    fn query_sandwich() {
        let mut h = SmoothHistogram::new(0.3, Lengths).unwrap();
        for _ in 0..1000 {
            h.update(1).unwrap();
        }
        let starts: Vec<u64> = h.starts().collect();
        for w in 1..=1000u64 {
            let sel = h.query(w).unwrap();
            let ws = 1000 - w + 1;
            assert!(sel.start <= ws);
            if sel.index + 1 < starts.len() {
                assert!(starts[sel.index + 1] > ws);
            }
        }
        assert_eq!(h.query(1000).unwrap().index, 0);
    }

    #[test]
    fn length_ratio_rule() {
        let r = LengthRatioRule::default();
        assert!(r.redundant(202.0, 200.0));
        assert!(!r.redundant(203.0, 200.0));
        assert!(LengthRatioRule::new(1, 1).is_err());
    }

    #[test]
    fn batching_spawns_every_g() {
        let mut h = SmoothHistogram::new(0.5, Lengths).unwrap().with_batch(3).unwrap();
        for _ in 0..7 {
            h.update(1).unwrap();
        }
        assert_eq!(h.starts().collect::<Vec<_>>(), [1, 4, 7]);
        assert!(SmoothHistogram::new(0.5, Lengths).unwrap().with_batch(0).is_err());
    }
}
