//! Additive-error frequency counter for one item over a sliding window.

use alloc::vec::Vec;

/// Tracks one item with stored occurrence timestamps.
///
/// A timestamp is kept for an occurrence; interior timestamp `i` is dropped
/// once the counts from its neighbours differ by less than the budget `M`,
/// i.e. `c[i-1] - c[i+1] < M`. Queries answer with the count from the oldest
/// surviving timestamp inside the window, which undercounts by less than the
/// largest budget in force.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowCounter {
    item: u32,
    now: u64,
    occurrences: u64,
    // (time, ordinal of the occurrence), strictly increasing in both.
    marks: Vec<(u64, u64)>,
    // Lower bound on every interior gap c[i-1] - c[i+1].
    floor: u64,
}

// gap < budget  <=>  gap < ceil(budget) for integral gaps.
fn budget_cut(budget: f64) -> u64 {
    crate::math::ceil_u64(budget)
}

impl WindowCounter {
    /// A counter for `item` starting at time 0.
    pub fn new(item: u32) -> Self {
        Self::starting_at(item, 0)
    }

    /// A counter whose clock currently reads `now`.
    pub fn starting_at(item: u32, now: u64) -> Self {
        Self { item, now, occurrences: 0, marks: Vec::new(), floor: u64::MAX }
    }

    pub fn item(&self) -> u32 {
        self.item
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    /// Occurrences seen since the counter started.
    pub fn occurrences(&self) -> u64 {
        self.occurrences
    }

    /// Number of stored timestamps.
    pub fn len(&self) -> usize {
        self.marks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }

    /// Stored timestamps, oldest first.
    pub fn timestamps(&self) -> impl Iterator<Item = u64> + '_ {
        self.marks.iter().map(|&(t, _)| t)
    }

    /// Count from each stored timestamp to now, oldest first.
    pub fn counts(&self) -> impl Iterator<Item = u64> + '_ {
        self.marks.iter().map(|&(_, o)| self.occurrences - o + 1)
    }

    /// Smallest neighbour gap `c[i-1] - c[i+1]` over interior timestamps.
    pub fn min_gap(&self) -> Option<u64> {
        (1..self.marks.len().saturating_sub(1)).map(|i| self.gap_at(i)).min()
    }

    /// Cheap lower bound on [`min_gap`](Self::min_gap); `u64::MAX` when
    /// there are no interior timestamps.
    pub fn gap_floor(&self) -> u64 {
        self.floor
    }

    /// Advances the clock by one update of `item` and prunes against
    /// `budget`.
    pub fn update(&mut self, item: u32, budget: f64) {
        let now = self.now + 1;
        if item == self.item {
            self.record(now, budget);
        } else {
            self.now = now;
            self.prune(budget);
        }
    }

    /// Records an occurrence of the tracked item at time `now` (which must
    /// exceed the previous time) and prunes against `budget`.
    pub fn record(&mut self, now: u64, budget: f64) {
        debug_assert!(now > self.now || (self.marks.is_empty() && now >= self.now));
        let cut = budget_cut(budget);
        let clean = self.floor >= cut;
        self.now = now;
        self.occurrences += 1;
        self.marks.push((now, self.occurrences));
        let len = self.marks.len();
        if len < 3 {
            return;
        }
        if clean {
            // Only the newly interior timestamp can violate; deleting it
            // widens its neighbour's gap, so nothing else changes.
            let g = self.gap_at(len - 2);
            if g < cut {
                self.marks.remove(len - 2);
            } else {
                self.floor = self.floor.min(g);
            }
        } else {
            self.sweep(cut);
        }
    }

    /// Moves the clock forward without an occurrence.
    pub fn advance_to(&mut self, now: u64) {
        debug_assert!(now >= self.now);
        self.now = now;
    }

    /// Applies the deletion rule until no interior timestamp violates it,
    /// deleting the oldest violating timestamp first.
    pub fn prune(&mut self, budget: f64) {
        let cut = budget_cut(budget);
        if self.floor < cut {
            self.sweep(cut);
        }
    }

    fn gap_at(&self, i: usize) -> u64 {
        self.marks[i + 1].1 - self.marks[i - 1].1
    }

    // Single oldest-to-newest pass. Deleting a timestamp only widens its
    // neighbours' gaps, so one pass reaches the same fixed point as
    // repeatedly deleting the oldest violator.
    fn sweep(&mut self, cut: u64) {
        if self.marks.len() >= 3 {
            let last = self.marks.len() - 1;
            let mut kept = 1;
            for i in 1..last {
                let prev = self.marks[kept - 1].1;
                if self.marks[i + 1].1 - prev >= cut {
                    self.marks[kept] = self.marks[i];
                    kept += 1;
                }
            }
            self.marks[kept] = self.marks[last];
            self.marks.truncate(kept + 1);
        }
        self.floor = self.min_gap().unwrap_or(u64::MAX);
    }

    /// Estimated occurrences among the last `window` updates: the count
    /// from the oldest stored timestamp inside the window, or 0.
    pub fn query(&self, window: u64) -> u64 {
        self.query_at(self.now, window)
    }

    pub fn query_at(&self, now: u64, window: u64) -> u64 {
        let start = (now + 1).saturating_sub(window);
        let i = self.marks.partition_point(|&(t, _)| t < start);
        self.marks.get(i).map_or(0, |&(_, o)| self.occurrences - o + 1)
    }

    /// Upper bound on stored timestamps given the current budget:
    /// surviving interior gaps are at least `budget`, so at most
    /// `2 (c1 - 1) / budget + 2` timestamps remain.
    pub fn space_bound(&self, budget: f64) -> f64 {
        let c1 = self.counts().next().unwrap_or(0) as f64;
        if budget <= 0.0 {
            c1
        } else {
            2.0 * (c1 - 1.0).max(0.0) / budget + 2.0
        }
    }
}
