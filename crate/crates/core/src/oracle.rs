//! Brute-force references: exact window frequencies, norms, heavy-hitter
//! classification and neighbouring streams.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::error::{param, Error, Result};

pub type Frequencies = BTreeMap<u32, u64>;

/// Counts over positions `max(1, t - window + 1) ..= t` (1-based).
pub fn exact_window_freqs(stream: &[u32], t: usize, window: u64) -> Result<Frequencies> {
    if t == 0 || t > stream.len() {
        return Err(Error::InvalidWindow { window, processed: stream.len() as u64 });
    }
    let start = t.saturating_sub(usize::try_from(window).unwrap_or(usize::MAX));
    Ok(counts(&stream[start..t]))
}

/// Counts over a whole slice.
pub fn counts(items: &[u32]) -> Frequencies {
    let mut f = Frequencies::new();
    for &i in items {
        *f.entry(i).or_insert(0) += 1;
    }
    f
}

/// `L1` or `L2` norm of a frequency map.
pub fn exact_lp(freqs: &Frequencies, p: u32) -> f64 {
    match p {
        1 => freqs.values().sum::<u64>() as f64,
        2 => libm::sqrt(exact_f2(freqs) as f64),
        _ => {
            let s: f64 = freqs.values().map(|&c| libm::pow(c as f64, p as f64)).sum();
            libm::pow(s, 1.0 / p as f64)
        }
    }
}

/// Sum of squared frequencies.
pub fn exact_f2(freqs: &Frequencies) -> u128 {
    freqs.values().map(|&c| c as u128 * c as u128).sum()
}

/// Two-sided heavy-hitter classification. Items strictly between the two
/// thresholds belong to neither set.
#[derive(Clone, Debug, PartialEq)]
pub struct HeavyHitterClasses {
    /// Items with `f >= alpha * L_p`.
    pub must_report: BTreeSet<u32>,
    /// Items present in the map with `f <= alpha/2 * L_p`. Absent items are
    /// implicitly in this class.
    pub must_not_report: BTreeSet<u32>,
    pub norm: f64,
    pub high: f64,
    pub low: f64,
}

impl HeavyHitterClasses {
    /// Whether reporting `item` with true frequency `freq` is a violation.
    pub fn forbids(&self, freq: u64) -> bool {
        freq as f64 <= self.low
    }
}

pub fn exact_heavy_hitters(freqs: &Frequencies, alpha: f64, p: u32) -> HeavyHitterClasses {
    let norm = exact_lp(freqs, p);
    let high = alpha * norm;
    let low = alpha / 2.0 * norm;
    let mut must_report = BTreeSet::new();
    let mut must_not_report = BTreeSet::new();
    for (&i, &c) in freqs {
        let c = c as f64;
        if c >= high {
            must_report.insert(i);
        } else if c <= low {
            must_not_report.insert(i);
        }
    }
    HeavyHitterClasses { must_report, must_not_report, norm, high, low }
}

/// A stream retained in full, answering exact window questions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExactWindow {
    stream: Vec<u32>,
}

impl ExactWindow {
    pub fn new(stream: Vec<u32>) -> Self {
        Self { stream }
    }

    pub fn push(&mut self, item: u32) {
        self.stream.push(item);
    }

    pub fn len(&self) -> usize {
        self.stream.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stream.is_empty()
    }

    pub fn stream(&self) -> &[u32] {
        &self.stream
    }

    /// Frequencies of the last `window` updates at the current end.
    pub fn freqs(&self, window: u64) -> Result<Frequencies> {
        exact_window_freqs(&self.stream, self.stream.len(), window)
    }

    pub fn freqs_at(&self, t: usize, window: u64) -> Result<Frequencies> {
        exact_window_freqs(&self.stream, t, window)
    }
}

/// Pairs `(stream, stream')` differing in exactly one position. Requires a
/// universe of at least two items.
pub fn neighbor_pairs<R: RngCore>(
    stream: &[u32],
    universe: u32,
    count: usize,
    rng: &mut R,
) -> Result<Vec<(Vec<u32>, Vec<u32>)>> {
    if stream.is_empty() {
        return Err(param("stream", "must be non-empty"));
    }
    if universe < 2 {
        return Err(param("universe", "needs at least two items"));
    }
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let pos = (rng.next_u64() % stream.len() as u64) as usize;
        let old = stream[pos];
        // uniform over the universe minus the current item
        let mut new = 1 + (rng.next_u64() % (universe as u64 - 1)) as u32;
        if new >= old {
            new += 1;
        }
        let mut other = stream.to_vec();
        other[pos] = new;
        out.push((stream.to_vec(), other));
    }
    Ok(out)
}
